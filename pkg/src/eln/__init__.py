"""Lab notebook engine.

Folder-convention ingest, an embedded catalog with automatic time-window
linking, table plotting payloads, and Merkle-batched tamper evidence —
served over HTTP and a CLI.
"""

__version__ = "0.1.0"

from .catalog import Catalog, CatalogEntry, EntryFilter, Link, Note, PathRule, Sample
from .config import Config, load_config
from .engine import Engine

__all__ = [
    "Catalog",
    "CatalogEntry",
    "Config",
    "Engine",
    "EntryFilter",
    "Link",
    "Note",
    "PathRule",
    "Sample",
    "load_config",
    "__version__",
]
