"""Automatic time-window correlation between entries and notes.

A sub entry belongs to the main entry of the same sample whose
observation window covers it; when several windows cover it, the main
with the nearest timestamp wins. Automatic links are recomputed on
every ingest so the outcome never depends on arrival order. Manual
links are left untouched.
"""

from __future__ import annotations

import logging
from datetime import datetime

from .catalog import Catalog, CatalogEntry, EntryFilter, Link, Note
from .config import LinkConfig
from .errors import UnknownSample

log = logging.getLogger(__name__)


def in_window(main: CatalogEntry, sub: CatalogEntry, pre_s: float, post_s: float) -> bool:
    """True when sub falls inside [main − pre, main + post]."""
    delta_s = (sub.observed_at - main.observed_at).total_seconds()
    return -pre_s <= delta_s <= post_s


def nearest_key(main: CatalogEntry, sub: CatalogEntry) -> tuple[float, datetime, int]:
    # ties: earlier main first, then lower id
    return (
        abs((sub.observed_at - main.observed_at).total_seconds()),
        main.observed_at,
        main.id,
    )


def _relink_sub(
    catalog: Catalog, sub: CatalogEntry, mains: list[CatalogEntry], cfg: LinkConfig
) -> Link | None:
    """Point the sub's automatic link at the winning main.

    Returns the link created, or None when nothing changed or the pair
    was already recorded manually.
    """
    eligible = [m for m in mains if in_window(m, sub, cfg.sub_pre_s, cfg.sub_post_s)]
    existing = catalog.auto_sub_link_for(sub.id)
    if not eligible:
        if existing is not None:
            catalog.remove_link(existing.id)
        return None
    winner = min(eligible, key=lambda m: nearest_key(m, sub))
    if existing is not None:
        if existing.from_id == winner.id:
            return None
        catalog.remove_link(existing.id)
    if catalog.find_link(winner.id, sub.id, "main_sub") is not None:
        return None
    return catalog.add_link(winner.id, sub.id, "main_sub", created_by="auto")


def _sample_mains(catalog: Catalog, sample_name: str) -> list[CatalogEntry]:
    return catalog.query_entries(EntryFilter(sample=sample_name, kind="main"))


def auto_link_subs(catalog: Catalog, main: CatalogEntry, cfg: LinkConfig) -> list[Link]:
    """Correlate sub entries covered by this main's window.

    Each covered sub is re-pointed at its globally nearest eligible
    main, which may or may not be this one; links actually created are
    returned. Idempotent.
    """
    assert main.kind == "main"
    mains = _sample_mains(catalog, main.sample_name)
    subs = catalog.query_entries(EntryFilter(sample=main.sample_name, kind="sub"))
    created: list[Link] = []
    with catalog.transaction():
        for sub in sorted(subs, key=lambda s: s.id):
            if not in_window(main, sub, cfg.sub_pre_s, cfg.sub_post_s):
                continue
            link = _relink_sub(catalog, sub, mains, cfg)
            if link is not None:
                created.append(link)
    return created


def auto_link_sub(catalog: Catalog, sub: CatalogEntry, cfg: LinkConfig) -> Link | None:
    """Attach one sub entry to its nearest covering main, if any."""
    assert sub.kind == "sub"
    with catalog.transaction():
        return _relink_sub(catalog, sub, _sample_mains(catalog, sub.sample_name), cfg)


def auto_link_notes(catalog: Catalog, entry: CatalogEntry, cfg: LinkConfig) -> list[Link]:
    """Link every same-sample note written within the note window."""
    created: list[Link] = []
    with catalog.transaction():
        for note in catalog.list_notes(entry.sample_name):
            delta_s = abs((note.written_at - entry.observed_at).total_seconds())
            if delta_s > cfg.note_window_s:
                continue
            if catalog.find_link(entry.id, note.id, "entry_note") is None:
                created.append(catalog.add_link(entry.id, note.id, "entry_note", created_by="auto"))
    return created


def auto_link_note(catalog: Catalog, note: Note, cfg: LinkConfig) -> list[Link]:
    """Reverse direction: a fresh note picks up existing entries."""
    created: list[Link] = []
    with catalog.transaction():
        for entry in catalog.query_entries(EntryFilter(sample=note.sample_name)):
            delta_s = abs((note.written_at - entry.observed_at).total_seconds())
            if delta_s > cfg.note_window_s:
                continue
            if catalog.find_link(entry.id, note.id, "entry_note") is None:
                created.append(catalog.add_link(entry.id, note.id, "entry_note", created_by="auto"))
    return created


def auto_link(catalog: Catalog, entry: CatalogEntry, cfg: LinkConfig) -> list[Link]:
    """Run all automatic correlation for a newly ingested entry."""
    created: list[Link] = []
    with catalog.transaction():
        if entry.kind == "main":
            created.extend(auto_link_subs(catalog, entry, cfg))
        else:
            link = auto_link_sub(catalog, entry, cfg)
            if link is not None:
                created.append(link)
        created.extend(auto_link_notes(catalog, entry, cfg))
    return created


def sample_history(catalog: Catalog, sample_name: str) -> list[CatalogEntry | Note]:
    """Chronological merge of a sample's entries and notes."""
    if not catalog.has_sample(sample_name):
        raise UnknownSample(sample_name)
    entries = catalog.query_entries(EntryFilter(sample=sample_name))
    notes = catalog.list_notes(sample_name)

    def key(item: CatalogEntry | Note) -> tuple[datetime, int, int]:
        if isinstance(item, CatalogEntry):
            return (item.observed_at, item.id, 0)
        return (item.written_at, item.id, 1)

    return sorted([*entries, *notes], key=key)
