"""Engine facade: one object wiring store, scanner, linker and stamper.

Both the HTTP service and the command line drive the engine through this
class, which also owns the exclusivity locks for ingest and stamp runs.
"""

from __future__ import annotations

import threading
from datetime import datetime, timedelta
from pathlib import Path

from . import ingest, linker, tabular
from .catalog import Catalog, CatalogEntry, EntryFilter, Link, Note, PathRule, Sample
from .config import Config
from .errors import Busy, InvalidArgument
from .ingest import RecencyPolicy
from .stamper import Backend, HttpBackend, MockBackend, StampBatch, Stamper


def _build_backend(config: Config) -> Backend:
    if config.stamp.backend == "http":
        return HttpBackend(config.stamp.url, config.stamp.key)
    if config.stamp.backend == "mock":
        return MockBackend()
    raise InvalidArgument(f"unknown stamp backend {config.stamp.backend!r}")


class Engine:
    def __init__(self, config: Config, backend: Backend | None = None):
        self.config = config
        self.catalog = Catalog(config.store_path)
        self.stamper = Stamper(
            self.catalog,
            config.data_root,
            backend=backend if backend is not None else _build_backend(config),
            attempts=config.stamp.retry_attempts,
            base_delay_s=config.stamp.retry_base_delay_s,
        )
        self._ingest_lock = threading.Lock()

    def close(self) -> None:
        self.catalog.close()

    # -- ingest --------------------------------------------------------

    def ingest_run(
        self, now: datetime | None = None, recency_enabled: bool | None = None
    ) -> dict:
        """One exclusive ingest run; a second concurrent trigger gets Busy."""
        if not self._ingest_lock.acquire(blocking=False):
            raise Busy("an ingest run is already in progress")
        try:
            policy = RecencyPolicy(
                max_age=timedelta(days=self.config.ingest.max_age_days),
                enabled=self.config.ingest.recency_enabled
                if recency_enabled is None
                else recency_enabled,
            )
            return ingest.generate_entries(
                self.catalog,
                Path(self.config.data_root),
                policy,
                now=now,
                grammar_cfg=self.config.grammar,
                link_cfg=self.config.link,
                profiles=self.config.profiles,
            )
        finally:
            self._ingest_lock.release()

    def latest_report(self) -> dict:
        return self.catalog.latest_report()

    # -- catalog passthroughs -------------------------------------------

    def add_sample(self, name: str, kind: str = "", properties: dict | None = None) -> Sample:
        return self.catalog.register_sample(name, kind=kind, properties=properties)

    def add_rule(self, rule: PathRule) -> list[PathRule]:
        return self.catalog.register_path_rule(rule)

    def query(self, flt: EntryFilter) -> list[CatalogEntry]:
        return self.catalog.query_entries(flt)

    def add_manual_link(self, from_id: int, to_id: int, link_type: str) -> Link:
        return self.catalog.add_link(from_id, to_id, link_type, created_by="manual")

    def add_note(self, sample_name: str, body: str, written_at: datetime | None = None) -> Note:
        """Create a note and correlate it with existing entries."""
        note = self.catalog.add_note(sample_name, written_at or datetime.now(), body)
        linker.auto_link_note(self.catalog, note, self.config.link)
        return note

    def history(self, sample_name: str) -> list[CatalogEntry | Note]:
        return linker.sample_history(self.catalog, sample_name)

    # -- plotting --------------------------------------------------------

    def plot(self, entry_id: int) -> dict:
        return tabular.plot_payload(
            self.catalog, Path(self.config.data_root), entry_id, self.config.tabular
        )

    # -- stamping --------------------------------------------------------

    def stamp_run(self, now: datetime | None = None) -> StampBatch | None:
        return self.stamper.run_daily(now)

    def stamp_lookup(self, digest_hex: str) -> dict | None:
        if len(digest_hex) != 64:
            raise InvalidArgument("digest must be 64 hex characters")
        try:
            digest = bytes.fromhex(digest_hex)
        except ValueError:
            raise InvalidArgument("digest must be 64 hex characters") from None
        return self.stamper.lookup(digest)
