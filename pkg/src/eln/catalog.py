"""Persistent catalog: entries, samples, path rules, notes, links, reports.

Backed by a single sqlite file so the whole notebook runs on a lab PC.
Mutations serialize through one writer lock; reads see committed state.
The schema is versioned via ``PRAGMA user_version``.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Iterator

from . import convention
from .convention import ParsedFileMeta
from .errors import (
    DuplicateKey,
    InvalidArgument,
    InvalidLink,
    InvalidRange,
    NoReports,
    NotFound,
    SchemaVersionMismatch,
    UnknownSample,
)

SCHEMA_VERSION = 1

LINK_TYPES = ("main_sub", "entry_note", "entry_analysis", "entry_entry")
ENTRY_KINDS = ("main", "sub")

_SCHEMA = """
CREATE TABLE samples (
    name TEXT PRIMARY KEY,
    kind TEXT NOT NULL DEFAULT '',
    properties TEXT NOT NULL DEFAULT '{}',
    created_at TEXT NOT NULL
);
CREATE TABLE entries (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    kind TEXT NOT NULL CHECK (kind IN ('main', 'sub')),
    device_code TEXT NOT NULL,
    sample_name TEXT NOT NULL REFERENCES samples(name),
    observed_at TEXT NOT NULL,
    file_path TEXT NOT NULL UNIQUE,
    description TEXT NOT NULL,
    extension TEXT NOT NULL,
    extra TEXT NOT NULL DEFAULT '{}',
    created_at TEXT NOT NULL
);
CREATE INDEX idx_entries_sample_time ON entries(sample_name, observed_at);
CREATE INDEX idx_entries_device ON entries(device_code);
CREATE TABLE path_rules (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    device_code TEXT NOT NULL,
    tree_kind TEXT NOT NULL CHECK (tree_kind IN ('main', 'sub')),
    root_subpath TEXT NOT NULL,
    allowed_extensions TEXT NOT NULL,
    instrument_variant TEXT NOT NULL DEFAULT '',
    UNIQUE (device_code, tree_kind)
);
CREATE TABLE notes (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    sample_name TEXT NOT NULL REFERENCES samples(name),
    written_at TEXT NOT NULL,
    body TEXT NOT NULL
);
CREATE INDEX idx_notes_sample_time ON notes(sample_name, written_at);
CREATE TABLE links (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    from_id INTEGER NOT NULL,
    to_id INTEGER NOT NULL,
    link_type TEXT NOT NULL CHECK (link_type IN ('main_sub', 'entry_note', 'entry_analysis', 'entry_entry')),
    created_by TEXT NOT NULL CHECK (created_by IN ('auto', 'manual')),
    UNIQUE (from_id, to_id, link_type)
);
CREATE TABLE reports (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    created_at TEXT NOT NULL,
    payload TEXT NOT NULL
);
CREATE TABLE stamp_batches (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    batch_date TEXT NOT NULL,
    leaves TEXT NOT NULL,
    root TEXT NOT NULL,
    submitted_at TEXT,
    backend_receipt TEXT
);
CREATE TABLE stamp_members (
    digest TEXT NOT NULL,
    entry_id INTEGER NOT NULL,
    batch_id INTEGER NOT NULL REFERENCES stamp_batches(id)
);
CREATE INDEX idx_stamp_members_entry ON stamp_members(entry_id);
CREATE INDEX idx_stamp_members_digest ON stamp_members(digest);
"""

REPORT_HISTORY = 50


@dataclass(frozen=True)
class CatalogEntry:
    id: int
    kind: str
    device_code: str
    sample_name: str
    observed_at: datetime
    file_path: str
    description: str
    extension: str
    extra: dict[str, str] = field(default_factory=dict)
    created_at: datetime = datetime.min


@dataclass(frozen=True)
class Sample:
    name: str
    kind: str = ""
    properties: dict[str, str] = field(default_factory=dict)
    created_at: datetime = datetime.min


@dataclass(frozen=True)
class PathRule:
    device_code: str
    tree_kind: str
    root_subpath: str
    allowed_extensions: tuple[str, ...]
    instrument_variant: str = ""


@dataclass(frozen=True)
class Note:
    id: int
    sample_name: str
    written_at: datetime
    body: str


@dataclass(frozen=True)
class Link:
    id: int
    from_id: int
    to_id: int
    link_type: str
    created_by: str


@dataclass(frozen=True)
class EntryFilter:
    """Conjunctive entry query; every provided predicate must hold."""

    sample: str | None = None
    device: str | None = None
    kind: str | None = None
    time_range: tuple[datetime, datetime] | None = None
    text: str | None = None
    extra_key_value: tuple[str, str] | None = None


def _iso(value: datetime) -> str:
    return value.isoformat()


def _parse_dt(value: str) -> datetime:
    return datetime.fromisoformat(value)


def _entry_from_row(row: sqlite3.Row) -> CatalogEntry:
    return CatalogEntry(
        id=row["id"],
        kind=row["kind"],
        device_code=row["device_code"],
        sample_name=row["sample_name"],
        observed_at=_parse_dt(row["observed_at"]),
        file_path=row["file_path"],
        description=row["description"],
        extension=row["extension"],
        extra=json.loads(row["extra"]),
        created_at=_parse_dt(row["created_at"]),
    )


def _link_from_row(row: sqlite3.Row) -> Link:
    return Link(
        id=row["id"],
        from_id=row["from_id"],
        to_id=row["to_id"],
        link_type=row["link_type"],
        created_by=row["created_by"],
    )


class Catalog:
    """Single-writer, multiple-reader store over one sqlite file."""

    def __init__(self, path: Path | str = ":memory:"):
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._conn.isolation_level = None  # explicit transaction control
        self._lock = threading.RLock()
        self._tx_depth = 0
        with self._lock:
            if str(path) != ":memory:":
                self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.execute("PRAGMA synchronous=FULL")
            version = self._conn.execute("PRAGMA user_version").fetchone()[0]
            if version == 0:
                self._conn.executescript(_SCHEMA)
                self._conn.execute(f"PRAGMA user_version = {SCHEMA_VERSION}")
            elif version != SCHEMA_VERSION:
                raise SchemaVersionMismatch(
                    f"store has schema version {version}, engine expects {SCHEMA_VERSION}"
                )

    def close(self) -> None:
        self._conn.close()

    @contextmanager
    def transaction(self) -> Iterator[None]:
        """Reentrant write transaction; commits once the outermost exits."""
        with self._lock:
            if self._tx_depth == 0:
                self._conn.execute("BEGIN IMMEDIATE")
            self._tx_depth += 1
            try:
                yield
            except BaseException:
                self._tx_depth -= 1
                if self._tx_depth == 0:
                    self._conn.execute("ROLLBACK")
                raise
            else:
                self._tx_depth -= 1
                if self._tx_depth == 0:
                    self._conn.execute("COMMIT")

    # -- samples -------------------------------------------------------

    def register_sample(
        self,
        name: str,
        kind: str = "",
        properties: dict[str, str] | None = None,
        created_at: datetime | None = None,
    ) -> Sample:
        if not convention.validate_sample_name(name):
            raise InvalidArgument(
                f"sample name {name!r} must be two capital letters, '_', two digits"
            )
        created = created_at or datetime.now()
        with self.transaction():
            try:
                self._conn.execute(
                    "INSERT INTO samples (name, kind, properties, created_at) VALUES (?, ?, ?, ?)",
                    (name, kind, json.dumps(properties or {}), _iso(created)),
                )
            except sqlite3.IntegrityError:
                raise DuplicateKey(f"sample {name!r} already registered") from None
        return Sample(name=name, kind=kind, properties=dict(properties or {}), created_at=created)

    def get_sample(self, name: str) -> Sample:
        row = self._conn.execute("SELECT * FROM samples WHERE name = ?", (name,)).fetchone()
        if row is None:
            raise NotFound(f"sample {name!r} not found")
        return Sample(
            name=row["name"],
            kind=row["kind"],
            properties=json.loads(row["properties"]),
            created_at=_parse_dt(row["created_at"]),
        )

    def has_sample(self, name: str) -> bool:
        row = self._conn.execute("SELECT 1 FROM samples WHERE name = ?", (name,)).fetchone()
        return row is not None

    def list_samples(self) -> list[Sample]:
        rows = self._conn.execute("SELECT name FROM samples ORDER BY name").fetchall()
        return [self.get_sample(r["name"]) for r in rows]

    # -- path rules ----------------------------------------------------

    def register_path_rule(self, rule: PathRule) -> list[PathRule]:
        """Add one rule and return the whole registry."""
        if not convention.validate_device_code(rule.device_code):
            raise InvalidArgument(f"device code {rule.device_code!r} must be three capital letters")
        if rule.tree_kind not in ENTRY_KINDS:
            raise InvalidArgument(f"tree kind must be one of {ENTRY_KINDS}")
        extensions = tuple(sorted({e.lower().lstrip(".") for e in rule.allowed_extensions}))
        if not extensions or any(not e for e in extensions):
            raise InvalidArgument("rule needs at least one non-empty file extension")
        with self.transaction():
            try:
                self._conn.execute(
                    "INSERT INTO path_rules (device_code, tree_kind, root_subpath,"
                    " allowed_extensions, instrument_variant) VALUES (?, ?, ?, ?, ?)",
                    (
                        rule.device_code,
                        rule.tree_kind,
                        rule.root_subpath.replace("\\", "/").strip("/"),
                        json.dumps(list(extensions)),
                        rule.instrument_variant,
                    ),
                )
            except sqlite3.IntegrityError:
                raise DuplicateKey(
                    f"rule for ({rule.device_code}, {rule.tree_kind}) already registered"
                ) from None
        return self.list_path_rules()

    def list_path_rules(self) -> list[PathRule]:
        rows = self._conn.execute("SELECT * FROM path_rules ORDER BY id").fetchall()
        return [
            PathRule(
                device_code=r["device_code"],
                tree_kind=r["tree_kind"],
                root_subpath=r["root_subpath"],
                allowed_extensions=tuple(json.loads(r["allowed_extensions"])),
                instrument_variant=r["instrument_variant"],
            )
            for r in rows
        ]

    # -- entries -------------------------------------------------------

    def upsert_entry(
        self,
        meta: ParsedFileMeta,
        kind: str,
        extra: dict[str, str] | None = None,
        extra_profile: list[str] | None = None,
        created_at: datetime | None = None,
    ) -> tuple[CatalogEntry, bool]:
        """Insert a new entry or return the existing one for the same path.

        An existing entry is returned unchanged even when the incoming
        metadata differs; the first ingest wins and the ID never moves.
        """
        if kind not in ENTRY_KINDS:
            raise InvalidArgument(f"entry kind must be one of {ENTRY_KINDS}")
        if meta.observed_at is None:
            raise InvalidArgument("entry requires a timestamp; apply the fallback time first")
        extra = dict(extra or {})
        if extra_profile is not None:
            unknown = set(extra) - set(extra_profile)
            if unknown:
                raise InvalidArgument(
                    f"extra keys {sorted(unknown)} not allowed for device {meta.device_code}"
                )
        with self.transaction():
            row = self._conn.execute(
                "SELECT * FROM entries WHERE file_path = ?", (meta.relative_path,)
            ).fetchone()
            if row is not None:
                return _entry_from_row(row), False
            if not self.has_sample(meta.sample_name):
                raise UnknownSample(meta.sample_name)
            created = created_at or datetime.now()
            cursor = self._conn.execute(
                "INSERT INTO entries (kind, device_code, sample_name, observed_at, file_path,"
                " description, extension, extra, created_at) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)",
                (
                    kind,
                    meta.device_code,
                    meta.sample_name,
                    _iso(meta.observed_at),
                    meta.relative_path,
                    meta.description,
                    meta.extension,
                    json.dumps(extra),
                    _iso(created),
                ),
            )
            entry_id = cursor.lastrowid
        return self.get_entry(entry_id), True

    def get_entry(self, entry_id: int) -> CatalogEntry:
        row = self._conn.execute("SELECT * FROM entries WHERE id = ?", (entry_id,)).fetchone()
        if row is None:
            raise NotFound(f"entry {entry_id} not found")
        return _entry_from_row(row)

    def delete_entry(self, entry_id: int) -> bool:
        """Remove an entry and every link touching it."""
        with self.transaction():
            row = self._conn.execute("SELECT id FROM entries WHERE id = ?", (entry_id,)).fetchone()
            if row is None:
                raise NotFound(f"entry {entry_id} not found")
            self._conn.execute(
                "DELETE FROM links WHERE from_id = ? OR (to_id = ? AND link_type != 'entry_note')",
                (entry_id, entry_id),
            )
            self._conn.execute("DELETE FROM entries WHERE id = ?", (entry_id,))
        return True

    def query_entries(self, flt: EntryFilter | None = None) -> list[CatalogEntry]:
        """Entries matching all provided predicates, newest first.

        Ordered by observed_at descending, then id descending. The text
        predicate is a case-insensitive substring over the description and
        the bodies of linked notes.
        """
        flt = flt or EntryFilter()
        clauses: list[str] = []
        params: list[object] = []
        if flt.sample is not None:
            clauses.append("sample_name = ?")
            params.append(flt.sample)
        if flt.device is not None:
            clauses.append("device_code = ?")
            params.append(flt.device)
        if flt.kind is not None:
            clauses.append("kind = ?")
            params.append(flt.kind)
        if flt.time_range is not None:
            start, end = flt.time_range
            if start > end:
                raise InvalidRange(f"time range starts after it ends: {start} > {end}")
            clauses.append("observed_at >= ? AND observed_at <= ?")
            params.extend([_iso(start), _iso(end)])
        sql = "SELECT * FROM entries"
        if clauses:
            sql += " WHERE " + " AND ".join(clauses)
        sql += " ORDER BY observed_at DESC, id DESC"
        entries = [_entry_from_row(r) for r in self._conn.execute(sql, params).fetchall()]
        if flt.extra_key_value is not None:
            key, value = flt.extra_key_value
            entries = [e for e in entries if e.extra.get(key) == value]
        if flt.text is not None:
            needle = flt.text.lower()
            entries = [e for e in entries if self._matches_text(e, needle)]
        return entries

    def _matches_text(self, entry: CatalogEntry, needle: str) -> bool:
        if needle in entry.description.lower():
            return True
        return any(needle in note.body.lower() for note in self.notes_for_entry(entry.id))

    # -- notes ---------------------------------------------------------

    def add_note(self, sample_name: str, written_at: datetime, body: str) -> Note:
        with self.transaction():
            if not self.has_sample(sample_name):
                raise UnknownSample(sample_name)
            cursor = self._conn.execute(
                "INSERT INTO notes (sample_name, written_at, body) VALUES (?, ?, ?)",
                (sample_name, _iso(written_at), body),
            )
            note_id = cursor.lastrowid
        return Note(id=note_id, sample_name=sample_name, written_at=written_at, body=body)

    def get_note(self, note_id: int) -> Note:
        row = self._conn.execute("SELECT * FROM notes WHERE id = ?", (note_id,)).fetchone()
        if row is None:
            raise NotFound(f"note {note_id} not found")
        return Note(
            id=row["id"],
            sample_name=row["sample_name"],
            written_at=_parse_dt(row["written_at"]),
            body=row["body"],
        )

    def list_notes(self, sample_name: str | None = None) -> list[Note]:
        if sample_name is None:
            rows = self._conn.execute("SELECT id FROM notes ORDER BY id").fetchall()
        else:
            rows = self._conn.execute(
                "SELECT id FROM notes WHERE sample_name = ? ORDER BY id", (sample_name,)
            ).fetchall()
        return [self.get_note(r["id"]) for r in rows]

    def notes_for_entry(self, entry_id: int) -> list[Note]:
        rows = self._conn.execute(
            "SELECT to_id FROM links WHERE from_id = ? AND link_type = 'entry_note' ORDER BY to_id",
            (entry_id,),
        ).fetchall()
        return [self.get_note(r["to_id"]) for r in rows]

    # -- links ---------------------------------------------------------

    def _require_entry_kind(self, entry_id: int, kind: str | None, role: str) -> None:
        try:
            entry = self.get_entry(entry_id)
        except NotFound:
            raise NotFound(f"{role} entry {entry_id} not found") from None
        if kind is not None and entry.kind != kind:
            raise InvalidLink(f"{role} of a main_sub link must be a {kind} entry")

    def add_link(self, from_id: int, to_id: int, link_type: str, created_by: str = "manual") -> Link:
        if link_type not in LINK_TYPES:
            raise InvalidArgument(f"link type must be one of {LINK_TYPES}")
        if created_by not in ("auto", "manual"):
            raise InvalidArgument("created_by must be 'auto' or 'manual'")
        with self.transaction():
            if link_type == "main_sub":
                self._require_entry_kind(from_id, "main", "source")
                self._require_entry_kind(to_id, "sub", "target")
            elif link_type == "entry_note":
                self._require_entry_kind(from_id, None, "source")
                self.get_note(to_id)
            else:
                self._require_entry_kind(from_id, None, "source")
                self._require_entry_kind(to_id, None, "target")
            try:
                cursor = self._conn.execute(
                    "INSERT INTO links (from_id, to_id, link_type, created_by) VALUES (?, ?, ?, ?)",
                    (from_id, to_id, link_type, created_by),
                )
            except sqlite3.IntegrityError:
                raise DuplicateKey(
                    f"link ({from_id}, {to_id}, {link_type}) already exists"
                ) from None
            link_id = cursor.lastrowid
        return Link(id=link_id, from_id=from_id, to_id=to_id, link_type=link_type, created_by=created_by)

    def remove_link(self, link_id: int) -> None:
        with self.transaction():
            cursor = self._conn.execute("DELETE FROM links WHERE id = ?", (link_id,))
            if cursor.rowcount == 0:
                raise NotFound(f"link {link_id} not found")

    def find_link(self, from_id: int, to_id: int, link_type: str) -> Link | None:
        row = self._conn.execute(
            "SELECT * FROM links WHERE from_id = ? AND to_id = ? AND link_type = ?",
            (from_id, to_id, link_type),
        ).fetchone()
        return None if row is None else _link_from_row(row)

    def links_for_entry(self, entry_id: int) -> list[Link]:
        rows = self._conn.execute(
            "SELECT * FROM links WHERE from_id = ?"
            " OR (to_id = ? AND link_type != 'entry_note') ORDER BY id",
            (entry_id, entry_id),
        ).fetchall()
        return [_link_from_row(r) for r in rows]

    def list_links(self, link_type: str | None = None) -> list[Link]:
        if link_type is None:
            rows = self._conn.execute("SELECT * FROM links ORDER BY id").fetchall()
        else:
            rows = self._conn.execute(
                "SELECT * FROM links WHERE link_type = ? ORDER BY id", (link_type,)
            ).fetchall()
        return [_link_from_row(r) for r in rows]

    def auto_sub_link_for(self, sub_id: int) -> Link | None:
        """The at-most-one automatic main_sub link pointing at a sub entry."""
        row = self._conn.execute(
            "SELECT * FROM links WHERE to_id = ? AND link_type = 'main_sub'"
            " AND created_by = 'auto'",
            (sub_id,),
        ).fetchone()
        return None if row is None else _link_from_row(row)

    # -- reports -------------------------------------------------------

    def save_report(self, payload: dict, created_at: datetime | None = None) -> None:
        """Persist one ingest report, keeping only the most recent runs."""
        created = created_at or datetime.now()
        with self.transaction():
            self._conn.execute(
                "INSERT INTO reports (created_at, payload) VALUES (?, ?)",
                (_iso(created), json.dumps(payload)),
            )
            self._conn.execute(
                "DELETE FROM reports WHERE id NOT IN"
                " (SELECT id FROM reports ORDER BY id DESC LIMIT ?)",
                (REPORT_HISTORY,),
            )

    def latest_report(self) -> dict:
        row = self._conn.execute("SELECT payload FROM reports ORDER BY id DESC LIMIT 1").fetchone()
        if row is None:
            raise NoReports("no ingest run recorded yet")
        return json.loads(row["payload"])

    def report_count(self) -> int:
        return self._conn.execute("SELECT COUNT(*) FROM reports").fetchone()[0]

    # -- stamp batches ---------------------------------------------------

    def save_stamp_batch(
        self,
        batch_date: date,
        leaves: list[bytes],
        root: bytes,
        members: list[tuple[int, bytes]],
        submitted_at: datetime | None = None,
        backend_receipt: str | None = None,
    ) -> int:
        with self.transaction():
            cursor = self._conn.execute(
                "INSERT INTO stamp_batches (batch_date, leaves, root, submitted_at,"
                " backend_receipt) VALUES (?, ?, ?, ?, ?)",
                (
                    batch_date.isoformat(),
                    json.dumps([leaf.hex() for leaf in leaves]),
                    root.hex(),
                    _iso(submitted_at) if submitted_at else None,
                    backend_receipt,
                ),
            )
            batch_id = cursor.lastrowid
            self._conn.executemany(
                "INSERT INTO stamp_members (digest, entry_id, batch_id) VALUES (?, ?, ?)",
                [(digest.hex(), entry_id, batch_id) for entry_id, digest in members],
            )
        return batch_id

    def mark_batch_submitted(self, batch_id: int, submitted_at: datetime, receipt: str) -> None:
        with self.transaction():
            cursor = self._conn.execute(
                "UPDATE stamp_batches SET submitted_at = ?, backend_receipt = ? WHERE id = ?",
                (_iso(submitted_at), receipt, batch_id),
            )
            if cursor.rowcount == 0:
                raise NotFound(f"stamp batch {batch_id} not found")

    def _batch_row_tuple(self, row: sqlite3.Row) -> tuple[int, dict]:
        return (
            row["id"],
            {
                "batch_date": date.fromisoformat(row["batch_date"]),
                "leaves": [bytes.fromhex(h) for h in json.loads(row["leaves"])],
                "root": bytes.fromhex(row["root"]),
                "submitted_at": _parse_dt(row["submitted_at"]) if row["submitted_at"] else None,
                "backend_receipt": row["backend_receipt"],
            },
        )

    def pending_stamp_batches(self) -> list[tuple[int, dict]]:
        rows = self._conn.execute(
            "SELECT * FROM stamp_batches WHERE submitted_at IS NULL ORDER BY id"
        ).fetchall()
        return [self._batch_row_tuple(r) for r in rows]

    def list_stamp_batches(self) -> list[tuple[int, dict]]:
        rows = self._conn.execute("SELECT * FROM stamp_batches ORDER BY id").fetchall()
        return [self._batch_row_tuple(r) for r in rows]

    def find_stamp_batch_with_leaf(self, digest: bytes) -> dict | None:
        """Earliest batch containing the digest; earliest anchors prove best."""
        row = self._conn.execute(
            "SELECT b.* FROM stamp_batches b JOIN stamp_members m ON m.batch_id = b.id"
            " WHERE m.digest = ? ORDER BY b.id LIMIT 1",
            (digest.hex(),),
        ).fetchone()
        return None if row is None else self._batch_row_tuple(row)[1]

    def unstamped_entries(self) -> list[CatalogEntry]:
        rows = self._conn.execute(
            "SELECT * FROM entries WHERE id NOT IN (SELECT entry_id FROM stamp_members)"
            " ORDER BY id"
        ).fetchall()
        return [_entry_from_row(r) for r in rows]
