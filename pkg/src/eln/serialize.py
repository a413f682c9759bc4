"""One canonical JSON dialect for every external surface.

The HTTP layer, the CLI's --json output and the contract tests all go
through these converters, so "the API response equals the serialized
engine result" is a byte-level statement.
"""

from __future__ import annotations

import json
from typing import Any

from .catalog import CatalogEntry, Link, Note, PathRule, Sample
from .stamper import StampBatch


def dumps(payload: Any) -> str:
    return json.dumps(payload, separators=(",", ":"), ensure_ascii=False)


def dumps_bytes(payload: Any) -> bytes:
    return dumps(payload).encode("utf-8")


def entry_to_dict(entry: CatalogEntry) -> dict:
    return {
        "id": entry.id,
        "kind": entry.kind,
        "device_code": entry.device_code,
        "sample_name": entry.sample_name,
        "observed_at": entry.observed_at.isoformat(),
        "file_path": entry.file_path,
        "description": entry.description,
        "extension": entry.extension,
        "extra": entry.extra,
        "created_at": entry.created_at.isoformat(),
    }


def sample_to_dict(sample: Sample) -> dict:
    return {
        "name": sample.name,
        "kind": sample.kind,
        "properties": sample.properties,
        "created_at": sample.created_at.isoformat(),
    }


def rule_to_dict(rule: PathRule) -> dict:
    return {
        "device_code": rule.device_code,
        "tree_kind": rule.tree_kind,
        "root_subpath": rule.root_subpath,
        "allowed_extensions": list(rule.allowed_extensions),
        "instrument_variant": rule.instrument_variant,
    }


def note_to_dict(note: Note) -> dict:
    return {
        "id": note.id,
        "sample_name": note.sample_name,
        "written_at": note.written_at.isoformat(),
        "body": note.body,
    }


def link_to_dict(link: Link) -> dict:
    return {
        "id": link.id,
        "from_id": link.from_id,
        "to_id": link.to_id,
        "link_type": link.link_type,
        "created_by": link.created_by,
    }


def history_item_to_dict(item: CatalogEntry | Note) -> dict:
    if isinstance(item, CatalogEntry):
        return {"type": "entry", **entry_to_dict(item)}
    return {"type": "note", **note_to_dict(item)}


def batch_to_dict(batch: StampBatch) -> dict:
    return {
        "batch_date": batch.batch_date.isoformat(),
        "leaves": [leaf.hex() for leaf in batch.leaves],
        "root": batch.root.hex(),
        "submitted_at": batch.submitted_at.isoformat() if batch.submitted_at else None,
        "backend_receipt": batch.backend_receipt,
    }
