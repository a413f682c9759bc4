"""Shared fixture builders: synthetic metadata, trees, and brute-force oracles."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from pathlib import Path

from eln.catalog import Catalog, CatalogEntry, PathRule
from eln.convention import ParsedFileMeta

MAIN_DEVICES = [
    ("OCA", "01_Main_Exp/01_OCA_35_XL", ("png", "csv")),
    ("TGA", "01_Main_Exp/02_TGA", ("csv",)),
]
SUB_DEVICES = [
    ("PRE", "02_Sub_Exp/01_PRE", ("csv", "txt")),
    ("HUM", "02_Sub_Exp/02_HUM_9", ("dat",)),
]
SAMPLES = ["AA_01", "BB_02", "CC_03", "DD_04"]
WORDS = ["osz", "heat", "ramp", "sweep", "hold", "cool", "shear", "creep"]


def make_meta(
    device_code: str = "OCA",
    sample_name: str = "AA_01",
    observed_at: datetime | None = datetime(2021, 2, 1, 17, 17, 0),
    relative_path: str | None = None,
    description: str = "osz",
    extension: str = "png",
    folder_date: date | None = None,
) -> ParsedFileMeta:
    """Synthetic parsed metadata for direct catalog insertion."""
    if relative_path is None:
        stamp = observed_at.strftime("%Y%m%d/%H%M%S") if observed_at else "20210201/x"
        relative_path = f"01_Main_Exp/01_{device_code}/{stamp}_{description}_{random.random()}.{extension}"
    return ParsedFileMeta(
        device_code=device_code,
        sample_name=sample_name,
        observed_at=observed_at,
        description=description,
        extension=extension,
        relative_path=relative_path,
        folder_date=folder_date or (observed_at.date() if observed_at else date(2021, 2, 1)),
    )


def put_file(
    data_root: Path,
    device_subpath: str,
    date_folder: str,
    sample_folder: str,
    filename: str,
    content: bytes = b"data\n",
) -> Path:
    folder = data_root / device_subpath / date_folder / sample_folder
    folder.mkdir(parents=True, exist_ok=True)
    target = folder / filename
    target.write_bytes(content)
    return target


def register_standard_rules(catalog: Catalog) -> None:
    for code, subpath, exts in MAIN_DEVICES:
        catalog.register_path_rule(PathRule(code, "main", subpath, exts))
    for code, subpath, exts in SUB_DEVICES:
        catalog.register_path_rule(PathRule(code, "sub", subpath, exts))


def register_standard_samples(catalog: Catalog) -> None:
    for name in SAMPLES:
        catalog.register_sample(name)


def random_tree(rng: random.Random, data_root: Path, now: datetime, max_files: int = 50) -> int:
    """Populate a tree with a controlled mix of good and skippable files.

    Returns the number of files written. Deterministic for a given seed, so
    double-ingest comparisons see the same tree.
    """
    n_files = rng.randint(1, max_files)
    written: set[str] = set()
    count = 0
    for i in range(n_files):
        if rng.random() < 0.08:
            # under a tree marker but outside every rule's subpath
            device_subpath = rng.choice(["01_Main_Exp/99_UNREG", "02_Sub_Exp/99_UNREG"])
            exts = ("png", "csv")
        else:
            code, device_subpath, exts = rng.choice(MAIN_DEVICES + SUB_DEVICES)
        day = now - timedelta(days=rng.randint(0, 7), seconds=rng.randint(0, 3600))
        date_folder = day.strftime("%Y%m%d")

        roll = rng.random()
        if roll < 0.72:
            sample_folder = f"Probe_{rng.choice(SAMPLES)}"
        elif roll < 0.82:
            sample_folder = "Probe_ZZ_99"  # never registered
        else:
            sample_folder = "probe"  # no sample code at all

        roll = rng.random()
        word = rng.choice(WORDS)
        if roll < 0.75:
            stem = f"{rng.randint(0, 23):02d}{rng.randint(0, 59):02d}{rng.randint(0, 59):02d}_{word}"
        elif roll < 0.82:
            stem = f"99{rng.randint(60, 99):02d}60_{word}"  # impossible wall-clock time
        else:
            stem = word  # no time prefix; scanner falls back to mtime

        extension = rng.choice(exts) if rng.random() < 0.8 else "tmp"
        filename = f"{stem}.{extension}"
        rel = f"{device_subpath}/{date_folder}/{sample_folder}/{filename}"
        if rel in written:
            continue
        written.add(rel)
        put_file(data_root, device_subpath, date_folder, sample_folder, filename, content=f"{i}\n".encode())
        count += 1
    return count


def catalog_snapshot(catalog: Catalog) -> str:
    """Canonical dump of all durable state except per-run report artifacts."""
    tables = ("samples", "entries", "path_rules", "notes", "links", "stamp_batches", "stamp_members")
    dump: dict[str, list] = {}
    for table in tables:
        rows = catalog._conn.execute(f"SELECT * FROM {table} ORDER BY 1").fetchall()
        dump[table] = [dict(r) for r in rows]
    return json.dumps(dump, sort_keys=True)


@dataclass(frozen=True)
class OracleItem:
    id: int
    t: datetime


def oracle_sub_links(
    mains: list[CatalogEntry], subs: list[CatalogEntry], pre_s: float, post_s: float
) -> set[tuple[int, int]]:
    """Brute-force expected (main_id, sub_id) pairs under the nearest rule."""
    expected: set[tuple[int, int]] = set()
    for sub in subs:
        eligible = [
            m
            for m in mains
            if m.sample_name == sub.sample_name
            and -pre_s <= (sub.observed_at - m.observed_at).total_seconds() <= post_s
        ]
        if not eligible:
            continue
        winner = min(
            eligible,
            key=lambda m: (
                abs((sub.observed_at - m.observed_at).total_seconds()),
                m.observed_at,
                m.id,
            ),
        )
        expected.add((winner.id, sub.id))
    return expected
