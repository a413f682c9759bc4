"""Measurement-table parsing and plot payload assembly.

Instrument exports are plain text tables with a header row. Formats vary by
vendor (semicolon delimiters, decimal commas), so the format is configurable
globally and per device. The engine never resamples: linked sub-series are
attached with their raw time axes plus one offset in seconds.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import Catalog
from .config import TabularConfig
from .errors import (
    EmptyTable,
    NoHeader,
    NonMonotonicTime,
    NonNumeric,
    NotFound,
    NotTabular,
    RaggedRow,
    TableError,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TableFormat:
    delimiter: str = ","
    decimal_separator: str = "."
    time_column: str | None = None  # None -> first column


@dataclass(frozen=True)
class TimeSeriesTable:
    """One parsed table: a time axis in seconds plus named value columns."""

    time_s: tuple[float, ...]
    columns: dict[str, tuple[float, ...]] = field(default_factory=dict)
    source_entry_id: int | None = None


def _parse_cell(raw: str, fmt: TableFormat, row: int, col: int) -> float:
    text = raw.strip()
    if fmt.decimal_separator != ".":
        if "." in text:
            # a '.' in a decimal-comma file means thousands grouping or junk
            raise NonNumeric(row, col, raw)
        text = text.replace(fmt.decimal_separator, ".")
    try:
        return float(text)
    except ValueError:
        raise NonNumeric(row, col, raw) from None


def _looks_numeric(cell: str, fmt: TableFormat) -> bool:
    try:
        _parse_cell(cell, fmt, 0, 0)
        return True
    except NonNumeric:
        return False


def parse_table(
    data: bytes | str, fmt: TableFormat | None = None, source_entry_id: int | None = None
) -> TimeSeriesTable:
    """Parse one delimited text table into a TimeSeriesTable.

    Row/column coordinates in errors are 1-based; row 1 is the first data
    row below the header.
    """
    fmt = fmt or TableFormat()
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TableError(f"table file is not UTF-8 text: {exc}") from None
    else:
        text = data

    rows = [r for r in csv.reader(io.StringIO(text), delimiter=fmt.delimiter) if any(c.strip() for c in r)]
    if not rows:
        raise NoHeader("file contains no rows")
    header = [c.strip() for c in rows[0]]
    if all(_looks_numeric(c, fmt) for c in header):
        raise NoHeader("first row is numeric data, not a header")
    if any(not c for c in header):
        raise TableError("header contains an empty column name")
    if len(set(header)) != len(header):
        raise TableError("header contains duplicate column names")

    data_rows = rows[1:]
    if not data_rows:
        raise EmptyTable("table has a header but no data rows")

    time_name = fmt.time_column if fmt.time_column is not None else header[0]
    if time_name not in header:
        raise TableError(f"time column {time_name!r} not in header {header}")
    time_index = header.index(time_name)

    parsed: list[list[float]] = []
    for r, row in enumerate(data_rows, start=1):
        if len(row) != len(header):
            raise RaggedRow(r)
        parsed.append([_parse_cell(cell, fmt, r, c) for c, cell in enumerate(row, start=1)])

    time_s = tuple(row[time_index] for row in parsed)
    for r in range(1, len(time_s)):
        if time_s[r] < time_s[r - 1]:
            raise NonMonotonicTime(r + 1)

    columns = {
        name: tuple(row[i] for row in parsed)
        for i, name in enumerate(header)
        if i != time_index
    }
    return TimeSeriesTable(time_s=time_s, columns=columns, source_entry_id=source_entry_id)


def serialize_table(table: TimeSeriesTable, fmt: TableFormat | None = None) -> str:
    """Inverse of parse_table for the canonical format (time column first)."""
    fmt = fmt or TableFormat()
    out = io.StringIO()
    writer = csv.writer(out, delimiter=fmt.delimiter, lineterminator="\n")
    writer.writerow(["time_s", *table.columns.keys()])
    series = list(table.columns.values())
    for i, t in enumerate(table.time_s):
        writer.writerow([repr(t), *(repr(col[i]) for col in series)])
    return out.getvalue()


def _format_for(device_code: str, cfg: TabularConfig) -> TableFormat:
    override = cfg.devices.get(device_code, {})
    time_column = override.get("time_column", cfg.time_column)
    return TableFormat(
        delimiter=str(override.get("delimiter", cfg.delimiter)),
        decimal_separator=str(override.get("decimal_separator", cfg.decimal_separator)),
        time_column=str(time_column) if time_column is not None else None,
    )


def _table_dict(table: TimeSeriesTable) -> dict:
    return {
        "time_s": list(table.time_s),
        "columns": {name: list(values) for name, values in table.columns.items()},
    }


def _load_entry_table(data_root: Path, catalog: Catalog, entry_id: int, cfg: TabularConfig) -> TimeSeriesTable:
    entry = catalog.get_entry(entry_id)
    path = data_root / entry.file_path
    try:
        raw = path.read_bytes()
    except OSError:
        raise NotFound(f"data file missing on disk: {entry.file_path}") from None
    return parse_table(raw, _format_for(entry.device_code, cfg), source_entry_id=entry.id)


def plot_payload(catalog: Catalog, data_root: Path, entry_id: int, cfg: TabularConfig | None = None) -> dict:
    """Main series plus every linked sub series with its time offset.

    offset_s is exactly sub.observed_at − main.observed_at in seconds; the
    client shifts sub axes by it to plot everything on absolute time. Subs
    that are not tables (or fail to parse) are left out with a log note —
    a broken pressure log must not take down the main plot.
    """
    cfg = cfg or TabularConfig()
    entry = catalog.get_entry(entry_id)
    if entry.extension not in cfg.extensions:
        raise NotTabular(f"extension {entry.extension!r} is not a configured table format")
    main_table = _load_entry_table(Path(data_root), catalog, entry_id, cfg)

    subs: list[dict] = []
    for link in catalog.links_for_entry(entry_id):
        if link.link_type != "main_sub" or link.from_id != entry_id:
            continue
        sub = catalog.get_entry(link.to_id)
        if sub.extension not in cfg.extensions:
            continue
        try:
            table = _load_entry_table(Path(data_root), catalog, sub.id, cfg)
        except (TableError, NotFound) as exc:
            log.warning("sub entry %d left out of plot: %s", sub.id, exc)
            continue
        offset_s = (sub.observed_at - entry.observed_at).total_seconds()
        subs.append({"entry_id": sub.id, "offset_s": offset_s, **_table_dict(table)})
    subs.sort(key=lambda s: (s["offset_s"], s["entry_id"]))
    return {"main": _table_dict(main_table), "subs": subs}
