"""Folder and filename grammar for measurement trees.

A data tree follows a fixed layout per experiment kind::

    <tree root>/<device folder>/<YYYYMMDD>/<sample folder>/<HHMMSS_description.ext>

The device folder contains exactly one three-capital-letter device code
among its underscore-separated tokens (``01_OCA_35_XL`` -> ``OCA``); the
sample folder contains a sample code of two capital letters, an underscore
and two digits (``Probe_BA_01`` -> ``BA_01``); the filename may start with a
six-digit wall-clock time. Everything here is pure string work, safe to call
from any number of concurrent scanners.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date, datetime, time

from .errors import ParseFailure, UnreadableMetadata

SAMPLE_NAME_RE = re.compile(r"[A-Z]{2}_[0-9]{2}")
DEVICE_CODE_RE = re.compile(r"[A-Z]{3}")

# Six digits that end the stem or are followed by the separator underscore.
_TIME_PREFIX_RE = re.compile(r"^(\d{6})(?=_|$)")

TREE_KINDS = ("main", "sub")


@dataclass(frozen=True)
class PathGrammar:
    """Parameters of one tree: its root segment name and the entry kind."""

    root_marker: str
    tree_kind: str

    def __post_init__(self) -> None:
        if self.tree_kind not in TREE_KINDS:
            raise ValueError(f"tree_kind must be one of {TREE_KINDS}")


@dataclass(frozen=True)
class ParsedFileMeta:
    """Validated metadata extracted from one relative path.

    ``observed_at`` is None when the filename has no time prefix; the date
    part always comes from the date folder and is kept in ``folder_date`` so
    a caller can combine it with a fallback wall-clock time.
    """

    device_code: str
    sample_name: str
    observed_at: datetime | None
    description: str
    extension: str
    relative_path: str
    folder_date: date


def validate_sample_name(name: str) -> bool:
    """True iff ``name`` is exactly two capital letters, ``_``, two digits."""
    return SAMPLE_NAME_RE.fullmatch(name) is not None


def validate_device_code(code: str) -> bool:
    """True iff ``code`` is exactly three capital letters."""
    return DEVICE_CODE_RE.fullmatch(code) is not None


def extract_sample(segment: str) -> str:
    """Return the first sample code found in a folder segment.

    Sample folders are usually decorated (``Probe_BA_01``), so this searches
    for the first occurrence instead of matching the whole segment.
    """
    if not segment:
        raise ParseFailure(segment, "empty sample segment")
    match = SAMPLE_NAME_RE.search(segment)
    if match is None:
        raise ParseFailure(segment, "no sample code")
    return match.group(0)


def extract_device(segment: str) -> str:
    """Return the unique device code among the underscore-separated tokens."""
    tokens = segment.split("_")
    codes = [t for t in tokens if DEVICE_CODE_RE.fullmatch(t)]
    if not codes:
        raise ParseFailure(segment, "no device code token")
    if len(codes) > 1:
        raise ParseFailure(segment, "ambiguous device code")
    return codes[0]


def instrument_variant(segment: str) -> str:
    """Tokens after the device code, joined verbatim (``01_OCA_35_XL`` -> ``35_XL``)."""
    tokens = segment.split("_")
    for i, token in enumerate(tokens):
        if DEVICE_CODE_RE.fullmatch(token):
            return "_".join(tokens[i + 1 :])
    return ""


def parse_date_segment(segment: str) -> date:
    """Parse a YYYYMMDD folder segment into a calendar date."""
    if len(segment) != 8 or not segment.isdigit():
        raise ParseFailure(segment, "date segment is not YYYYMMDD")
    try:
        return datetime.strptime(segment, "%Y%m%d").date()
    except ValueError:
        raise ParseFailure(segment, "invalid calendar date") from None


def _split_segments(relative_path: str) -> list[str]:
    return [s for s in relative_path.replace("\\", "/").split("/") if s]


def parse_path(relative_path: str, grammar: PathGrammar) -> ParsedFileMeta:
    """Parse one data-root-relative path into validated metadata.

    The path must contain the grammar's root marker followed by at least the
    device, date and sample folders plus the filename. Extra folders between
    the sample folder and the file are tolerated and ignored.

    Raises ParseFailure naming the offending segment.
    """
    segments = _split_segments(relative_path)
    try:
        root_index = segments.index(grammar.root_marker)
    except ValueError:
        raise ParseFailure(
            relative_path, f"root marker {grammar.root_marker!r} not in path"
        ) from None
    below = segments[root_index + 1 :]
    if len(below) < 4:
        raise ParseFailure(
            relative_path, "expected device/date/sample folders and a filename below the tree root"
        )

    device_code = extract_device(below[0])
    folder_date = parse_date_segment(below[1])
    sample_name = extract_sample(below[2])
    filename = below[-1]

    stem, dot, ext = filename.rpartition(".")
    if not dot:
        stem, ext = filename, ""
    extension = ext.lower()

    observed_at: datetime | None = None
    description = stem
    time_match = _TIME_PREFIX_RE.match(stem)
    if time_match is not None:
        raw = time_match.group(1)
        hh, mm, ss = int(raw[0:2]), int(raw[2:4]), int(raw[4:6])
        if hh > 23 or mm > 59 or ss > 59:
            raise ParseFailure(filename, f"invalid time prefix {raw!r}")
        observed_at = datetime.combine(folder_date, time(hh, mm, ss))
        description = stem[6:]
        if description.startswith("_"):
            description = description[1:]
    if not description:
        raise ParseFailure(filename, "empty description")

    return ParsedFileMeta(
        device_code=device_code,
        sample_name=sample_name,
        observed_at=observed_at,
        description=description,
        extension=extension,
        relative_path="/".join(segments),
        folder_date=folder_date,
    )


def fallback_time(file_modification_time: datetime | None, date_folder: date) -> datetime:
    """Combine the date folder with the wall-clock time of the file mtime.

    Used only when the filename lacks a time prefix. The date always wins
    over the mtime's date: a file copied days later still belongs to the day
    its folder names.
    """
    if file_modification_time is None:
        raise UnreadableMetadata("file has no readable modification time")
    return datetime.combine(date_folder, file_modification_time.time())
