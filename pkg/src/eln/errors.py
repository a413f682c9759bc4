"""Exception hierarchy shared by the whole engine.

Every error carries a stable ``code`` string; the HTTP layer maps codes to
status codes and the CLI maps any ``ElnError`` to exit code 1.
"""

from __future__ import annotations


class ElnError(Exception):
    """Base class for all engine errors."""

    code = "error"


class ParseFailure(ElnError):
    """A path segment did not conform to the folder grammar."""

    code = "parse_failure"

    def __init__(self, segment: str, reason: str):
        super().__init__(f"{reason} (segment: {segment!r})")
        self.segment = segment
        self.reason = reason


class UnreadableMetadata(ElnError):
    """The filesystem did not provide a modification time for a file."""

    code = "unreadable_metadata"


class UnknownSample(ElnError):
    """A referenced sample is not registered; register it first."""

    code = "unknown_sample"

    def __init__(self, name: str):
        super().__init__(f"unknown sample: {name!r}")
        self.name = name


class DuplicateKey(ElnError):
    code = "duplicate_key"


class NotFound(ElnError):
    code = "not_found"


class InvalidRange(ElnError):
    """Time range with start after end."""

    code = "invalid_range"


class InvalidLink(ElnError):
    """Link endpoints inconsistent with the link type."""

    code = "invalid_link"


class InvalidArgument(ElnError):
    code = "invalid_argument"


class RootUnreadable(ElnError):
    """The data root does not exist or cannot be read."""

    code = "root_unreadable"


class Busy(ElnError):
    """An exclusive operation (ingest run, stamp run) is already active."""

    code = "busy"


class NoReports(ElnError):
    """No ingest run has been persisted yet."""

    code = "no_reports"


class SchemaVersionMismatch(ElnError):
    """Store file was written by an incompatible engine version."""

    code = "schema_version"


class ConfigError(ElnError):
    code = "config_error"


# --- tabular ---------------------------------------------------------------


class TableError(ElnError):
    """Base class for measurement-table parsing errors."""

    code = "table_error"


class NoHeader(TableError):
    code = "no_header"


class EmptyTable(TableError):
    """Header present but no data rows."""

    code = "empty_table"


class RaggedRow(TableError):
    """A data row with a cell count different from the header."""

    code = "ragged_row"

    def __init__(self, row: int):
        super().__init__(f"row {row} has a different cell count than the header")
        self.row = row


class NonNumeric(TableError):
    """A data cell that does not parse as a number. Coordinates are 1-based."""

    code = "non_numeric"

    def __init__(self, row: int, col: int, value: str = ""):
        super().__init__(f"non-numeric value {value!r} at row {row}, column {col}")
        self.row = row
        self.col = col


class NonMonotonicTime(TableError):
    """Time column decreases between two consecutive rows."""

    code = "non_monotonic_time"

    def __init__(self, row: int):
        super().__init__(f"time column decreases at row {row}")
        self.row = row


class NotTabular(ElnError):
    """Entry's file extension is not in the configured tabular set."""

    code = "not_tabular"


# --- stamper ---------------------------------------------------------------


class ReadFailure(ElnError):
    """A data file could not be read for hashing."""

    code = "read_failure"


class EmptyBatch(ElnError):
    """A stamp batch needs at least one digest."""

    code = "empty_batch"


class BackendUnavailable(ElnError):
    """Anchoring backend rejected or never answered the submission."""

    code = "backend_unavailable"


class InvalidProof(ElnError):
    """Malformed inclusion proof (distinct from a well-formed failing one)."""

    code = "invalid_proof"
