"""Table parsing, locale formats, error coordinates, plot payload assembly."""

from __future__ import annotations

from datetime import datetime

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eln import tabular
from eln.config import TabularConfig
from eln.errors import (
    EmptyTable,
    NoHeader,
    NonMonotonicTime,
    NonNumeric,
    NotFound,
    NotTabular,
    RaggedRow,
    TableError,
)
from eln.tabular import TableFormat, TimeSeriesTable, parse_table, plot_payload, serialize_table
from helpers import make_meta

T = datetime(2021, 2, 1, 17, 17, 0)


def test_minimal_table():
    table = parse_table("t,h\n0,1.0\n1,1.5")
    assert table.time_s == (0.0, 1.0)
    assert table.columns == {"h": (1.0, 1.5)}


def test_semicolon_delimiter_and_decimal_comma():
    fmt = TableFormat(delimiter=";", decimal_separator=",")
    table = parse_table("t;h\n0;1,5", fmt)
    assert table.columns["h"] == (1.5,)


def test_decimal_comma_rejects_stray_points():
    fmt = TableFormat(delimiter=";", decimal_separator=",")
    with pytest.raises(NonNumeric) as exc:
        parse_table("t;h\n0;1.5", fmt)
    assert (exc.value.row, exc.value.col) == (1, 2)


def test_ragged_row_coordinates():
    with pytest.raises(RaggedRow) as exc:
        parse_table("t,h\n0")
    assert exc.value.row == 1


def test_non_numeric_coordinates_are_one_based():
    with pytest.raises(NonNumeric) as exc:
        parse_table("t,h\n0,1.0\n1,oops")
    assert (exc.value.row, exc.value.col) == (2, 2)


def test_header_required():
    with pytest.raises(NoHeader):
        parse_table("")
    with pytest.raises(NoHeader):
        parse_table("0,1\n2,3")  # numbers in the first row: data, not names


def test_header_only_is_empty():
    with pytest.raises(EmptyTable):
        parse_table("t,h\n")


def test_header_names_must_be_sound():
    with pytest.raises(TableError):
        parse_table("t,,h\n0,1,2")
    with pytest.raises(TableError):
        parse_table("t,h,h\n0,1,2")


def test_named_time_column():
    fmt = TableFormat(time_column="sec")
    table = parse_table("h,sec\n1.0,0\n1.5,10", fmt)
    assert table.time_s == (0.0, 10.0)
    assert table.columns == {"h": (1.0, 1.5)}


def test_missing_time_column_name():
    fmt = TableFormat(time_column="sec")
    with pytest.raises(TableError):
        parse_table("t,h\n0,1", fmt)


def test_time_must_not_decrease():
    with pytest.raises(NonMonotonicTime) as exc:
        parse_table("t,h\n0,1\n5,2\n3,3")
    assert exc.value.row == 3


def test_equal_consecutive_times_allowed():
    table = parse_table("t,h\n0,1\n0,2")
    assert table.time_s == (0.0, 0.0)


def test_bytes_input_and_encoding_guard():
    assert parse_table(b"t,h\n0,1").columns["h"] == (1.0,)
    with pytest.raises(TableError):
        parse_table(b"\xff\xfe\x00bad")


def test_blank_lines_are_ignored():
    table = parse_table("t,h\n\n0,1\n\n1,2\n")
    assert table.time_s == (0.0, 1.0)


_names = st.from_regex(r"[a-z][a-z0-9_]{0,8}", fullmatch=True).filter(lambda s: s != "time_s")
_values = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=100)
@given(
    names=st.lists(_names, min_size=0, max_size=4, unique=True),
    times=st.lists(_values, min_size=1, max_size=20),
    data=st.data(),
)
def test_serialize_parse_roundtrip(names, times, data):
    time_s = tuple(sorted(times))
    columns = {
        name: tuple(data.draw(st.lists(_values, min_size=len(time_s), max_size=len(time_s))))
        for name in names
    }
    table = TimeSeriesTable(time_s=time_s, columns=columns)
    assert parse_table(serialize_table(table)) == table


# -- plot payload ---------------------------------------------------------------


@pytest.fixture
def plotted(catalog, tmp_path):
    catalog.register_sample("AA_01")

    def add(kind, at, rel, content):
        (tmp_path / rel).parent.mkdir(parents=True, exist_ok=True)
        (tmp_path / rel).write_text(content)
        meta = make_meta(sample_name="AA_01", observed_at=at, relative_path=rel,
                         extension=rel.rpartition(".")[2])
        entry, _ = catalog.upsert_entry(meta, kind=kind)
        return entry

    return catalog, tmp_path, add


def test_payload_offsets_and_order(plotted):
    catalog, root, add = plotted
    main = add("main", T, "m/osz.csv", "t,h\n0,1.0\n60,1.5")
    from datetime import timedelta

    late = add("sub", T + timedelta(seconds=600), "s/late.csv", "t,p\n0,930\n30,931")
    early = add("sub", T - timedelta(seconds=120), "s/early.csv", "t,p\n0,929")
    catalog.add_link(main.id, late.id, "main_sub")
    catalog.add_link(main.id, early.id, "main_sub")

    payload = plot_payload(catalog, root, main.id)
    assert payload["main"] == {"time_s": [0.0, 60.0], "columns": {"h": [1.0, 1.5]}}
    assert [s["entry_id"] for s in payload["subs"]] == [early.id, late.id]
    assert [s["offset_s"] for s in payload["subs"]] == [-120.0, 600.0]
    assert payload["subs"][1]["columns"] == {"p": [930.0, 931.0]}


def test_payload_without_subs(plotted):
    catalog, root, add = plotted
    main = add("main", T, "m/osz.csv", "t,h\n0,1.0")
    assert plot_payload(catalog, root, main.id)["subs"] == []


def test_non_tabular_entry_refused(plotted):
    catalog, root, add = plotted
    main = add("main", T, "m/osz.png", "not a table")
    with pytest.raises(NotTabular):
        plot_payload(catalog, root, main.id)


def test_unknown_entry(catalog, tmp_path):
    with pytest.raises(NotFound):
        plot_payload(catalog, tmp_path, 999)


def test_missing_file_on_disk(plotted):
    catalog, root, add = plotted
    main = add("main", T, "m/osz.csv", "t,h\n0,1.0")
    (root / "m/osz.csv").unlink()
    with pytest.raises(NotFound):
        plot_payload(catalog, root, main.id)


def test_broken_or_binary_subs_are_left_out(plotted):
    catalog, root, add = plotted
    from datetime import timedelta

    main = add("main", T, "m/osz.csv", "t,h\n0,1.0")
    broken = add("sub", T + timedelta(seconds=10), "s/broken.csv", "t,p\n0")
    image = add("sub", T + timedelta(seconds=20), "s/photo.png", "binary")
    good = add("sub", T + timedelta(seconds=30), "s/good.csv", "t,p\n0,1")
    for sub in (broken, image, good):
        catalog.add_link(main.id, sub.id, "main_sub")

    payload = plot_payload(catalog, root, main.id)
    assert [s["entry_id"] for s in payload["subs"]] == [good.id]


def test_per_device_format_override(plotted):
    catalog, root, add = plotted
    main = add("main", T, "m/osz.csv", "t;h\n0;1,5")
    cfg = TabularConfig(devices={"OCA": {"delimiter": ";", "decimal_separator": ","}})
    payload = plot_payload(catalog, root, main.id, cfg)
    assert payload["main"]["columns"]["h"] == [1.5]


def test_main_table_failure_propagates(plotted):
    catalog, root, add = plotted
    main = add("main", T, "m/osz.csv", "t,h\n0")
    with pytest.raises(RaggedRow):
        plot_payload(catalog, root, main.id)
