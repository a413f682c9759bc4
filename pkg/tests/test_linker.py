"""Time-window correlation: eligibility, nearest-main exclusivity, notes, history."""

from __future__ import annotations

import random
from datetime import datetime, timedelta

import pytest

from eln import linker
from eln.catalog import Note
from eln.config import LinkConfig
from eln.errors import UnknownSample
from helpers import make_meta, oracle_sub_links

CFG = LinkConfig()  # pre=0, post=2h, notes 12h
T = datetime(2021, 2, 1, 17, 17, 0)


def _entry(catalog, kind, at, sample="AA_01", path=None):
    if not catalog.has_sample(sample):
        catalog.register_sample(sample)
    meta = make_meta(
        sample_name=sample,
        observed_at=at,
        relative_path=path or f"p/{kind}/{sample}/{at.isoformat()}",
    )
    entry, created = catalog.upsert_entry(meta, kind=kind)
    assert created
    return entry


def _auto_pairs(catalog):
    return {
        (l.from_id, l.to_id)
        for l in catalog.list_links("main_sub")
        if l.created_by == "auto"
    }


def test_sub_inside_window_is_linked(catalog):
    main = _entry(catalog, "main", T)
    sub = _entry(catalog, "sub", T + timedelta(minutes=13))
    links = linker.auto_link_subs(catalog, main, CFG)
    assert [(l.from_id, l.to_id) for l in links] == [(main.id, sub.id)]


def test_sub_one_second_before_window_is_not_linked(catalog):
    main = _entry(catalog, "main", T)
    _entry(catalog, "sub", T - timedelta(seconds=1))
    assert linker.auto_link_subs(catalog, main, CFG) == []


def test_window_edges_are_inclusive(catalog):
    main = _entry(catalog, "main", T)
    at_start = _entry(catalog, "sub", T, path="p/a")
    at_end = _entry(catalog, "sub", T + timedelta(hours=2), path="p/b")
    linker.auto_link_subs(catalog, main, CFG)
    assert _auto_pairs(catalog) == {(main.id, at_start.id), (main.id, at_end.id)}


def test_sub_links_to_covering_main_not_nearer_outsider(catalog):
    # With no pre-window, the later main's window has not opened yet at the
    # sub's timestamp, so proximity alone must not win.
    early = _entry(catalog, "main", datetime(2021, 2, 1, 17, 0), path="p/m1")
    _entry(catalog, "main", datetime(2021, 2, 1, 18, 0), path="p/m2")
    sub = _entry(catalog, "sub", datetime(2021, 2, 1, 17, 45), path="p/s")
    linker.auto_link_sub(catalog, sub, CFG)
    assert _auto_pairs(catalog) == {(early.id, sub.id)}


def test_nearest_eligible_main_wins(catalog):
    _entry(catalog, "main", T, path="p/m1")
    near = _entry(catalog, "main", T + timedelta(minutes=40), path="p/m2")
    sub = _entry(catalog, "sub", T + timedelta(minutes=45), path="p/s")
    linker.auto_link_sub(catalog, sub, CFG)
    assert _auto_pairs(catalog) == {(near.id, sub.id)}


def test_distance_tie_goes_to_earlier_main(catalog):
    cfg = LinkConfig(sub_pre_s=3600.0, sub_post_s=3600.0)
    earlier = _entry(catalog, "main", T - timedelta(minutes=30), path="p/m1")
    _entry(catalog, "main", T + timedelta(minutes=30), path="p/m2")
    sub = _entry(catalog, "sub", T, path="p/s")
    linker.auto_link_sub(catalog, sub, cfg)
    assert _auto_pairs(catalog) == {(earlier.id, sub.id)}


def test_new_closer_main_takes_over_the_sub(catalog):
    far = _entry(catalog, "main", T, path="p/m1")
    sub = _entry(catalog, "sub", T + timedelta(minutes=90), path="p/s")
    linker.auto_link_sub(catalog, sub, CFG)
    assert _auto_pairs(catalog) == {(far.id, sub.id)}

    near = _entry(catalog, "main", T + timedelta(minutes=80), path="p/m2")
    linker.auto_link_subs(catalog, near, CFG)
    # exclusivity: exactly one automatic home per sub, the nearer one
    assert _auto_pairs(catalog) == {(near.id, sub.id)}


def test_linking_is_order_independent(catalog):
    stamps = [
        ("main", T),
        ("main", T + timedelta(minutes=50)),
        ("sub", T + timedelta(minutes=20)),
        ("sub", T + timedelta(minutes=45)),
        ("sub", T + timedelta(hours=3)),
    ]
    orders = [list(range(5)), [2, 3, 4, 0, 1], [4, 0, 3, 1, 2]]
    results = []
    for order in orders:
        from eln.catalog import Catalog

        cat = Catalog(":memory:")
        cat.register_sample("AA_01")
        by_pos = {}
        for pos in order:
            kind, at = stamps[pos]
            entry = _entry(cat, kind, at, path=f"p/{pos}")
            by_pos[pos] = entry
            linker.auto_link(cat, entry, CFG)
        pairs = {
            (next(p for p, e in by_pos.items() if e.id == a), next(p for p, e in by_pos.items() if e.id == b))
            for a, b in _auto_pairs(cat)
        }
        results.append(pairs)
        cat.close()
    assert results[0] == results[1] == results[2]


def test_auto_linking_is_idempotent(catalog):
    main = _entry(catalog, "main", T)
    _entry(catalog, "sub", T + timedelta(minutes=10))
    linker.auto_link_subs(catalog, main, CFG)
    before = _auto_pairs(catalog)
    assert linker.auto_link_subs(catalog, main, CFG) == []
    assert _auto_pairs(catalog) == before


def test_manual_links_are_left_alone(catalog):
    main_a = _entry(catalog, "main", T, path="p/m1")
    main_b = _entry(catalog, "main", T + timedelta(minutes=80), path="p/m2")
    sub = _entry(catalog, "sub", T + timedelta(minutes=90), path="p/s")
    manual = catalog.add_link(main_a.id, sub.id, "main_sub", created_by="manual")
    linker.auto_link_sub(catalog, sub, CFG)
    # the manual attachment survives; the auto link picks the nearest main
    assert catalog.find_link(main_a.id, sub.id, "main_sub") == manual
    assert _auto_pairs(catalog) == {(main_b.id, sub.id)}


def test_auto_link_skips_pair_already_recorded_manually(catalog):
    main = _entry(catalog, "main", T, path="p/m")
    sub = _entry(catalog, "sub", T + timedelta(minutes=5), path="p/s")
    catalog.add_link(main.id, sub.id, "main_sub", created_by="manual")
    assert linker.auto_link_sub(catalog, sub, CFG) is None
    assert len(catalog.list_links("main_sub")) == 1


def test_subs_do_not_cross_samples(catalog):
    main = _entry(catalog, "main", T, sample="AA_01", path="p/m")
    _entry(catalog, "sub", T + timedelta(minutes=5), sample="BB_02", path="p/s")
    assert linker.auto_link_subs(catalog, main, CFG) == []


# -- notes --------------------------------------------------------------------


def test_note_within_window_is_linked(catalog):
    entry = _entry(catalog, "main", T)
    note = catalog.add_note("AA_01", T + timedelta(minutes=10), "gel cloudy")
    links = linker.auto_link_notes(catalog, entry, CFG)
    assert [(l.from_id, l.to_id) for l in links] == [(entry.id, note.id)]


def test_note_for_other_sample_is_not_linked(catalog):
    entry = _entry(catalog, "main", T, sample="AA_01")
    catalog.register_sample("BB_02")
    catalog.add_note("BB_02", T, "other specimen")
    assert linker.auto_link_notes(catalog, entry, CFG) == []


def test_note_outside_window_is_not_linked(catalog):
    entry = _entry(catalog, "main", T)
    catalog.add_note("AA_01", T + timedelta(hours=13), "too late")
    assert linker.auto_link_notes(catalog, entry, CFG) == []


def test_note_window_edge_is_inclusive(catalog):
    entry = _entry(catalog, "main", T)
    catalog.add_note("AA_01", T + timedelta(hours=12), "on the edge")
    assert len(linker.auto_link_notes(catalog, entry, CFG)) == 1


def test_fresh_note_picks_up_existing_entries(catalog):
    entry = _entry(catalog, "main", T)
    note = catalog.add_note("AA_01", T + timedelta(minutes=30), "written after ingest")
    links = linker.auto_link_note(catalog, note, CFG)
    assert [(l.from_id, l.to_id) for l in links] == [(entry.id, note.id)]
    # rerun creates nothing new
    assert linker.auto_link_note(catalog, note, CFG) == []


# -- history ------------------------------------------------------------------


def test_sample_history_merges_chronologically(catalog):
    e2 = _entry(catalog, "main", T + timedelta(hours=2), path="p/2")
    e1 = _entry(catalog, "main", T, path="p/1")
    note = catalog.add_note("AA_01", T + timedelta(hours=1), "between the two")
    history = linker.sample_history(catalog, "AA_01")
    assert [type(i) for i in history] == [type(e1), Note, type(e2)]
    assert [getattr(i, "id") for i in history] == [e1.id, note.id, e2.id]


def test_sample_history_unknown_sample(catalog):
    with pytest.raises(UnknownSample):
        linker.sample_history(catalog, "ZZ_99")


def test_sample_history_empty(catalog):
    catalog.register_sample("AA_01")
    assert linker.sample_history(catalog, "AA_01") == []


# -- randomized oracle (small copy; the full run lives in the acceptance suite) --


def test_matches_brute_force_oracle_on_random_fixtures(catalog):
    rng = random.Random(777)
    for round_no in range(15):
        from eln.catalog import Catalog

        cat = Catalog(":memory:")
        samples = ["AA_01", "BB_02"]
        for s in samples:
            cat.register_sample(s)
        mains, subs = [], []
        for i in range(rng.randint(1, 8)):
            at = T + timedelta(seconds=rng.randint(0, 4 * 3600))
            mains.append(_entry(cat, "main", at, rng.choice(samples), f"m/{round_no}/{i}"))
        for i in range(rng.randint(1, 20)):
            at = T + timedelta(seconds=rng.randint(-3600, 5 * 3600))
            subs.append(_entry(cat, "sub", at, rng.choice(samples), f"s/{round_no}/{i}"))
        for entry in mains + subs:
            linker.auto_link(cat, entry, CFG)
        expected = oracle_sub_links(mains, subs, CFG.sub_pre_s, CFG.sub_post_s)
        assert _auto_pairs(cat) == expected
        cat.close()
