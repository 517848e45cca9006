"""Coverage map, bucketing, edge hashing and scope filtering."""

import random

from hypothesis import given
from hypothesis import strategies as st

from hwfuzz import (
    MAP_SIZE,
    Component,
    CoverageMap,
    EdgeTracer,
    FsmCoverage,
    ScopeFilter,
    bucket_class,
    edge_index,
    fsm_coverage_fraction,
    is_interesting,
    merge,
)

# independent statement of the bucket boundaries: class k covers
# counts [lo, hi]
BUCKET_RANGES = {
    0: (0, 0),
    1: (1, 1),
    2: (2, 2),
    3: (3, 3),
    4: (4, 7),
    5: (8, 15),
    6: (16, 31),
    7: (32, 127),
    8: (128, 255),
}


def test_bucket_class_matches_range_table():
    for cls, (lo, hi) in BUCKET_RANGES.items():
        for count in range(lo, hi + 1):
            assert bucket_class(count) == cls


def test_bucket_class_is_monotonic():
    classes = [bucket_class(c) for c in range(256)]
    assert classes == sorted(classes)
    assert set(classes) == set(range(9))


def test_edge_index_shift_xor_examples():
    # hand-computed: (prev >> 1) ^ cur, masked to 16 bits
    assert edge_index(0x0000, 0x0000) == 0x0000
    assert edge_index(0x1000, 0x1001) == 0x0800 ^ 0x1001  # 0x1801
    assert edge_index(0xFFFF, 0x0000) == 0x7FFF
    assert edge_index(0x0002, 0x0001) == 0x0000  # collision by design
    assert edge_index(0x1357, 0x9BDF) == ((0x1357 >> 1) ^ 0x9BDF) & 0xFFFF


@given(st.integers(0, 0xFFFF), st.integers(0, 0xFFFF))
def test_edge_index_in_map_range(prev, cur):
    assert 0 <= edge_index(prev, cur) < MAP_SIZE


def test_hit_saturates_at_255():
    cmap = CoverageMap()
    for _ in range(300):
        cmap.hit(7)
    assert cmap.buckets[7] == 255
    assert cmap.covered_edge_count == 1


def test_clear_resets_touched_counters():
    cmap = CoverageMap()
    cmap.hit(1)
    cmap.hit(2)
    cmap.clear()
    assert cmap.covered_edge_count == 0
    assert cmap.as_bytes() == bytes(MAP_SIZE)


def test_merge_counts_raised_classes():
    global_map = CoverageMap()
    test_map = CoverageMap()
    for _ in range(5):  # count 5 -> class 4
        test_map.hit(10)
    test_map.hit(11)  # count 1 -> class 1
    assert merge(global_map, test_map) == 2
    assert global_map.buckets[10] == 4
    assert global_map.buckets[11] == 1
    # same map again raises nothing
    assert merge(global_map, test_map) == 0


def test_merge_raises_on_class_growth_only():
    global_map = CoverageMap()
    first = CoverageMap()
    first.hit(3)  # class 1
    merge(global_map, first)
    second = CoverageMap()
    second.hit(3)  # class 1 again: not a raise
    assert merge(global_map, second) == 0
    third = CoverageMap()
    for _ in range(2):  # class 2: a raise
        third.hit(3)
    assert merge(global_map, third) == 1


def test_is_interesting_tracks_global_classes():
    global_map = CoverageMap()
    test_map = CoverageMap()
    test_map.hit(42)
    assert is_interesting(test_map, global_map)
    merge(global_map, test_map)
    assert not is_interesting(test_map, global_map)
    for _ in range(3):
        test_map.hit(42)  # now count 4 -> class 4 > recorded 1
    assert is_interesting(test_map, global_map)


@given(st.lists(st.integers(0, MAP_SIZE - 1), max_size=64))
def test_merge_is_idempotent_and_monotonic(indices):
    global_map = CoverageMap()
    test_map = CoverageMap()
    for index in indices:
        test_map.hit(index)
    merge(global_map, test_map)
    before = global_map.as_bytes()
    assert merge(global_map, test_map) == 0
    assert global_map.as_bytes() == before
    assert global_map.covered_indices() == test_map.covered_indices()


_SITE_EVENTS = st.lists(
    st.tuples(
        st.integers(0, 0xFFFF),
        st.sampled_from([Component.DUT, Component.HARNESS, Component.BUS]),
    ),
    max_size=64,
)


@given(_SITE_EVENTS)
def test_dut_only_map_is_subset_of_all_map(events):
    # prev advances on filtered sites too, so the same edge indices
    # appear under both scopes and DutOnly is a per-edge subset
    all_map = CoverageMap()
    dut_map = CoverageMap()
    all_tracer = EdgeTracer(all_map, ScopeFilter.ALL)
    dut_tracer = EdgeTracer(dut_map, ScopeFilter.DUT_ONLY)
    for site, tag in events:
        all_tracer.hit(site, tag)
        dut_tracer.hit(site, tag)
    assert dut_map.covered_indices() <= all_map.covered_indices()


def test_tracer_prev_advances_through_filtered_sites():
    cmap = CoverageMap()
    tracer = EdgeTracer(cmap, ScopeFilter.DUT_ONLY)
    tracer.hit(0x10, Component.DUT)
    tracer.hit(0x20, Component.HARNESS)  # filtered, still becomes prev
    tracer.hit(0x30, Component.DUT)
    expected = {edge_index(0, 0x10), edge_index(0x20, 0x30)}
    assert cmap.covered_indices() == expected


def test_tracer_all_scope_records_every_component():
    cmap = CoverageMap()
    tracer = EdgeTracer(cmap, ScopeFilter.ALL)
    tracer.hit(0x10, Component.DUT)
    tracer.hit(0x20, Component.HARNESS)
    tracer.hit(0x30, Component.BUS)
    assert cmap.covered_edge_count == 3


def test_scope_admits():
    assert ScopeFilter.ALL.admits(Component.HARNESS)
    assert ScopeFilter.DUT_ONLY.admits(Component.DUT)
    assert not ScopeFilter.DUT_ONLY.admits(Component.BUS)


def test_fsm_coverage_fraction():
    cov = FsmCoverage(state_count=4)
    cov.add(0)
    cov.add(0)
    cov.add_all([1, 2])
    assert cov.fraction == 0.75
    assert fsm_coverage_fraction([0, 1, 1, 2, 3], 4) == 1.0
    assert fsm_coverage_fraction([], 8) == 0.0


def test_identical_traces_compare_equal():
    rng = random.Random(5)
    sites = [(rng.randrange(0x10000), Component.DUT) for _ in range(100)]
    maps = []
    for _ in range(2):
        cmap = CoverageMap()
        tracer = EdgeTracer(cmap, ScopeFilter.ALL)
        for site, tag in sites:
            tracer.hit(site, tag)
        maps.append(cmap)
    assert maps[0] == maps[1]
