"""Edge coverage maps with AFL-style hit-count bucketing and scope filtering.

Coverage is collected into a fixed 64 KiB map of saturating 8-bit hit
counters. Every instrumented branch point in a model carries a static
16-bit site id tagged with the component it belongs to (DUT, harness or
bus model). An executed edge between two sites folds into a map index
with the shift-xor hash AFL uses, and hit counts are compared between
runs through a coarse bucket classification so that loops do not make
every execution look novel.

Two kinds of map exist by convention, both the same type:

* a per-test map holds raw saturating hit counts;
* a campaign-global map holds, per edge, the highest bucket class seen
  so far (written by :func:`merge`).

``is_interesting`` compares a test map's bucketized counts against the
classes recorded in a global map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

MAP_SIZE = 1 << 16


class Component(Enum):
    """Which part of the system an instrumented site belongs to."""

    DUT = "dut"
    HARNESS = "harness"
    BUS = "bus"


class ScopeFilter(Enum):
    """Which component tags contribute edges to a coverage map."""

    DUT_ONLY = "dut_only"
    ALL = "all"

    def admits(self, tag: Component) -> bool:
        return self is ScopeFilter.ALL or tag is Component.DUT


def _build_class_table() -> bytes:
    # hit count -> bucket class; boundaries 1, 2, 3, 4-7, 8-15, 16-31,
    # 32-127, 128-255 give classes 1..8 (0 hits -> class 0)
    table = bytearray(256)
    for count in range(256):
        if count == 0:
            cls = 0
        elif count == 1:
            cls = 1
        elif count == 2:
            cls = 2
        elif count == 3:
            cls = 3
        elif count < 8:
            cls = 4
        elif count < 16:
            cls = 5
        elif count < 32:
            cls = 6
        elif count < 128:
            cls = 7
        else:
            cls = 8
        table[count] = cls
    return bytes(table)


CLASS_TABLE = _build_class_table()


def bucket_class(count: int) -> int:
    """Bucket class (0..8) for a saturating hit count (0..255)."""
    return CLASS_TABLE[count]


def edge_index(prev_site: int, cur_site: int) -> int:
    """Fold an edge between two 16-bit sites into a map index."""
    return ((prev_site >> 1) ^ cur_site) & 0xFFFF


class CoverageMap:
    """Fixed array of 2**16 saturating 8-bit hit counters.

    ``_touched`` tracks indices with nonzero counts so comparing and
    merging sparse per-test maps does not scan all 64 Ki entries.
    """

    __slots__ = ("buckets", "_touched")

    def __init__(self) -> None:
        self.buckets = bytearray(MAP_SIZE)
        self._touched: set[int] = set()

    def hit(self, index: int) -> None:
        buckets = self.buckets
        count = buckets[index]
        if count < 255:
            buckets[index] = count + 1
        self._touched.add(index)

    def covered_indices(self) -> set[int]:
        return set(self._touched)

    @property
    def covered_edge_count(self) -> int:
        return len(self._touched)

    def clear(self) -> None:
        buckets = self.buckets
        for index in self._touched:
            buckets[index] = 0
        self._touched.clear()

    def as_bytes(self) -> bytes:
        return bytes(self.buckets)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoverageMap):
            return NotImplemented
        return self.buckets == other.buckets

    def __repr__(self) -> str:
        return f"<CoverageMap covered={self.covered_edge_count}>"


def trace_edge(
    coverage_map: CoverageMap,
    prev_site: int,
    cur_site: int,
    scope_tag: Component,
    scope: ScopeFilter = ScopeFilter.ALL,
) -> None:
    """Record one executed edge if the scope admits its component tag."""
    if scope.admits(scope_tag):
        coverage_map.hit(edge_index(prev_site, cur_site))


class EdgeTracer:
    """Stateful edge recorder bound to one test execution.

    Models call :meth:`hit` on every taken branch. The previous site
    always advances, filtered or not, so edge indices are identical
    across scope filters and a DUT-only map is a per-edge subset of the
    matching all-components map.
    """

    __slots__ = ("map", "scope", "prev", "_admit_all")

    def __init__(self, coverage_map: CoverageMap, scope: ScopeFilter = ScopeFilter.ALL) -> None:
        self.map = coverage_map
        self.scope = scope
        self.prev = 0
        self._admit_all = scope is ScopeFilter.ALL

    def hit(self, site: int, tag: Component) -> None:
        prev = self.prev
        self.prev = site
        if self._admit_all or tag is Component.DUT:
            cmap = self.map
            index = ((prev >> 1) ^ site) & 0xFFFF
            buckets = cmap.buckets
            count = buckets[index]
            if count < 255:
                buckets[index] = count + 1
            cmap._touched.add(index)


class _NullTracer:
    """Tracer that records nothing; default for standalone model use."""

    __slots__ = ()

    def hit(self, site: int, tag: Component) -> None:
        pass


NULL_TRACER = _NullTracer()


def is_interesting(test_map: CoverageMap, global_map: CoverageMap) -> bool:
    """True iff any edge's bucket class exceeds the class recorded globally."""
    table = CLASS_TABLE
    test_buckets = test_map.buckets
    global_buckets = global_map.buckets
    for index in test_map._touched:
        if table[test_buckets[index]] > global_buckets[index]:
            return True
    return False


def merge(global_map: CoverageMap, test_map: CoverageMap) -> int:
    """Fold a test map into a global map; returns the number of raised classes.

    The global map records, per edge, the maximum bucket class observed;
    its covered-edge count never decreases, and a second merge of the
    same test map raises nothing.
    """
    table = CLASS_TABLE
    test_buckets = test_map.buckets
    global_buckets = global_map.buckets
    touched = global_map._touched
    raised = 0
    for index in test_map._touched:
        cls = table[test_buckets[index]]
        if cls > global_buckets[index]:
            global_buckets[index] = cls
            touched.add(index)
            raised += 1
    return raised


@dataclass
class FsmCoverage:
    """Visited-state bitset over a lock's 2**N states."""

    state_count: int
    visited: set[int] = field(default_factory=set)

    def add(self, state: int) -> None:
        self.visited.add(state)

    def add_all(self, states: Iterable[int]) -> None:
        self.visited.update(states)

    @property
    def fraction(self) -> float:
        return len(self.visited) / self.state_count


def fsm_coverage_fraction(states: Iterable[int], state_count: int) -> float:
    """Fraction of distinct states visited out of ``state_count``."""
    return len(set(states)) / state_count
