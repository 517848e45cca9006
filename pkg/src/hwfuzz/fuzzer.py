"""Greybox mutation engine, campaign driver and the random baseline.

The mutation repertoire is the classic AFL set applied natively to byte
strings: narrow bit flips, byte flips, bounded 8/16/32-bit arithmetic,
interesting-value substitution, a stacked havoc stage (including block
insert / delete / overwrite / duplicate and tail-extension variants)
and splicing against another queue entry. One :func:`mutate` call draws
one stage.

The campaign driver keeps a queue of retained test cases and walks it
round-robin, favoring small high-yield entries: every covered edge is
owned by the smallest queue entry that covers it (earlier discovery
wins ties), owners are always fuzzed on their turn, and everything
else is skipped three times out of four. A campaign halts on budget
(executions, simulated cycles or wall time, whichever trips first) or,
when configured, on the first crash. Given identical seeds and config
with no wall budget, a campaign is fully deterministic: same executed
test sequence, same coverage map, same result fields except wall times.

The constrained-random baseline drives sequences of uniformly random
codes at a digital lock, resetting between attempts. Its per-attempt
success probability is 2**-(M * (2**N - 1)), so attempt counts are
geometric; the inner loop is an inline transition-rule walk for speed,
property-tested equivalent to DigitalLock.eval.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .coverage import CoverageMap, ScopeFilter, merge
from .dut import DigitalLock
from .harness import ForkPoint

# scheduler shape: each selected parent gets a burst of mutations; while
# a never-fuzzed favored entry is pending almost everything else is
# skipped, otherwise favored entries always run and the rest rarely do
PARENT_ENERGY = 96
SKIP_TO_PENDING = 0.99
SKIP_NONFAVORED_NEW = 0.75
SKIP_NONFAVORED_FUZZED = 0.95

ARITH_MAX = 35


def _interesting(width_bits: int) -> tuple[int, ...]:
    # 0, 1, every power of two that fits, and the all-ones word
    top = (1 << width_bits) - 1
    values = {0, 1, top}
    values.update(1 << k for k in range(1, width_bits))
    return tuple(sorted(values))


INTERESTING_8 = _interesting(8)
INTERESTING_16 = _interesting(16)
INTERESTING_32 = _interesting(32)

_INTERESTING_BY_WIDTH = {8: INTERESTING_8, 16: INTERESTING_16, 32: INTERESTING_32}


# --- mutation primitives ---------------------------------------------------


def flip_bits(data: bytes, bit_pos: int, width: int = 1) -> bytes:
    """Flip ``width`` consecutive bits starting at ``bit_pos`` (LSB-first)."""
    if bit_pos < 0 or width < 1 or bit_pos + width > len(data) * 8:
        raise ValueError("bit range out of bounds")
    out = bytearray(data)
    for k in range(bit_pos, bit_pos + width):
        out[k >> 3] ^= 1 << (k & 7)
    return bytes(out)


def flip_bytes(data: bytes, pos: int, width: int = 1) -> bytes:
    """Invert ``width`` consecutive bytes starting at ``pos``."""
    if pos < 0 or width < 1 or pos + width > len(data):
        raise ValueError("byte range out of bounds")
    out = bytearray(data)
    for k in range(pos, pos + width):
        out[k] ^= 0xFF
    return bytes(out)


def arith_at(data: bytes, pos: int, width_bits: int, delta: int, big_endian: bool = False) -> bytes:
    """Add ``delta`` to the integer at ``pos`` (wraps within the width)."""
    size = width_bits // 8
    if pos + size > len(data):
        raise ValueError("word out of bounds")
    order = "big" if big_endian else "little"
    out = bytearray(data)
    value = (int.from_bytes(out[pos : pos + size], order) + delta) & ((1 << width_bits) - 1)
    out[pos : pos + size] = value.to_bytes(size, order)
    return bytes(out)


def substitute_interesting(
    data: bytes, pos: int, width_bits: int, value: int, big_endian: bool = False
) -> bytes:
    """Overwrite the word at ``pos`` with an interesting value."""
    size = width_bits // 8
    if pos + size > len(data):
        raise ValueError("word out of bounds")
    order = "big" if big_endian else "little"
    out = bytearray(data)
    out[pos : pos + size] = (value & ((1 << width_bits) - 1)).to_bytes(size, order)
    return bytes(out)


def splice(a: bytes, b: bytes, rng: random.Random) -> bytes:
    """Random prefix of ``a`` joined with a random suffix of ``b``."""
    cut_a = rng.randint(1, len(a)) if a else 0
    cut_b = rng.randint(0, len(b) - 1) if b else 0
    return a[:cut_a] + b[cut_b:]


def _havoc_word_params(rng: random.Random, length: int) -> tuple[int, int] | None:
    widths = [bits for bits in (8, 16, 32) if bits // 8 <= length]
    if not widths:
        return None
    width = rng.choice(widths)
    return rng.randrange(length - width // 8 + 1), width


def havoc(
    data: bytes,
    rng: random.Random,
    *,
    stack_max: int = 16,
    max_len: int = 4096,
    queue: Sequence[bytes] = (),
) -> bytes:
    """Apply a stack of random small mutations (power-of-two depth, capped)."""
    buf = bytearray(data)
    depth = 1 << rng.randint(0, max(0, max(1, stack_max).bit_length() - 1))
    for _ in range(min(depth, stack_max)):
        length = len(buf)
        op = rng.randrange(11)
        if length == 0 and op not in (6, 9):
            op = rng.choice((6, 9))
        if op == 0:  # flip one bit
            k = rng.randrange(length * 8)
            buf[k >> 3] ^= 1 << (k & 7)
        elif op == 1:  # randomize one byte
            buf[rng.randrange(length)] = rng.randrange(256)
        elif op == 2:  # 8-bit arithmetic
            pos = rng.randrange(length)
            delta = rng.randint(1, ARITH_MAX) * rng.choice((1, -1))
            buf[pos] = (buf[pos] + delta) & 0xFF
        elif op == 3:  # wider arithmetic, either endianness
            params = _havoc_word_params(rng, length)
            if params is not None:
                pos, width = params
                delta = rng.randint(1, ARITH_MAX) * rng.choice((1, -1))
                buf = bytearray(
                    arith_at(bytes(buf), pos, width, delta, big_endian=rng.random() < 0.5)
                )
        elif op == 4:  # interesting-value substitution
            params = _havoc_word_params(rng, length)
            if params is not None:
                pos, width = params
                value = rng.choice(_INTERESTING_BY_WIDTH[width])
                buf = bytearray(
                    substitute_interesting(bytes(buf), pos, width, value, big_endian=rng.random() < 0.5)
                )
        elif op == 5:  # delete a block
            span = rng.randint(1, min(length, 32))
            pos = rng.randrange(length - span + 1)
            del buf[pos : pos + span]
        elif op == 6:  # insert random bytes
            span = rng.randint(1, 16)
            pos = rng.randint(0, length)
            buf[pos:pos] = bytes(rng.randrange(256) for _ in range(span))
        elif op == 7:  # clone a block to a random spot
            span = rng.randint(1, min(length, 32))
            src = rng.randrange(length - span + 1)
            chunk = buf[src : src + span]
            pos = rng.randint(0, length)
            buf[pos:pos] = chunk
        elif op == 8:  # overwrite a block
            span = rng.randint(1, min(length, 32))
            pos = rng.randrange(length - span + 1)
            if queue and rng.random() < 0.5:
                donor = rng.choice(queue)
                if donor:
                    src = rng.randrange(len(donor))
                    patch = (donor[src:] * ((span // max(1, len(donor) - src)) + 1))[:span]
                    buf[pos : pos + span] = patch
                    continue
            buf[pos : pos + span] = bytes([rng.randrange(256)]) * span
        elif op == 9:  # append random bytes (tail extension)
            span = rng.randint(1, 8)
            buf.extend(rng.randrange(256) for _ in range(span))
        else:  # append a cloned chunk (tail extension, biased to duplicate the tail)
            span = rng.randint(1, min(length, 16))
            src = length - span if rng.random() < 0.5 else rng.randrange(length - span + 1)
            buf.extend(buf[src : src + span])
        if len(buf) > max_len:
            del buf[max_len:]
    return bytes(buf[:max_len])


def mutate(
    data: bytes,
    rng: random.Random,
    *,
    queue: Sequence[bytes] = (),
    max_len: int = 4096,
    havoc_stack_max: int = 16,
) -> bytes:
    """Draw one mutation stage and apply it."""
    length = len(data)
    if length:
        roll = rng.random()
        if roll < 0.10:
            width = rng.choice((1, 2, 4))
            top = length * 8 - width
            if top >= 0:
                return flip_bits(data, rng.randint(0, top), width)
        elif roll < 0.18:
            width = min(rng.choice((1, 2, 4)), length)
            return flip_bytes(data, rng.randint(0, length - width), width)
        elif roll < 0.30:
            params = _havoc_word_params(rng, length)
            if params is not None:
                pos, width = params
                delta = rng.randint(1, ARITH_MAX) * rng.choice((1, -1))
                return arith_at(data, pos, width, delta, big_endian=rng.random() < 0.5)
        elif roll < 0.42:
            params = _havoc_word_params(rng, length)
            if params is not None:
                pos, width = params
                value = rng.choice(_INTERESTING_BY_WIDTH[width])
                return substitute_interesting(data, pos, width, value, big_endian=rng.random() < 0.5)
        elif roll < 0.50:
            donors = [entry for entry in queue if entry and entry != data]
            if donors:
                crossed = splice(data, rng.choice(donors), rng)
                return havoc(
                    crossed, rng, stack_max=max(1, havoc_stack_max // 4), max_len=max_len, queue=queue
                )
    return havoc(data, rng, stack_max=havoc_stack_max, max_len=max_len, queue=queue)


# --- campaign plumbing -------------------------------------------------------


@dataclass(frozen=True)
class Budget:
    """Campaign stop bounds; at least one must be finite."""

    max_execs: int | None = None
    max_sim_cycles: int | None = None
    max_wall_ms: float | None = None

    def __post_init__(self) -> None:
        bounds = (self.max_execs, self.max_sim_cycles, self.max_wall_ms)
        if all(bound is None for bound in bounds):
            raise ValueError("budget needs at least one finite bound")
        for bound in bounds:
            if bound is not None and bound <= 0:
                raise ValueError("budget bounds must be positive")

    def exhausted(self, execs: int, sim_cycles: int, wall_ms: float) -> bool:
        if self.max_execs is not None and execs >= self.max_execs:
            return True
        if self.max_sim_cycles is not None and sim_cycles >= self.max_sim_cycles:
            return True
        return self.max_wall_ms is not None and wall_ms >= self.max_wall_ms


@dataclass(frozen=True)
class TestCase:
    """A retained input: payload, where it came from, when it was found."""

    data: bytes
    provenance: str
    exec_index: int


@dataclass(frozen=True)
class CrashRecord:
    """An input that fired an armed assertion."""

    test: TestCase
    assertion: str
    cycle: int
    exec_index: int
    sim_cycles: int


@dataclass(frozen=True)
class TrajectorySample:
    """One coverage-trajectory point."""

    execs: int
    sim_cycles: int
    wall_ms: float
    edges_covered: int
    fsm_fraction: float | None


@dataclass
class CampaignProgress:
    """Read-only view handed to a stop_when callback after each execution."""

    execs: int
    sim_cycles: int
    edges_covered: int
    fsm_visited_count: int
    fsm_total: int | None
    global_map: CoverageMap


@dataclass
class FuzzerConfig:
    budget: Budget
    rng_seed: int = 0
    max_len: int = 4096
    havoc_stack_max: int = 16
    fork_point: ForkPoint = ForkPoint.AFTER_RESET
    scope: ScopeFilter = ScopeFilter.DUT_ONLY
    stop_on_first_crash: bool = False
    stop_when: Callable[[CampaignProgress], bool] | None = None


@dataclass
class CampaignResult:
    total_execs: int
    total_sim_cycles: int
    wall_ms: float
    queue: list[TestCase]
    crashes: list[CrashRecord]
    trajectory: list[TrajectorySample]
    edges_covered: int
    fsm_fraction: float | None
    execs_to_first_crash: int | None
    sim_cycles_to_first_crash: int | None
    global_map: CoverageMap = field(repr=False, default_factory=CoverageMap)
    fsm_visited: frozenset[int] = frozenset()

    @property
    def queue_size(self) -> int:
        return len(self.queue)

    def exec_signature(self) -> tuple:
        """Everything a rerun with the same config must reproduce (no wall times)."""
        return (
            self.total_execs,
            self.total_sim_cycles,
            self.edges_covered,
            self.fsm_fraction,
            tuple((t.data, t.provenance, t.exec_index) for t in self.queue),
            tuple(
                (c.test.data, c.assertion, c.cycle, c.exec_index, c.sim_cycles)
                for c in self.crashes
            ),
            tuple(
                (s.execs, s.sim_cycles, s.edges_covered, s.fsm_fraction) for s in self.trajectory
            ),
            self.execs_to_first_crash,
            self.sim_cycles_to_first_crash,
        )


class _CampaignState:
    """Mutable innards of one running fuzz campaign."""

    def __init__(self, harness, config: FuzzerConfig) -> None:
        self.harness = harness
        self.config = config
        self.global_map = CoverageMap()
        self.queue: list[TestCase] = []
        self.queue_data: list[bytes] = []
        self.crashes: list[CrashRecord] = []
        self.trajectory: list[TrajectorySample] = []
        self.visited: set[int] = set()
        self.fsm_total: int | None = getattr(harness, "fsm_state_count", None)
        self.execs = 0
        self.sim_cycles = 0
        self.first_crash_execs: int | None = None
        self.first_crash_cycles: int | None = None
        # per-edge favoritism: each covered edge is owned by the smallest
        # queue entry covering it (ties keep the earlier discovery), and an
        # entry is favored while it owns at least one edge
        self.edge_owner: dict[int, int] = {}
        self.slot_counts: list[int] = []
        self.fuzzed: list[bool] = []
        self.pending_favored = 0
        self.qpos = 0
        self.start = time.perf_counter()
        self.stop = False

    def wall_ms(self) -> float:
        return (time.perf_counter() - self.start) * 1000.0

    @property
    def fsm_fraction(self) -> float | None:
        if self.fsm_total is None:
            return None
        return len(self.visited) / self.fsm_total

    def out_of_budget(self) -> bool:
        return self.config.budget.exhausted(self.execs, self.sim_cycles, self.wall_ms())

    def sample(self) -> None:
        self.trajectory.append(
            TrajectorySample(
                self.execs,
                self.sim_cycles,
                self.wall_ms(),
                self.global_map.covered_edge_count,
                self.fsm_fraction,
            )
        )

    def execute(self, data: bytes, provenance: str, retain_always: bool = False) -> None:
        outcome = self.harness.run(data)
        self.execs += 1
        self.sim_cycles += outcome.executed_cycles
        gain = merge(self.global_map, outcome.coverage)
        fsm_grew = False
        if outcome.fsm_states is not None:
            before = len(self.visited)
            self.visited.update(outcome.fsm_states)
            fsm_grew = len(self.visited) > before

        case = TestCase(data, provenance, self.execs)
        if outcome.crash is not None:
            self.crashes.append(
                CrashRecord(
                    case, outcome.crash.assertion, outcome.crash.cycle, self.execs, self.sim_cycles
                )
            )
            if self.first_crash_execs is None:
                self.first_crash_execs = self.execs
                self.first_crash_cycles = self.sim_cycles
            if self.config.stop_on_first_crash:
                self.stop = True
        elif gain > 0 or retain_always:
            self.queue.append(case)
            self.queue_data.append(data)
            self.slot_counts.append(0)
            self.fuzzed.append(False)
            self._claim_edges(len(self.queue) - 1, outcome.coverage)
            if self.slot_counts[-1] > 0:
                self.pending_favored += 1

        if gain > 0 or fsm_grew or outcome.crash is not None:
            self.sample()
        if not self.stop and self.config.stop_when is not None:
            progress = CampaignProgress(
                self.execs,
                self.sim_cycles,
                self.global_map.covered_edge_count,
                len(self.visited),
                self.fsm_total,
                self.global_map,
            )
            if self.config.stop_when(progress):
                self.stop = True

    def _claim_edges(self, index: int, coverage: CoverageMap) -> None:
        size = len(self.queue_data[index])
        owner = self.edge_owner
        counts = self.slot_counts
        for edge in coverage.covered_indices():
            holder = owner.get(edge)
            if holder is None:
                owner[edge] = index
                counts[index] += 1
            elif size < len(self.queue_data[holder]):
                counts[holder] -= 1
                if counts[holder] == 0 and not self.fuzzed[holder]:
                    self.pending_favored -= 1
                owner[edge] = index
                counts[index] += 1

    def next_parent(self, rng: random.Random) -> int:
        while True:
            index = self.qpos % len(self.queue)
            self.qpos += 1
            favored = self.slot_counts[index] > 0
            if self.pending_favored > 0:
                if not (favored and not self.fuzzed[index]):
                    if rng.random() < SKIP_TO_PENDING:
                        continue
            elif not favored:
                skip = SKIP_NONFAVORED_NEW if not self.fuzzed[index] else SKIP_NONFAVORED_FUZZED
                if rng.random() < skip:
                    continue
            if not self.fuzzed[index]:
                self.fuzzed[index] = True
                if favored:
                    self.pending_favored -= 1
            return index

    def result(self) -> CampaignResult:
        return CampaignResult(
            total_execs=self.execs,
            total_sim_cycles=self.sim_cycles,
            wall_ms=self.wall_ms(),
            queue=list(self.queue),
            crashes=list(self.crashes),
            trajectory=list(self.trajectory),
            edges_covered=self.global_map.covered_edge_count,
            fsm_fraction=self.fsm_fraction,
            execs_to_first_crash=self.first_crash_execs,
            sim_cycles_to_first_crash=self.first_crash_cycles,
            global_map=self.global_map,
            fsm_visited=frozenset(self.visited),
        )


def fuzz_campaign(harness, seeds: Sequence[bytes], config: FuzzerConfig) -> CampaignResult:
    """Run one coverage-guided campaign until budget, stop condition or crash.

    ``seeds`` must hold at least one entry; an empty byte string is a
    valid seed. Seeds always join the queue (a campaign cannot start
    with no parents); mutants join only when they expand coverage.
    """
    if not seeds:
        raise ValueError("seed corpus is empty; provide at least one seed (may be b'')")
    # the config is the single source of truth for these two knobs
    harness.fork_point = config.fork_point
    harness.scope = config.scope
    rng = random.Random(config.rng_seed)
    state = _CampaignState(harness, config)

    for seed in seeds:
        if state.stop or state.out_of_budget():
            break
        state.execute(bytes(seed), "seed", retain_always=True)

    while not state.stop and state.queue and not state.out_of_budget():
        parent = state.queue[state.next_parent(rng)]
        parent_tag = f"mut:{parent.exec_index}"
        for _ in range(PARENT_ENERGY):
            if state.stop or state.out_of_budget():
                break
            child = mutate(
                parent.data,
                rng,
                queue=state.queue_data,
                max_len=config.max_len,
                havoc_stack_max=config.havoc_stack_max,
            )
            state.execute(child, parent_tag)

    state.sample()
    return state.result()


# --- constrained-random baseline ---------------------------------------------


@dataclass(frozen=True)
class CrvConfig:
    """Constrained-random campaign shape; must match the attached lock."""

    state_bits: int
    code_width: int
    budget: Budget
    rng_seed: int = 0


def crv_campaign(lock: DigitalLock, config: CrvConfig) -> CampaignResult:
    """Randomized-sequence baseline against a digital lock.

    Each attempt resets the lock and drives exactly 2**N - 1 codes drawn
    uniformly from [0, 2**M). Reaching the unlocked state ends the
    campaign as a success at that cycle. Attempts that unlock are
    re-encoded in generic-harness byte order so the recorded success
    replays through the real harness.
    """
    cfg = lock.config
    if (cfg.state_bits, cfg.code_width) != (config.state_bits, config.code_width):
        raise ValueError(
            f"lock is ({cfg.state_bits}, {cfg.code_width}) but config says "
            f"({config.state_bits}, {config.code_width})"
        )
    rng = random.Random(config.rng_seed)
    table = lock.correct_codes
    max_state = cfg.state_count - 1
    seq_len = cfg.unlock_sequence_length
    code_bits = cfg.code_width
    code_bytes = (code_bits + 7) // 8

    start = time.perf_counter()
    wall_ms = lambda: (time.perf_counter() - start) * 1000.0
    attempts = 0
    cycles = 0
    best_state = 0
    trajectory: list[TrajectorySample] = []
    crashes: list[CrashRecord] = []
    first_crash_execs: int | None = None
    first_crash_cycles: int | None = None
    codes = [0] * seq_len

    while not config.budget.exhausted(attempts, cycles, wall_ms()):
        attempts += 1
        # one attempt: reset, then walk the transition rule
        state = 0
        for k in range(seq_len):
            code = rng.getrandbits(code_bits)
            codes[k] = code
            if state != max_state and code == table[state]:
                state += 1
        cycles += seq_len
        if state > best_state:
            best_state = state
            trajectory.append(
                TrajectorySample(attempts, cycles, wall_ms(), 0, (best_state + 1) / cfg.state_count)
            )
        if state == max_state:
            payload = b"".join(code.to_bytes(code_bytes, "little") for code in codes)
            case = TestCase(payload, "crv", attempts)
            crashes.append(CrashRecord(case, "unlocked", seq_len, attempts, cycles))
            first_crash_execs = attempts
            first_crash_cycles = cycles
            break

    fraction = (best_state + 1) / cfg.state_count
    trajectory.append(TrajectorySample(attempts, cycles, wall_ms(), 0, fraction))
    return CampaignResult(
        total_execs=attempts,
        total_sim_cycles=cycles,
        wall_ms=wall_ms(),
        queue=[],
        crashes=crashes,
        trajectory=trajectory,
        edges_covered=0,
        fsm_fraction=fraction,
        execs_to_first_crash=first_crash_execs,
        sim_cycles_to_first_crash=first_crash_cycles,
        global_map=CoverageMap(),
        fsm_visited=frozenset(range(best_state + 1)),
    )
