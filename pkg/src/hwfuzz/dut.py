"""Cycle-accurate software model of a sequentially-keyed digital lock.

The lock holds an N-bit state register and a secret table of M-bit
codes. On each rising clock edge it compares the applied code against
the table entry for the current state: a match advances the state by
one, a mismatch holds it, and reset drives it back to zero. The
all-ones state reports unlocked. A lock with N state bits therefore
opens after 2**N - 1 correct codes in a row.

The code table is drawn from a seeded generator, so identical
(state_bits, code_width, rng_seed) triples always build identical
locks. The comparator is instrumented with one static coverage site per
state (each case arm of the state-indexed mux is its own branch point),
which is what gives a greybox fuzzer per-state progress signal.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable

from .coverage import NULL_TRACER, Component

# lock branch sites; the comparator banks get one site per state value
# for both outcomes (each case arm of the state-indexed mux is its own
# branch point whether the code matched or not)
SITE_LOCK_RESET = 0x0100
SITE_LOCK_OUT_LOCKED = 0x0102
SITE_LOCK_OUT_UNLOCKED = 0x0103
SITE_LOCK_MATCH_BASE = 0x1000
SITE_LOCK_HOLD_BASE = 0x9000

_DUT = Component.DUT


def derive_rng(seed: int, label: str) -> random.Random:
    """Child generator derived from (seed, label).

    String seeding hashes the full text (sha512 under the hood), so the
    stream is stable across processes and interpreter runs.
    """
    return random.Random(f"{label}:{seed}")


class SnapshotMismatchError(RuntimeError):
    """Restore attempted with a snapshot from a different configuration."""


@dataclass(frozen=True)
class DutSnapshot:
    """Opaque captured model state; valid only for the capturing config."""

    config_key: tuple
    payload: tuple


class AssertionRegistry:
    """Named safety predicates evaluated after each rising edge.

    A predicate returns True when violated. Each named assertion fires
    at most once per test; :meth:`begin_test` rearms them all.
    """

    def __init__(self) -> None:
        self._checks: list[tuple[str, Callable[[object], bool]]] = []
        self._fired: set[str] = set()

    def register(self, name: str, predicate: Callable[[object], bool]) -> None:
        if any(existing == name for existing, _ in self._checks):
            raise ValueError(f"assertion {name!r} already registered")
        self._checks.append((name, predicate))

    def begin_test(self) -> None:
        self._fired.clear()

    def check(self, model: object) -> str | None:
        """First newly-violated assertion name, or None."""
        for name, predicate in self._checks:
            if name not in self._fired and predicate(model):
                self._fired.add(name)
                return name
        return None

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self._checks)

    def __len__(self) -> int:
        return len(self._checks)


@dataclass(frozen=True)
class LockConfig:
    """Lock shape: N state bits, M-bit codes, and the table seed."""

    state_bits: int
    code_width: int
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.state_bits <= 16:
            raise ValueError(f"state_bits must be in [1, 16], got {self.state_bits}")
        if not 1 <= self.code_width <= 32:
            raise ValueError(f"code_width must be in [1, 32], got {self.code_width}")

    @property
    def state_count(self) -> int:
        return 1 << self.state_bits

    @property
    def unlock_sequence_length(self) -> int:
        return (1 << self.state_bits) - 1


class DigitalLock:
    """The lock model. One :meth:`eval` call is one full clock cycle."""

    def __init__(self, config: LockConfig) -> None:
        self.config = config
        rng = derive_rng(config.rng_seed, "lock-codes")
        # table length 2**N so correct_codes[state] can never index out of
        # range; the last entry is unreachable because the unlocked state
        # stops advancing
        self.correct_codes: tuple[int, ...] = tuple(
            rng.getrandbits(config.code_width) for _ in range(config.state_count)
        )
        self._code_mask = (1 << config.code_width) - 1
        self._max_state = config.state_count - 1
        # built once: restore() sits on the hot path of snapshot-forked runs
        self._ckey = ("lock", config.state_bits, config.code_width, config.rng_seed)
        self.state = 0
        self.unlocked = False
        self.trace = NULL_TRACER
        self.assertions = AssertionRegistry()

    # -- clocked behavior --------------------------------------------------

    def eval(self, reset_n: int, code: int) -> int:
        """Advance one clock edge; returns unlocked computed from the new state."""
        trace = self.trace
        if not reset_n & 1:
            self.state = 0
            trace.hit(SITE_LOCK_RESET, _DUT)
        elif not self.unlocked and (code & self._code_mask) == self.correct_codes[self.state]:
            trace.hit((SITE_LOCK_MATCH_BASE + self.state) & 0xFFFF, _DUT)
            self.state += 1
        else:
            trace.hit((SITE_LOCK_HOLD_BASE + self.state) & 0xFFFF, _DUT)
        unlocked = self.state == self._max_state
        self.unlocked = unlocked
        if unlocked:
            trace.hit(SITE_LOCK_OUT_UNLOCKED, _DUT)
            return 1
        trace.hit(SITE_LOCK_OUT_LOCKED, _DUT)
        return 0

    # -- generic-harness port protocol --------------------------------------

    @property
    def fuzz_ports(self) -> tuple[tuple[str, int], ...]:
        # reset_n stays harness-controlled; only the code port is fuzzed
        return (("code", self.config.code_width),)

    def drive_cycle(self, values: list[int]) -> None:
        self.eval(1, values[0])

    def reset_cycle(self) -> None:
        self.eval(0, 0)

    def fsm_state(self) -> int:
        return self.state

    @property
    def fsm_state_count(self) -> int:
        return self.config.state_count

    # -- snapshot / restore --------------------------------------------------

    def _config_key(self) -> tuple:
        return self._ckey

    def snapshot(self) -> DutSnapshot:
        return DutSnapshot(self._config_key(), (self.state, self.unlocked))

    def restore(self, snap: DutSnapshot) -> None:
        if snap.config_key != self._config_key():
            raise SnapshotMismatchError(
                f"snapshot for {snap.config_key} cannot restore {self._config_key()}"
            )
        self.state, self.unlocked = snap.payload

    def set_tracer(self, tracer: object) -> None:
        self.trace = tracer


def arm_unlock_assertion(model: object) -> None:
    """Register the assertion that fires when the lock opens.

    Works on anything exposing ``assertions`` and an ``unlocked`` output
    (the bare lock and the bus peripheral wrapping one).
    """
    model.assertions.register("unlocked", lambda m: bool(m.unlocked))
