"""Harnesses: port mapping, instruction playback, fork transparency."""

import random

from hypothesis import given, settings
from hypothesis import strategies as st

from hwfuzz import (
    BusHarness,
    DigitalLock,
    ForkPoint,
    FrameFormat,
    GenericHarness,
    LockConfig,
    LockPeripheral,
    OpcodeFormat,
    ScopeFilter,
    TimerDevice,
    arm_unlock_assertion,
    run_bus,
    run_generic,
)
from hwfuzz.dut import AssertionRegistry, DutSnapshot
from hwfuzz.coverage import NULL_TRACER


def _armed_lock(state_bits=2, code_width=4, seed=1):
    lock = DigitalLock(LockConfig(state_bits, code_width, rng_seed=seed))
    arm_unlock_assertion(lock)
    return lock


class RecorderDut:
    """Minimal port-protocol implementation that logs drive values."""

    def __init__(self, ports):
        self._port_decl = tuple(ports)
        self.events = []
        self.trace = NULL_TRACER
        self.assertions = AssertionRegistry()

    @property
    def fuzz_ports(self):
        return self._port_decl

    def drive_cycle(self, values):
        self.events.append(tuple(values))

    def reset_cycle(self):
        self.events.append("reset")

    def snapshot(self):
        return DutSnapshot(("recorder",), ())

    def restore(self, snap):
        assert snap.config_key == ("recorder",)

    def set_tracer(self, tracer):
        self.trace = tracer


def test_bytes_per_cycle_rounds_port_widths_up():
    assert GenericHarness(_armed_lock(code_width=4)).bytes_per_cycle == 1
    assert GenericHarness(_armed_lock(code_width=8)).bytes_per_cycle == 1
    assert GenericHarness(_armed_lock(code_width=12)).bytes_per_cycle == 2
    dut = RecorderDut((("a", 3), ("b", 16)))
    assert GenericHarness(dut).bytes_per_cycle == 3


def test_port_values_little_endian_and_masked():
    dut = RecorderDut((("a", 3), ("b", 16)))
    harness = GenericHarness(dut)
    dut.events.clear()
    harness.run(bytes([0xFF, 0x34, 0x12]))
    assert dut.events == [(0xFF & 0x7, 0x1234)]


def test_short_final_sweep_is_zero_filled_then_ends():
    dut = RecorderDut((("a", 3), ("b", 16)))
    harness = GenericHarness(dut)
    dut.events.clear()
    outcome = harness.run(bytes([0x01, 0x0A, 0x0B, 0x02]))  # 3 + 1 bytes
    assert dut.events == [(0x1, 0x0B0A), (0x2, 0x0000)]
    assert outcome.executed_cycles == 2


def test_cycle_count_tracks_full_sweeps():
    harness = GenericHarness(_armed_lock())  # 1 byte per cycle, never unlocks on 0xF
    outcome = harness.run(b"\x0f" * 7)
    assert outcome.executed_cycles == 7
    assert outcome.ok
    assert harness.run(b"").executed_cycles == 0


def test_crash_stops_the_test_at_the_firing_cycle():
    lock = _armed_lock()
    harness = GenericHarness(lock)
    walk = bytes(lock.correct_codes[:3]) + b"\x0f\x0f\x0f"
    outcome = harness.run(walk)
    assert outcome.crash is not None
    assert outcome.crash.assertion == "unlocked"
    assert outcome.crash.cycle == 3
    assert outcome.executed_cycles == 3  # trailing bytes never driven
    assert not outcome.ok


def test_fsm_states_include_the_post_reset_state():
    lock = _armed_lock()
    harness = GenericHarness(lock)
    outcome = harness.run(bytes(lock.correct_codes[:2]))
    assert outcome.fsm_states == frozenset({0, 1, 2})
    assert harness.fsm_state_count == 4


def test_fsm_states_absent_without_a_state_protocol():
    outcome = GenericHarness(RecorderDut((("a", 8),))).run(b"\x01")
    assert outcome.fsm_states is None


def test_generic_fingerprint_frozen():
    harness = GenericHarness(_armed_lock())
    fp = harness.run(b"\x08\x0b").fingerprint()
    assert fp == "035f979866d67ea070b0c80252bbe0b294a42e58eb38f6727651db65c58e303f"
    assert harness.run(b"\x08\x0b").fingerprint() == fp


def test_bus_fingerprint_frozen():
    per = LockPeripheral(DigitalLock(LockConfig(2, 4, rng_seed=1)))
    arm_unlock_assertion(per)
    harness = BusHarness(per, OpcodeFormat.CONSTANT, FrameFormat.VARIABLE)
    data = bytes([0x02, 0x04, 0, 0, 0, 0x08, 0, 0, 0])  # write CODE=8
    fp = harness.run(data).fingerprint()
    assert fp == "809f674ff6d3ac01bc2e581c9431371dc40ac81ad21ddfc5648078cdd4115a72"


@settings(max_examples=150)
@given(st.binary(max_size=48))
def test_fork_points_are_outcome_transparent_generic(data):
    at_start = GenericHarness(_armed_lock(), fork_point=ForkPoint.AT_START)
    after_reset = GenericHarness(_armed_lock(), fork_point=ForkPoint.AFTER_RESET)
    assert at_start.run(data).fingerprint() == after_reset.run(data).fingerprint()


@settings(max_examples=150)
@given(st.binary(max_size=48))
def test_fork_points_are_outcome_transparent_bus(data):
    def build(fork_point):
        per = LockPeripheral(DigitalLock(LockConfig(2, 4, rng_seed=1)))
        arm_unlock_assertion(per)
        return BusHarness(per, OpcodeFormat.MAPPED, FrameFormat.VARIABLE,
                          fork_point=fork_point)

    a = build(ForkPoint.AT_START).run(data)
    b = build(ForkPoint.AFTER_RESET).run(data)
    assert a.fingerprint() == b.fingerprint()


def test_runs_are_independent_of_history():
    # a prior crashing run must not leak state into the next run
    lock = _armed_lock()
    harness = GenericHarness(lock)
    walk = bytes(lock.correct_codes[:3])
    first = harness.run(walk)
    assert first.crash is not None
    again = harness.run(walk)
    assert again.fingerprint() == first.fingerprint()
    clean = harness.run(b"\x0f")
    assert clean.ok


def test_bus_harness_counts_instructions_and_cycles():
    per = LockPeripheral(DigitalLock(LockConfig(2, 4, rng_seed=1)))
    arm_unlock_assertion(per)
    harness = BusHarness(per, OpcodeFormat.CONSTANT, FrameFormat.VARIABLE)
    # wait, read STATUS, junk byte, wait
    data = b"\x00" + b"\x01\x08\x00\x00\x00" + b"\x77" + b"\x00"
    outcome = harness.run(data)
    assert outcome.decoded_instruction_count == 3
    assert outcome.executed_cycles == 3
    assert outcome.ok


def test_bus_harness_crash_cycle_counts_instructions():
    lock = DigitalLock(LockConfig(2, 4, rng_seed=1))
    per = LockPeripheral(lock)
    arm_unlock_assertion(per)
    harness = BusHarness(per, OpcodeFormat.CONSTANT, FrameFormat.VARIABLE)
    frames = [b"\x00"]  # leading wait
    for code in lock.correct_codes[:3]:
        frames.append(b"\x02\x04\x00\x00\x00" + bytes([code, 0, 0, 0]))
    frames.append(b"\x00" * 4)
    outcome = harness.run(b"".join(frames))
    assert outcome.crash is not None
    assert outcome.crash.cycle == 4  # wait + three code writes
    assert outcome.executed_cycles == 4
    assert outcome.decoded_instruction_count == 8


def test_dut_only_coverage_is_a_subset_of_all():
    data = bytes(range(40))
    dut_only = GenericHarness(_armed_lock(), scope=ScopeFilter.DUT_ONLY).run(data)
    everything = GenericHarness(_armed_lock(), scope=ScopeFilter.ALL).run(data)
    dut_edges = dut_only.coverage.covered_indices()
    assert dut_edges < everything.coverage.covered_indices()
    assert dut_edges  # the lock itself is always traced


def test_one_shot_helpers():
    lock = _armed_lock()
    outcome = run_generic(lock, bytes(lock.correct_codes[:3]))
    assert outcome.crash is not None
    timer_outcome = run_bus(TimerDevice(), b"\x00\x00",
                            OpcodeFormat.CONSTANT, FrameFormat.VARIABLE)
    assert timer_outcome.executed_cycles == 2
    assert timer_outcome.fsm_states is None


def test_fingerprints_differ_for_different_outcomes():
    harness = GenericHarness(_armed_lock())
    seen = {harness.run(data).fingerprint() for data in (b"", b"\x08", b"\x08\x0b", b"\x0f")}
    assert len(seen) == 4
