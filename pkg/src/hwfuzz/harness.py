"""Harnesses that execute fuzzer byte strings against a model.

Two flavors exist. The generic harness feeds raw bytes straight into a
model's declared input ports, one full port sweep per clock cycle. The
bus harness first decodes the bytes into Wait/Read/Write instructions
and plays them through a bus host, one instruction per cycle.

Both support two fork points mirroring where a fork-server would attach:
AT_START simulates the reset sequence at the top of every test, while
AFTER_RESET restores a snapshot captured once after reset. Reset work is
never traced into coverage, so the two fork points produce bitwise
identical test outcomes and differ only in cost.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

from .bus import BusHost, MmioDevice
from .coverage import NULL_TRACER, Component, CoverageMap, EdgeTracer, ScopeFilter
from .grammar import FrameFormat, Opcode, OpcodeFormat, decode_stream

_HARNESS = Component.HARNESS

SITE_H_START = 0x0500
SITE_H_CYCLE = 0x0501
SITE_H_EXEC_WAIT = 0x0502
SITE_H_EXEC_READ = 0x0503
SITE_H_EXEC_WRITE = 0x0504


class ForkPoint(Enum):
    """Where per-test execution forks from."""

    AT_START = "at_start"
    AFTER_RESET = "after_reset"


@dataclass(frozen=True)
class CrashInfo:
    """An armed assertion violation: which assertion, at which cycle."""

    assertion: str
    cycle: int


@dataclass
class TestOutcome:
    """Everything one test execution produced."""

    crash: CrashInfo | None
    executed_cycles: int
    decoded_instruction_count: int
    coverage: CoverageMap
    fsm_states: frozenset[int] | None = None

    @property
    def ok(self) -> bool:
        return self.crash is None

    def fingerprint(self) -> str:
        """Digest of all outcome fields; wall time is not a field."""
        digest = hashlib.sha256()
        crash_key = (self.crash.assertion, self.crash.cycle) if self.crash else None
        states = sorted(self.fsm_states) if self.fsm_states is not None else None
        digest.update(
            repr((crash_key, self.executed_cycles, self.decoded_instruction_count, states)).encode()
        )
        digest.update(self.coverage.as_bytes())
        return digest.hexdigest()


class GenericHarness:
    """Drives a model's declared input ports directly from test bytes.

    Per cycle, each port consumes ceil(width / 8) bytes (little-endian,
    masked to the port width) in declaration order. If the stream runs
    out mid-sweep the missing bytes are zero-filled and the test ends
    after that cycle; a stream exhausted at a sweep boundary just ends
    the test.
    """

    def __init__(
        self,
        dut,
        *,
        fork_point: ForkPoint = ForkPoint.AFTER_RESET,
        scope: ScopeFilter = ScopeFilter.DUT_ONLY,
    ) -> None:
        self.dut = dut
        self.fork_point = fork_point
        self.scope = scope
        self._ports = tuple(
            ((width + 7) // 8, (1 << width) - 1) for _, width in dut.fuzz_ports
        )
        self._bytes_per_cycle = sum(size for size, _ in self._ports)
        self._reset_untraced()
        self._baseline = dut.snapshot()
        self._fsm_total = getattr(dut, "fsm_state_count", None)
        self._track_fsm = self._fsm_total is not None

    @property
    def fsm_state_count(self) -> int | None:
        return self._fsm_total

    def _reset_untraced(self) -> None:
        dut = self.dut
        saved = dut.trace
        dut.set_tracer(NULL_TRACER)
        # reset_n held low for two cycles, the power-on protocol
        dut.reset_cycle()
        dut.reset_cycle()
        dut.set_tracer(saved)

    @property
    def bytes_per_cycle(self) -> int:
        return self._bytes_per_cycle

    def run(self, data: bytes) -> TestOutcome:
        dut = self.dut
        if self.fork_point is ForkPoint.AT_START:
            self._reset_untraced()
        else:
            dut.restore(self._baseline)

        cmap = CoverageMap()
        tracer = EdgeTracer(cmap, self.scope)
        dut.set_tracer(tracer)
        dut.assertions.begin_test()
        tracer.hit(SITE_H_START, _HARNESS)

        track_fsm = self._track_fsm
        visited: set[int] = {dut.fsm_state()} if track_fsm else set()
        ports = self._ports
        pos = 0
        end = len(data)
        cycles = 0
        crash: CrashInfo | None = None
        while pos < end:
            exhausted = False
            values = []
            for size, mask in ports:
                chunk = data[pos : pos + size]
                pos += size
                if len(chunk) < size:
                    exhausted = True
                values.append(int.from_bytes(chunk, "little") & mask)
            tracer.hit(SITE_H_CYCLE, _HARNESS)
            dut.drive_cycle(values)
            cycles += 1
            if track_fsm:
                visited.add(dut.fsm_state())
            fired = dut.assertions.check(dut)
            if fired is not None:
                crash = CrashInfo(fired, cycles)
                break
            if exhausted:
                break

        dut.set_tracer(NULL_TRACER)
        return TestOutcome(
            crash=crash,
            executed_cycles=cycles,
            decoded_instruction_count=0,
            coverage=cmap,
            fsm_states=frozenset(visited) if track_fsm else None,
        )


class BusHarness:
    """Decodes test bytes into bus instructions and plays them out."""

    def __init__(
        self,
        device: MmioDevice,
        opcode_format: OpcodeFormat,
        frame_format: FrameFormat,
        *,
        fork_point: ForkPoint = ForkPoint.AFTER_RESET,
        scope: ScopeFilter = ScopeFilter.DUT_ONLY,
    ) -> None:
        self.device = device
        self.host = BusHost(device)
        self.opcode_format = opcode_format
        self.frame_format = frame_format
        self.fork_point = fork_point
        self.scope = scope
        device.reset()
        self._baseline = device.snapshot()
        self._fsm_total = device.fsm_state_count
        self._track_fsm = self._fsm_total is not None

    @property
    def fsm_state_count(self) -> int | None:
        return self._fsm_total

    def run(self, data: bytes) -> TestOutcome:
        device = self.device
        host = self.host
        if self.fork_point is ForkPoint.AT_START:
            device.reset()
        else:
            device.restore(self._baseline)

        cmap = CoverageMap()
        tracer = EdgeTracer(cmap, self.scope)
        host.set_tracer(tracer)
        device.assertions.begin_test()
        tracer.hit(SITE_H_START, _HARNESS)

        instructions = decode_stream(data, self.opcode_format, self.frame_format)
        track_fsm = self._track_fsm
        visited: set[int] = {device.fsm_state()} if track_fsm else set()
        cycles = 0
        crash: CrashInfo | None = None
        for ins in instructions:
            opcode = ins.opcode
            if opcode is Opcode.WAIT:
                tracer.hit(SITE_H_EXEC_WAIT, _HARNESS)
                host.idle()
            elif opcode is Opcode.READ:
                tracer.hit(SITE_H_EXEC_READ, _HARNESS)
                host.get(ins.address)
            else:
                tracer.hit(SITE_H_EXEC_WRITE, _HARNESS)
                host.put_full(ins.address, ins.data)
            cycles += 1
            if track_fsm:
                visited.add(device.fsm_state())
            fired = device.assertions.check(device)
            if fired is not None:
                crash = CrashInfo(fired, cycles)
                break

        host.set_tracer(NULL_TRACER)
        return TestOutcome(
            crash=crash,
            executed_cycles=cycles,
            decoded_instruction_count=len(instructions),
            coverage=cmap,
            fsm_states=frozenset(visited) if track_fsm else None,
        )


def run_generic(
    dut,
    test_bytes: bytes,
    fork_point: ForkPoint = ForkPoint.AFTER_RESET,
    scope: ScopeFilter = ScopeFilter.DUT_ONLY,
) -> TestOutcome:
    """One-shot generic-harness execution."""
    return GenericHarness(dut, fork_point=fork_point, scope=scope).run(test_bytes)


def run_bus(
    device: MmioDevice,
    test_bytes: bytes,
    opcode_format: OpcodeFormat,
    frame_format: FrameFormat,
    fork_point: ForkPoint = ForkPoint.AFTER_RESET,
    scope: ScopeFilter = ScopeFilter.DUT_ONLY,
) -> TestOutcome:
    """One-shot bus-harness execution."""
    harness = BusHarness(
        device, opcode_format, frame_format, fork_point=fork_point, scope=scope
    )
    return harness.run(test_bytes)
