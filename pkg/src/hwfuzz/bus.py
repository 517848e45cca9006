"""Single-beat TL-UL style bus host and the memory-mapped peripherals.

The bus subset is deliberately small: one Get or PutFullData per cycle,
32-bit data, always-ready device, response one cycle after issue. Each
bus operation therefore costs exactly one simulated clock cycle; the
access is applied first and the device then ticks once, so a value read
back reflects the device state at issue time.

Unmapped reads return 0 and set a sticky per-device bus-error flag;
unmapped writes and writes to read-only registers are dropped and set
the same flag. Flagged accesses are not crashes; crashes are reserved
for armed assertion violations.
"""

from __future__ import annotations

from dataclasses import dataclass

from .coverage import NULL_TRACER, Component
from .dut import AssertionRegistry, DigitalLock, DutSnapshot, SnapshotMismatchError

_DUT = Component.DUT
_BUS = Component.BUS

SITE_BUS_GET = 0x0400
SITE_BUS_PUT = 0x0401
SITE_BUS_IDLE = 0x0402

_WORD_MASK = 0xFFFFFFFF
_U64_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class RegisterSpec:
    """One word-aligned register: offset, name, access mode, field mask."""

    offset: int
    name: str
    access: str  # "rw", "ro" or "wo"
    mask: int = _WORD_MASK
    doc: str = ""

    def __post_init__(self) -> None:
        if self.offset % 4 != 0:
            raise ValueError(f"register {self.name} offset {self.offset:#x} not word-aligned")
        if self.access not in ("rw", "ro", "wo"):
            raise ValueError(f"register {self.name} has unknown access {self.access!r}")


class MmioDevice:
    """Shared register-file plumbing for bus peripherals.

    Subclasses define REGISTERS and SITE_BASE plus per-register value
    accessors, a tick and a reset. The address decoder lives here and is
    instrumented as DUT logic: one site per mapped register per
    direction, plus sites for the unmapped and read-only error paths.
    """

    REGISTERS: tuple[RegisterSpec, ...] = ()
    SITE_BASE = 0x0280

    def __init__(self) -> None:
        offsets = [spec.offset for spec in self.REGISTERS]
        if len(set(offsets)) != len(offsets):
            raise ValueError("duplicate register offsets")
        self._by_offset = {spec.offset: (index, spec) for index, spec in enumerate(self.REGISTERS)}
        self.trace = NULL_TRACER
        self.assertions = AssertionRegistry()
        self.bus_error = False

    # site layout within the device's block
    def _site_read(self, index: int) -> int:
        return self.SITE_BASE + 0x10 + index

    def _site_write(self, index: int) -> int:
        return self.SITE_BASE + 0x20 + index

    def read(self, addr: int) -> int:
        entry = self._by_offset.get(addr)
        if entry is None:
            self.bus_error = True
            self.trace.hit(self.SITE_BASE + 0, _DUT)
            return 0
        index, spec = entry
        self.trace.hit(self._site_read(index), _DUT)
        if spec.access == "wo":
            return 0
        return self._read_reg(spec) & spec.mask

    def write(self, addr: int, data: int) -> None:
        entry = self._by_offset.get(addr)
        if entry is None:
            self.bus_error = True
            self.trace.hit(self.SITE_BASE + 1, _DUT)
            return
        index, spec = entry
        if spec.access == "ro":
            self.bus_error = True
            self.trace.hit(self.SITE_BASE + 2, _DUT)
            return
        self.trace.hit(self._site_write(index), _DUT)
        self._write_reg(spec, data & spec.mask)

    # subclass hooks
    def _read_reg(self, spec: RegisterSpec) -> int:
        raise NotImplementedError

    def _write_reg(self, spec: RegisterSpec, value: int) -> None:
        raise NotImplementedError

    def tick(self) -> None:
        raise NotImplementedError

    def reset(self) -> None:
        raise NotImplementedError

    def set_tracer(self, tracer: object) -> None:
        self.trace = tracer

    def fsm_state(self) -> int | None:
        return None

    @property
    def fsm_state_count(self) -> int | None:
        return None


class TimerDevice(MmioDevice):
    """64-bit timer with a 12-bit prescaler and an 8-bit step.

    While active, ``mtime`` increases by ``step`` once every
    ``prescaler + 1`` ticks, so after T active ticks
    ``mtime == step * (T // (prescaler + 1))``. The interrupt line
    follows ``mtime >= mtimecmp`` while active and is 0 otherwise.
    """

    SITE_BASE = 0x0200
    SITE_TICK_IDLE = 0x0240
    SITE_TICK_COUNT = 0x0241
    SITE_TICK_STEP = 0x0242
    SITE_INTR_ON = 0x0243
    SITE_INTR_OFF = 0x0244

    REGISTERS = (
        RegisterSpec(0x00, "CTRL", "rw", 0x1, "bit0: active"),
        RegisterSpec(0x04, "CFG", "rw", 0xFFFFF, "bits [11:0]: prescaler, bits [19:12]: step"),
        RegisterSpec(0x08, "MTIME_LOW", "rw", doc="mtime bits [31:0]"),
        RegisterSpec(0x0C, "MTIME_HIGH", "rw", doc="mtime bits [63:32]"),
        RegisterSpec(0x10, "MTIMECMP_LOW", "rw", doc="mtimecmp bits [31:0]"),
        RegisterSpec(0x14, "MTIMECMP_HIGH", "rw", doc="mtimecmp bits [63:32]"),
        RegisterSpec(0x18, "INTR_STATE", "ro", 0x1, "bit0: interrupt pending"),
    )

    def __init__(self) -> None:
        super().__init__()
        self.reset()

    def reset(self) -> None:
        self.mtime = 0
        self.mtimecmp = 0
        self.prescaler = 0
        self.step = 1
        self.active = False
        self.intr = False
        self._prescale_count = 0
        self.bus_error = False

    def tick(self) -> None:
        trace = self.trace
        if not self.active:
            trace.hit(self.SITE_TICK_IDLE, _DUT)
            self.intr = False
            return
        self._prescale_count += 1
        if self._prescale_count > self.prescaler:
            self._prescale_count = 0
            self.mtime = (self.mtime + self.step) & _U64_MASK
            trace.hit(self.SITE_TICK_STEP, _DUT)
        else:
            trace.hit(self.SITE_TICK_COUNT, _DUT)
        if self.mtime >= self.mtimecmp:
            self.intr = True
            trace.hit(self.SITE_INTR_ON, _DUT)
        else:
            self.intr = False
            trace.hit(self.SITE_INTR_OFF, _DUT)

    def _read_reg(self, spec: RegisterSpec) -> int:
        name = spec.name
        if name == "CTRL":
            return int(self.active)
        if name == "CFG":
            return (self.step << 12) | self.prescaler
        if name == "MTIME_LOW":
            return self.mtime & _WORD_MASK
        if name == "MTIME_HIGH":
            return (self.mtime >> 32) & _WORD_MASK
        if name == "MTIMECMP_LOW":
            return self.mtimecmp & _WORD_MASK
        if name == "MTIMECMP_HIGH":
            return (self.mtimecmp >> 32) & _WORD_MASK
        return int(self.intr)  # INTR_STATE

    def _write_reg(self, spec: RegisterSpec, value: int) -> None:
        name = spec.name
        if name == "CTRL":
            self.active = bool(value & 1)
        elif name == "CFG":
            self.prescaler = value & 0xFFF
            self.step = (value >> 12) & 0xFF
        elif name == "MTIME_LOW":
            self.mtime = (self.mtime & ~_WORD_MASK) | value
        elif name == "MTIME_HIGH":
            self.mtime = (self.mtime & _WORD_MASK) | (value << 32)
        elif name == "MTIMECMP_LOW":
            self.mtimecmp = (self.mtimecmp & ~_WORD_MASK) | value
        elif name == "MTIMECMP_HIGH":
            self.mtimecmp = (self.mtimecmp & _WORD_MASK) | (value << 32)

    _CKEY = ("timer",)

    def _config_key(self) -> tuple:
        return self._CKEY

    def snapshot(self) -> DutSnapshot:
        return DutSnapshot(
            self._config_key(),
            (
                self.mtime,
                self.mtimecmp,
                self.prescaler,
                self.step,
                self.active,
                self.intr,
                self._prescale_count,
                self.bus_error,
            ),
        )

    def restore(self, snap: DutSnapshot) -> None:
        if snap.config_key != self._config_key():
            raise SnapshotMismatchError(
                f"snapshot for {snap.config_key} cannot restore {self._config_key()}"
            )
        (
            self.mtime,
            self.mtimecmp,
            self.prescaler,
            self.step,
            self.active,
            self.intr,
            self._prescale_count,
            self.bus_error,
        ) = snap.payload


def arm_interrupt_assertion(timer: TimerDevice) -> None:
    """Register the assertion that fires when the timer interrupt raises."""
    timer.assertions.register("intr_raised", lambda t: bool(t.intr))


class LockPeripheral(MmioDevice):
    """Bus front-end for a :class:`DigitalLock`.

    CODE writes are the only path that advances the lock: each write
    applies one code for one clock edge. CTRL bit0 is a soft-reset
    strobe (one reset-asserted edge). Idle bus cycles do not clock the
    lock, so the unlock trace over the CODE writes equals driving the
    bare lock with the same code sequence.
    """

    SITE_BASE = 0x0300
    SITE_TICK = 0x0340

    REGISTERS = (
        RegisterSpec(0x00, "CTRL", "wo", 0x1, "bit0: soft reset strobe"),
        RegisterSpec(0x04, "CODE", "wo", doc="write applies one code for one cycle"),
        RegisterSpec(0x08, "STATUS", "ro", 0x1, "bit0: unlocked"),
    )

    def __init__(self, lock: DigitalLock) -> None:
        super().__init__()
        self.lock = lock
        cfg = lock.config
        self._ckey = ("lockp", cfg.state_bits, cfg.code_width, cfg.rng_seed)

    @property
    def unlocked(self) -> bool:
        return self.lock.unlocked

    def _read_reg(self, spec: RegisterSpec) -> int:
        return int(self.lock.unlocked)  # STATUS is the only readable register

    def _write_reg(self, spec: RegisterSpec, value: int) -> None:
        if spec.name == "CODE":
            self.lock.eval(1, value)
        elif value & 1:  # CTRL soft reset strobe
            self.lock.eval(0, 0)

    def tick(self) -> None:
        self.trace.hit(self.SITE_TICK, _DUT)

    def reset(self) -> None:
        self.lock.state = 0
        self.lock.unlocked = False
        self.bus_error = False

    def fsm_state(self) -> int:
        return self.lock.state

    @property
    def fsm_state_count(self) -> int:
        return self.lock.config.state_count

    def _config_key(self) -> tuple:
        return self._ckey

    def snapshot(self) -> DutSnapshot:
        return DutSnapshot(
            self._config_key(), (self.lock.state, self.lock.unlocked, self.bus_error)
        )

    def restore(self, snap: DutSnapshot) -> None:
        if snap.config_key != self._config_key():
            raise SnapshotMismatchError(
                f"snapshot for {snap.config_key} cannot restore {self._config_key()}"
            )
        self.lock.state, self.lock.unlocked, self.bus_error = snap.payload

    def set_tracer(self, tracer: object) -> None:
        self.trace = tracer
        self.lock.trace = tracer


class BusHost:
    """Issues single-beat operations against one attached device."""

    def __init__(self, device: MmioDevice) -> None:
        self.device = device
        self.trace = NULL_TRACER

    def set_tracer(self, tracer: object) -> None:
        self.trace = tracer
        self.device.set_tracer(tracer)

    def get(self, addr: int) -> int:
        self.trace.hit(SITE_BUS_GET, _BUS)
        value = self.device.read(addr & _WORD_MASK)
        self.device.tick()
        return value

    def put_full(self, addr: int, data: int) -> None:
        self.trace.hit(SITE_BUS_PUT, _BUS)
        self.device.write(addr & _WORD_MASK, data & _WORD_MASK)
        self.device.tick()

    def idle(self) -> None:
        self.trace.hit(SITE_BUS_IDLE, _BUS)
        self.device.tick()


def register_map_markdown(device: MmioDevice | type[MmioDevice]) -> str:
    """Render a device's register map as a markdown table."""
    rows = ["| Offset | Name | Access | Mask | Description |", "| --- | --- | --- | --- | --- |"]
    for spec in device.REGISTERS:
        rows.append(
            f"| {spec.offset:#04x} | {spec.name} | {spec.access} | {spec.mask:#x} | {spec.doc} |"
        )
    return "\n".join(rows) + "\n"
