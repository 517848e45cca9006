"""Byte-stream grammar that turns fuzzer output into bus test programs.

A test file is a flat byte string decoded greedily left to right into
Wait / Read / Write instructions. Two axes are configurable:

* opcode format: Constant reserves exactly the byte values 0x00 (Wait),
  0x01 (Read) and 0x02 (Write) and skips every other byte one at a time;
  Mapped partitions all 256 values into three ranges so every byte is a
  valid opcode ([0x00, 0x55] Wait, [0x56, 0xAA] Read, [0xAB, 0xFF] Write).
* frame format: Fixed gives every instruction a 9-byte frame (opcode +
  32-bit address + 32-bit data, unused fields dead); Variable sizes the
  frame by opcode (Wait 1 byte, Read 5, Write 9).

Address and data fields are 32-bit little-endian. A truncated trailing
frame is silently discarded. Decoding is total: any byte string decodes
to some (possibly empty) instruction list. A ``.hwf`` file is exactly
the encoded byte string, no header.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Opcode(Enum):
    WAIT = "wait"
    READ = "read"
    WRITE = "write"


class OpcodeFormat(Enum):
    CONSTANT = "constant"
    MAPPED = "mapped"


class FrameFormat(Enum):
    FIXED = "fixed"
    VARIABLE = "variable"


CONSTANT_OPCODES = {0x00: Opcode.WAIT, 0x01: Opcode.READ, 0x02: Opcode.WRITE}

# mapped range upper bounds (inclusive): 86 Wait values, 85 Read, 85 Write
MAPPED_WAIT_MAX = 0x55
MAPPED_READ_MAX = 0xAA

_CANONICAL_BYTE = {
    OpcodeFormat.CONSTANT: {Opcode.WAIT: 0x00, Opcode.READ: 0x01, Opcode.WRITE: 0x02},
    OpcodeFormat.MAPPED: {Opcode.WAIT: 0x00, Opcode.READ: 0x56, Opcode.WRITE: 0xAB},
}

_WORD_MASK = 0xFFFFFFFF


@dataclass(frozen=True)
class HwfInstruction:
    """One decoded bus operation. Field liveness follows the opcode."""

    opcode: Opcode
    address: int | None = None
    data: int | None = None

    def __post_init__(self) -> None:
        if self.opcode is Opcode.WAIT:
            if self.address is not None or self.data is not None:
                raise ValueError("wait carries no address or data")
        elif self.opcode is Opcode.READ:
            if self.address is None or self.data is not None:
                raise ValueError("read carries an address and no data")
        else:
            if self.address is None or self.data is None:
                raise ValueError("write carries an address and data")
        for name in ("address", "data"):
            value = getattr(self, name)
            if value is not None and not 0 <= value <= _WORD_MASK:
                raise ValueError(f"{name} out of 32-bit range: {value:#x}")

    @classmethod
    def wait(cls) -> "HwfInstruction":
        return cls(Opcode.WAIT)

    @classmethod
    def read(cls, address: int) -> "HwfInstruction":
        return cls(Opcode.READ, address)

    @classmethod
    def write(cls, address: int, data: int) -> "HwfInstruction":
        return cls(Opcode.WRITE, address, data)


def classify_opcode(byte: int, opcode_format: OpcodeFormat) -> Opcode | None:
    """Opcode for a raw byte, or None for an invalid Constant-format byte."""
    if opcode_format is OpcodeFormat.CONSTANT:
        return CONSTANT_OPCODES.get(byte)
    if byte <= MAPPED_WAIT_MAX:
        return Opcode.WAIT
    if byte <= MAPPED_READ_MAX:
        return Opcode.READ
    return Opcode.WRITE


def frame_length(opcode: Opcode, frame_format: FrameFormat) -> int:
    if frame_format is FrameFormat.FIXED:
        return 9
    if opcode is Opcode.WAIT:
        return 1
    if opcode is Opcode.READ:
        return 5
    return 9


def decode_stream(
    data: bytes, opcode_format: OpcodeFormat, frame_format: FrameFormat
) -> list[HwfInstruction]:
    """Greedy total decode; invalid opcodes skip one byte and emit nothing."""
    out: list[HwfInstruction] = []
    pos = 0
    end = len(data)
    while pos < end:
        opcode = classify_opcode(data[pos], opcode_format)
        if opcode is None:
            pos += 1
            continue
        frame = frame_length(opcode, frame_format)
        if pos + frame > end:
            break  # truncated trailing frame discarded
        if opcode is Opcode.WAIT:
            out.append(HwfInstruction(Opcode.WAIT))
        elif opcode is Opcode.READ:
            address = int.from_bytes(data[pos + 1 : pos + 5], "little")
            out.append(HwfInstruction(Opcode.READ, address))
        else:
            address = int.from_bytes(data[pos + 1 : pos + 5], "little")
            word = int.from_bytes(data[pos + 5 : pos + 9], "little")
            out.append(HwfInstruction(Opcode.WRITE, address, word))
        pos += frame
    return out


def encode_instructions(
    instructions: list[HwfInstruction],
    opcode_format: OpcodeFormat,
    frame_format: FrameFormat,
) -> bytes:
    """Inverse of decode for well-formed instructions (dead fields zero)."""
    canonical = _CANONICAL_BYTE[opcode_format]
    chunks: list[bytes] = []
    for ins in instructions:
        frame = bytearray(frame_length(ins.opcode, frame_format))
        frame[0] = canonical[ins.opcode]
        if ins.address is not None:
            frame[1:5] = ins.address.to_bytes(4, "little")
        if ins.data is not None:
            frame[5:9] = ins.data.to_bytes(4, "little")
        chunks.append(bytes(frame))
    return b"".join(chunks)


class SeedTextError(ValueError):
    """Malformed seed text; carries the 1-based offending line number."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _parse_int(token: str, line_no: int, what: str) -> int:
    try:
        value = int(token, 0)
    except ValueError:
        raise SeedTextError(line_no, f"bad {what} {token!r}") from None
    if not 0 <= value <= _WORD_MASK:
        raise SeedTextError(line_no, f"{what} out of 32-bit range: {token}")
    return value


def parse_seed_text(text: str) -> list[HwfInstruction]:
    """Parse the human seed format.

    One instruction per line: ``wait``, ``read <hex-addr>`` or
    ``write <hex-addr> <hex-data>``. ``#`` starts a comment; blank lines
    are ignored. Numbers accept any base int() does (0x... expected).
    """
    out: list[HwfInstruction] = []
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        keyword = tokens[0].lower()
        if keyword == "wait":
            if len(tokens) != 1:
                raise SeedTextError(line_no, "wait takes no operands")
            out.append(HwfInstruction(Opcode.WAIT))
        elif keyword == "read":
            if len(tokens) != 2:
                raise SeedTextError(line_no, "read takes exactly one address")
            out.append(HwfInstruction(Opcode.READ, _parse_int(tokens[1], line_no, "address")))
        elif keyword == "write":
            if len(tokens) != 3:
                raise SeedTextError(line_no, "write takes an address and a data word")
            address = _parse_int(tokens[1], line_no, "address")
            data = _parse_int(tokens[2], line_no, "data")
            out.append(HwfInstruction(Opcode.WRITE, address, data))
        else:
            raise SeedTextError(line_no, f"unknown instruction {tokens[0]!r}")
    return out


def compile_seed_text(
    text: str,
    opcode_format: OpcodeFormat = OpcodeFormat.CONSTANT,
    frame_format: FrameFormat = FrameFormat.VARIABLE,
) -> bytes:
    """Parse seed text and encode it under the campaign's formats."""
    return encode_instructions(parse_seed_text(text), opcode_format, frame_format)
