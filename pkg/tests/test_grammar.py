"""Instruction grammar: decode totality, round-trips, seed text."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hwfuzz import (
    FrameFormat,
    HwfInstruction,
    Opcode,
    OpcodeFormat,
    SeedTextError,
    compile_seed_text,
    decode_stream,
    encode_instructions,
    parse_seed_text,
)

ALL_FORMATS = [
    (opcode_format, frame_format)
    for opcode_format in OpcodeFormat
    for frame_format in FrameFormat
]

_WORD = st.integers(0, 0xFFFFFFFF)
_INSTRUCTION = st.one_of(
    st.just(HwfInstruction.wait()),
    st.builds(HwfInstruction.read, _WORD),
    st.builds(HwfInstruction.write, _WORD, _WORD),
)


def test_instruction_field_liveness():
    with pytest.raises(ValueError):
        HwfInstruction(Opcode.WAIT, address=1)
    with pytest.raises(ValueError):
        HwfInstruction(Opcode.READ)
    with pytest.raises(ValueError):
        HwfInstruction(Opcode.READ, address=4, data=1)
    with pytest.raises(ValueError):
        HwfInstruction(Opcode.WRITE, address=4)
    with pytest.raises(ValueError):
        HwfInstruction(Opcode.READ, address=1 << 32)


def test_wait_encodings_frozen():
    wait = [HwfInstruction.wait()]
    assert encode_instructions(wait, OpcodeFormat.CONSTANT, FrameFormat.VARIABLE) == b"\x00"
    fixed = encode_instructions(wait, OpcodeFormat.CONSTANT, FrameFormat.FIXED)
    assert len(fixed) == 9
    assert fixed == b"\x00" + b"\x00" * 8
    assert encode_instructions([], OpcodeFormat.MAPPED, FrameFormat.FIXED) == b""


def test_little_endian_fields_frozen():
    read = [HwfInstruction.read(0x01020304)]
    assert (
        encode_instructions(read, OpcodeFormat.CONSTANT, FrameFormat.VARIABLE)
        == b"\x01\x04\x03\x02\x01"
    )
    write = [HwfInstruction.write(0x10, 0xDEADBEEF)]
    assert (
        encode_instructions(write, OpcodeFormat.CONSTANT, FrameFormat.VARIABLE)
        == b"\x02\x10\x00\x00\x00\xef\xbe\xad\xde"
    )


def test_variable_frame_lengths():
    combos = [
        (HwfInstruction.wait(), 1),
        (HwfInstruction.read(0), 5),
        (HwfInstruction.write(0, 0), 9),
    ]
    for instruction, length in combos:
        encoded = encode_instructions([instruction], OpcodeFormat.CONSTANT, FrameFormat.VARIABLE)
        assert len(encoded) == length
        fixed = encode_instructions([instruction], OpcodeFormat.CONSTANT, FrameFormat.FIXED)
        assert len(fixed) == 9


@settings(max_examples=200)
@given(st.lists(_INSTRUCTION, max_size=12))
def test_round_trip_all_format_combinations(instructions):
    for opcode_format, frame_format in ALL_FORMATS:
        encoded = encode_instructions(instructions, opcode_format, frame_format)
        assert decode_stream(encoded, opcode_format, frame_format) == instructions


def test_round_trip_bulk_randomized():
    # a fixed-seed sweep, denser than the property run
    rng = random.Random(2024)
    makers = [
        lambda: HwfInstruction.wait(),
        lambda: HwfInstruction.read(rng.getrandbits(32)),
        lambda: HwfInstruction.write(rng.getrandbits(32), rng.getrandbits(32)),
    ]
    for _ in range(2500):
        instructions = [rng.choice(makers)() for _ in range(rng.randrange(0, 8))]
        for opcode_format, frame_format in ALL_FORMATS:
            encoded = encode_instructions(instructions, opcode_format, frame_format)
            assert decode_stream(encoded, opcode_format, frame_format) == instructions


def test_mapped_opcode_ranges():
    # [0x00,0x55] wait, [0x56,0xAA] read, [0xAB,0xFF] write
    for byte in range(256):
        padded = bytes([byte]) + b"\xff" * 8
        decoded = decode_stream(padded, OpcodeFormat.MAPPED, FrameFormat.VARIABLE)
        assert decoded, f"byte {byte:#04x} decoded nothing"
        expected = (
            Opcode.WAIT if byte <= 0x55 else Opcode.READ if byte <= 0xAA else Opcode.WRITE
        )
        assert decoded[0].opcode is expected


def test_constant_opcode_sparsity():
    # exactly 3 of 256 leading bytes start an instruction
    starters = []
    for byte in range(256):
        padded = bytes([byte]) + b"\xff" * 8
        if decode_stream(padded, OpcodeFormat.CONSTANT, FrameFormat.VARIABLE):
            starters.append(byte)
    assert starters == [0x00, 0x01, 0x02]


def test_single_byte_streams_under_constant():
    # only the 1-byte wait frame fits in a single byte
    counts = [
        len(decode_stream(bytes([byte]), OpcodeFormat.CONSTANT, FrameFormat.VARIABLE))
        for byte in range(256)
    ]
    assert counts[0x00] == 1
    assert sum(counts) == 1


def test_invalid_bytes_are_skipped_not_fatal():
    # junk, then a valid write, then junk
    stream = b"\x7f\x99" + encode_instructions(
        [HwfInstruction.write(4, 9)], OpcodeFormat.CONSTANT, FrameFormat.VARIABLE
    ) + b"\xee"
    decoded = decode_stream(stream, OpcodeFormat.CONSTANT, FrameFormat.VARIABLE)
    assert decoded == [HwfInstruction.write(4, 9)]


def test_truncated_trailing_frame_is_discarded():
    assert decode_stream(b"\x02" + b"\x00" * 7, OpcodeFormat.CONSTANT, FrameFormat.VARIABLE) == []
    assert decode_stream(b"\x01\x04\x03", OpcodeFormat.CONSTANT, FrameFormat.VARIABLE) == []
    # a complete frame before the truncated one survives
    stream = b"\x00" + b"\x01\x04"
    assert decode_stream(stream, OpcodeFormat.CONSTANT, FrameFormat.VARIABLE) == [
        HwfInstruction.wait()
    ]


@settings(max_examples=200)
@given(st.binary(max_size=64), st.sampled_from(list(OpcodeFormat)))
def test_variable_decodes_at_least_as_many_as_fixed(data, opcode_format):
    variable = decode_stream(data, opcode_format, FrameFormat.VARIABLE)
    fixed = decode_stream(data, opcode_format, FrameFormat.FIXED)
    assert len(variable) >= len(fixed)


@settings(max_examples=100)
@given(st.binary(max_size=64))
def test_decode_is_total(data):
    for opcode_format, frame_format in ALL_FORMATS:
        decode_stream(data, opcode_format, frame_format)  # must not raise


def test_parse_seed_text_basic():
    text = "wait\nwrite 0x10 0xdeadbeef"
    parsed = parse_seed_text(text)
    assert parsed == [HwfInstruction.wait(), HwfInstruction.write(0x10, 0xDEADBEEF)]
    assert parse_seed_text("read 0x04") == [HwfInstruction.read(4)]


def test_parse_seed_text_comments_and_blanks():
    text = "# header\n\nwait  # trailing\n  read 8\n"
    assert parse_seed_text(text) == [HwfInstruction.wait(), HwfInstruction.read(8)]


def test_parse_seed_text_errors_carry_line_numbers():
    with pytest.raises(SeedTextError) as err:
        parse_seed_text("frobnicate")
    assert err.value.line_no == 1
    with pytest.raises(SeedTextError) as err:
        parse_seed_text("wait\nread")
    assert err.value.line_no == 2
    with pytest.raises(SeedTextError) as err:
        parse_seed_text("wait\nwait\nwrite 0x4 bogus")
    assert err.value.line_no == 3
    with pytest.raises(SeedTextError) as err:
        parse_seed_text("read 0x100000000")  # out of 32-bit range
    assert err.value.line_no == 1


def test_compile_seed_text_round_trips():
    text = "wait\nwrite 0x10 0xdeadbeef\nread 0x04"
    for opcode_format, frame_format in ALL_FORMATS:
        data = compile_seed_text(text, opcode_format, frame_format)
        assert decode_stream(data, opcode_format, frame_format) == parse_seed_text(text)
