import io
import random

import pytest
from hypothesis import given, settings, strategies as st

from cermet.errors import BadMagic, FrameError, MalformedHeader, Truncated, UnsupportedVersion
from cermet.frame import (
    HEADER_LEN,
    ChannelFrame,
    frame_parse,
    frame_serialize,
    iter_frames,
    parse_prefix,
    read_frame,
)

# hand-assembled reference bytes; must never change
GOLDEN_FRAME = ChannelFrame(16, 4, 1, 2, False, 1, 0x0102030405060708, b"\xde\xad")
GOLDEN_BYTES = bytes.fromhex(
    "434d5431"          # magic
    "01"                # version
    "10" "04" "01"      # m n c
    "02"                # channel_index
    "00"                # flags
    "01"                # suite
    "00"                # reserved
    "0102030405060708"  # batch_id
    "00000002"          # payload_len
    "dead"
)
GOLDEN_ENCRYPTED = ChannelFrame(8, 2, 1, 0, True, 2, 1, bytes(3))
GOLDEN_ENCRYPTED_BYTES = bytes.fromhex("434d5431" "01080201" "00010200" "0000000000000001" "00000003" "000000")


def test_header_is_24_bytes():
    assert HEADER_LEN == 24


def test_golden_bytes():
    assert frame_serialize(GOLDEN_FRAME) == GOLDEN_BYTES
    assert frame_parse(GOLDEN_BYTES) == GOLDEN_FRAME
    assert GOLDEN_ENCRYPTED.serialize() == GOLDEN_ENCRYPTED_BYTES
    assert frame_parse(GOLDEN_ENCRYPTED_BYTES) == GOLDEN_ENCRYPTED


def test_minimal_null_frame_round_trip():
    f = ChannelFrame(2, 1, 1, 0, False, 0, 0, b"")
    assert frame_parse(f.serialize()) == f


def _mutate(buf, offset, value):
    b = bytearray(buf)
    b[offset] = value
    return bytes(b)


def test_rejections():
    with pytest.raises(BadMagic):
        frame_parse(b"XXXX" + GOLDEN_BYTES[4:])
    with pytest.raises(UnsupportedVersion):
        frame_parse(_mutate(GOLDEN_BYTES, 4, 2))
    with pytest.raises(MalformedHeader):
        frame_parse(_mutate(GOLDEN_BYTES, 11, 1))  # reserved
    with pytest.raises(MalformedHeader):
        frame_parse(_mutate(GOLDEN_BYTES, 9, 0x02))  # unknown flag
    with pytest.raises(MalformedHeader):
        frame_parse(_mutate(GOLDEN_BYTES, 8, 4))  # channel_index >= n
    with pytest.raises(MalformedHeader):
        frame_parse(_mutate(GOLDEN_BYTES, 7, 5))  # c > n
    with pytest.raises(MalformedHeader):
        frame_parse(_mutate(GOLDEN_BYTES, 10, 9))  # unknown suite
    with pytest.raises(MalformedHeader):
        frame_parse(GOLDEN_BYTES[:20] + (1 << 24).to_bytes(4, "big"))
    with pytest.raises(Truncated):
        frame_parse(GOLDEN_BYTES[:10])
    with pytest.raises(Truncated):
        frame_parse(GOLDEN_BYTES[:-1])
    with pytest.raises(MalformedHeader):
        frame_parse(GOLDEN_BYTES + b"\x00")
    with pytest.raises(MalformedHeader):
        frame_serialize(ChannelFrame(16, 2, 1, 2, False, 0, 0, b""))


def test_stream_reading():
    stream = io.BytesIO(GOLDEN_BYTES + GOLDEN_ENCRYPTED_BYTES)
    assert list(iter_frames(stream)) == [GOLDEN_FRAME, GOLDEN_ENCRYPTED]
    assert read_frame(io.BytesIO(b"")) is None
    with pytest.raises(Truncated):
        read_frame(io.BytesIO(GOLDEN_BYTES[:-1]))
    with pytest.raises(Truncated):
        read_frame(io.BytesIO(GOLDEN_BYTES[:5]))
    frame, used = parse_prefix(GOLDEN_BYTES + b"tail")
    assert frame == GOLDEN_FRAME and used == len(GOLDEN_BYTES)


frames = st.builds(
    lambda m, n, data, enc, suite, bid, payload: ChannelFrame(
        m, n, data.draw(st.integers(1, n)), data.draw(st.integers(0, n - 1)), enc, suite, bid, payload
    ),
    st.integers(0, 255),
    st.integers(1, 255),
    st.data(),
    st.booleans(),
    st.integers(0, 2),
    st.integers(0, 2**64 - 1),
    st.binary(max_size=300),
)


@settings(max_examples=500, deadline=None)
@given(frame=frames)
def test_round_trip_property(frame):
    assert frame_parse(frame_serialize(frame)) == frame


def fuzz(iterations, seed):
    """Random and mutated inputs; every outcome must be a frame or a FrameError."""
    rng = random.Random(seed)
    seeds = [GOLDEN_BYTES, GOLDEN_ENCRYPTED_BYTES]
    parsed = rejected = 0
    for i in range(iterations):
        if i % 2:
            buf = rng.randbytes(rng.randint(0, 64))
            if rng.random() < 0.3:
                buf = b"CMT1\x01" + buf
        else:
            buf = bytearray(rng.choice(seeds))
            for _ in range(rng.randint(1, 4)):
                op = rng.random()
                if op < 0.6 and buf:
                    buf[rng.randrange(len(buf))] = rng.randrange(256)
                elif op < 0.8:
                    del buf[rng.randrange(len(buf) + 1):]
                else:
                    buf += rng.randbytes(rng.randint(1, 8))
            buf = bytes(buf)
        try:
            frame = frame_parse(buf)
        except FrameError:
            rejected += 1
            continue
        assert frame_serialize(frame) == buf
        parsed += 1
    return parsed, rejected


def test_parser_fuzz_1e4():
    parsed, rejected = fuzz(10_000, seed=1)
    assert parsed > 0 and rejected > 0


def test_random_valid_frames_1e4():
    rng = random.Random(2)
    for _ in range(10_000):
        n = rng.randint(1, 255)
        f = ChannelFrame(
            rng.randint(0, 255), n, rng.randint(1, n), rng.randrange(n), rng.random() < 0.5,
            rng.randint(0, 2), rng.getrandbits(64), rng.randbytes(rng.randint(0, 40)),
        )
        assert frame_parse(frame_serialize(f)) == f
