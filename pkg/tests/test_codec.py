import io
import os
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cermet import ciphers
from cermet.ciphers import CipherSuiteId, KeyPair
from cermet.codec import (
    ChannelPayload,
    CodecConfig,
    MessageBatch,
    Reassembler,
    channel_nonce,
    coded_batch,
    decode_batch,
    decode_frames,
    decode_many,
    decode_stream,
    encode_batch,
    encode_many,
    encode_stream,
    make_frame,
    pack_symbols,
    pad_message,
    unpack_symbols,
    unpad_message,
)
from cermet.errors import (
    BadPadding,
    BatchIdMismatch,
    CodecError,
    DimensionMismatch,
    FrameMismatch,
    MalformedCiphertext,
    Misaligned,
    MissingChannel,
    ReassemblyTimeout,
    SuiteMismatch,
)
from cermet.frame import iter_frames
from cermet.gf import FieldSpec
from cermet.mrd import SecrecyCode, mat_vec_mul

SUITES = list(CipherSuiteId)


def random_batch(cfg, rng):
    return MessageBatch(rng.integers(0, cfg.spec.q, size=(cfg.n, cfg.N)).astype(np.uint32))


def test_pack_examples():
    assert pack_symbols([0x0102, 0x0304], 16) == bytes([1, 2, 3, 4])
    assert pack_symbols([0xAB], 8) == b"\xab"
    assert pack_symbols([0xA, 0xB], 4) == b"\xab"
    assert pack_symbols([1, 2, 3, 4, 5, 6, 7, 0], 3) == bytes([0b00101001, 0b11001011, 0b10111000])
    with pytest.raises(Misaligned):
        pack_symbols([1], 4)


@pytest.mark.parametrize("m", [2, 3, 4, 5, 8, 12, 16])
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_pack_round_trip(m, data):
    count = 8 * data.draw(st.integers(1, 6))
    row = data.draw(st.lists(st.integers(0, (1 << m) - 1), min_size=count, max_size=count))
    packed = pack_symbols(row, m)
    assert len(packed) == count * m // 8
    assert unpack_symbols(packed, m) == row


def test_padding_examples():
    assert pad_message(b"", 8) == b"\x80" + bytes(7)
    assert pad_message(bytes(8), 8) == bytes(8) + b"\x80" + bytes(7)
    assert unpad_message(pad_message(b"", 8), 8) == b""
    with pytest.raises(BadPadding):
        unpad_message(bytes(8), 8)
    with pytest.raises(BadPadding):
        unpad_message(b"", 8)
    with pytest.raises(BadPadding):
        unpad_message(bytes(7), 8)


def test_padding_round_trip_lengths():
    rng = random.Random(1)
    for length in range(0, 1001):
        data = rng.randbytes(length)
        padded = pad_message(data, 64)
        assert len(padded) % 64 == 0 and len(padded) > len(data)
        assert unpad_message(padded, 64) == data


def test_config_validation():
    spec = FieldSpec(4)
    code = SecrecyCode.default(4, spec)
    assert CodecConfig(code).k_in == 128
    assert CodecConfig(code).N == 32
    x = CodecConfig.create(4, m=16, suite="x25519")
    assert x.k_in == 256 and x.N == 16
    with pytest.raises(ValueError):
        CodecConfig(code, c=0)
    with pytest.raises(ValueError):
        CodecConfig(code, c=5)
    with pytest.raises(ValueError):
        CodecConfig(code, k_in=126)  # not a multiple of 4
    with pytest.raises(Misaligned):
        CodecConfig(SecrecyCode.default(2, FieldSpec(3)), k_in=9)
    with pytest.raises(ValueError):
        CodecConfig(code, CipherSuiteId.AES256_CTR, keys=())
    with pytest.raises(SuiteMismatch):
        CodecConfig(code, CipherSuiteId.AES256_CTR, keys=(ciphers.gen(CipherSuiteId.X25519_HYBRID),))


def test_identity_configuration():
    spec = FieldSpec(8)
    cfg = CodecConfig(SecrecyCode.default(1, spec), k_in=64)
    batch = MessageBatch(np.arange(8, dtype=np.uint32)[None])
    (p,) = encode_batch(batch, cfg)
    assert p.data == bytes(range(8))
    assert decode_batch([p], cfg) == batch


def test_first_column_of_g():
    spec = FieldSpec(4)
    cfg = CodecConfig(SecrecyCode.from_basis([1, 2], spec), k_in=8)
    batch = MessageBatch(np.array([[0x1, 0x0], [0x0, 0x0]], dtype=np.uint32))
    coded = coded_batch(batch, cfg)
    assert coded.symbols[:, 0].tolist() == [0xF, 0xE]
    assert [p.data for p in encode_batch(batch, cfg)] == [b"\xf0", b"\xe0"]


@pytest.mark.parametrize("suite", SUITES)
@pytest.mark.parametrize("n", [1, 2, 4, 8, 16])
def test_round_trip_grid(suite, n):
    rng = np.random.default_rng(n)
    for c in sorted({1, max(1, n // 2), n}):
        cfg = CodecConfig.create(n, m=16, suite=suite, c=c)
        msgs = rng.integers(0, 1 << 16, size=(100, n, cfg.N)).astype(np.uint32)
        enc = encode_many(msgs, cfg, first_batch_id=7)
        assert np.array_equal(decode_many(enc, cfg), msgs)
        # zero rate overhead: payload bits excluding nonces = n * k_in
        nonce = ciphers.NONCE_LEN[cfg.suite]
        assert sum(len(p) for p in enc[0]) - c * nonce == n * cfg.k_in // 8


@pytest.mark.parametrize("suite", SUITES)
@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6), m=st.sampled_from([8, 16]))
def test_batch_round_trip_property(suite, seed, n, m):
    rng = np.random.default_rng(seed)
    cfg = CodecConfig.create(n, m=m, suite=suite, c=rng.integers(1, n + 1))
    batch = random_batch(cfg, rng)
    payloads = encode_batch(batch, cfg, batch_id=seed)
    random.Random(seed).shuffle(payloads)
    assert decode_batch(payloads, cfg) == batch


def test_plain_channels_are_transparent():
    rng = np.random.default_rng(2)
    cfg = CodecConfig.create(4, m=16, suite="aes", c=1)
    batch = random_batch(cfg, rng)
    payloads = encode_batch(batch, cfg)
    for i in range(1, 4):
        row = [mat_vec_mul(cfg.code.G, batch.symbols[:, col].tolist(), cfg.spec)[i] for col in range(cfg.N)]
        assert payloads[i].data == pack_symbols(row, 16)
    assert payloads[0].encrypted and not payloads[1].encrypted
    assert payloads[0].data[:12] == channel_nonce(cfg.suite, 0, 0)


@pytest.mark.parametrize("suite", SUITES)
def test_determinism(suite):
    rng = np.random.default_rng(3)
    cfg = CodecConfig.create(3, m=16, suite=suite, c=2)
    batch = random_batch(cfg, rng)
    assert encode_batch(batch, cfg, 5) == encode_batch(batch, cfg, 5)
    if suite is not CipherSuiteId.NULL:
        assert encode_batch(batch, cfg, 5)[0] != encode_batch(batch, cfg, 6)[0]


def test_sender_needs_only_public_keys():
    kp = ciphers.gen(CipherSuiteId.X25519_HYBRID)
    pub = KeyPair.from_public(kp.suite, kp.public_key)
    tx = CodecConfig.create(2, suite="x25519", keys=[pub])
    rx = CodecConfig(tx.code, tx.suite, keys=(kp,))
    batch = random_batch(tx, np.random.default_rng(4))
    assert decode_batch(encode_batch(batch, tx), rx) == batch


def test_decode_batch_errors():
    cfg = CodecConfig.create(3, m=16, suite="null")
    batch = random_batch(cfg, np.random.default_rng(5))
    payloads = encode_batch(batch, cfg, 1)
    with pytest.raises(MissingChannel) as exc:
        decode_batch(payloads[:2], cfg)
    assert exc.value.channels == (2,)
    assert "missing channel 2" in str(exc.value)
    other = encode_batch(batch, cfg, 2)
    with pytest.raises(BatchIdMismatch):
        decode_batch([payloads[0], payloads[1], other[2]], cfg)
    with pytest.raises(ValueError):
        decode_batch(payloads + payloads[:1], cfg)
    with pytest.raises(MalformedCiphertext):
        decode_batch([ChannelPayload(0, True, 1, b"x"), *payloads[1:]], cfg)
    with pytest.raises(DimensionMismatch):
        decode_batch([*payloads[:2], ChannelPayload(2, False, 1, b"x")], cfg)


def test_corrupted_plain_channel_changes_output():
    cfg = CodecConfig.create(2, m=16, suite="aes")
    batch = random_batch(cfg, np.random.default_rng(6))
    payloads = encode_batch(batch, cfg)
    data = bytearray(payloads[1].data)
    data[0] ^= 1
    bad = ChannelPayload(1, False, 0, bytes(data))
    assert decode_batch([payloads[0], bad], cfg) != batch


def _encode_file(data, cfg):
    outs = [io.BytesIO() for _ in range(cfg.n)]
    count = encode_stream(io.BytesIO(data), cfg, outs, chunk_batches=7)
    return count, [o.getvalue() for o in outs]


@pytest.mark.parametrize("suite", SUITES)
@pytest.mark.parametrize("size", [0, 1, 63, 64, 65, 5000])
def test_stream_round_trip(suite, size):
    cfg = CodecConfig.create(4, m=16, suite=suite)
    data = os.urandom(size)
    count, chans = _encode_file(data, cfg)
    assert count == size // cfg.batch_bytes + 1
    out = io.BytesIO()
    readers = [io.BytesIO(c) for c in reversed(chans)]
    assert decode_stream(readers, cfg, out) == count
    assert out.getvalue() == data


def test_batch_level_shuffle():
    cfg = CodecConfig.create(4, m=16, suite="aes")
    data = os.urandom(10_000)
    _, chans = _encode_file(data, cfg)
    frames = [f for c in chans for f in iter_frames(io.BytesIO(c))]
    random.Random(8).shuffle(frames)
    out = io.BytesIO()
    decode_frames(frames, cfg, out, chunk_batches=3)
    assert out.getvalue() == data


def test_stream_missing_channel():
    cfg = CodecConfig.create(3, m=16, suite="null")
    _, chans = _encode_file(os.urandom(500), cfg)
    with pytest.raises(MissingChannel) as exc:
        decode_stream([io.BytesIO(chans[0]), io.BytesIO(chans[2])], cfg, io.BytesIO())
    assert exc.value.channels == (1,)
    # a channel that stops early
    frames = list(iter_frames(io.BytesIO(chans[1])))
    short = b"".join(f.serialize() for f in frames[:-1])
    with pytest.raises(MissingChannel) as exc:
        decode_stream([io.BytesIO(chans[0]), io.BytesIO(short), io.BytesIO(chans[2])], cfg, io.BytesIO())
    assert exc.value.channels == (1,) and exc.value.batch_id == len(frames) - 1


def test_empty_stream_is_an_error():
    cfg = CodecConfig.create(2, m=16, suite="null")
    with pytest.raises(CodecError):
        decode_frames([], cfg, io.BytesIO())


def test_reassembler_window_and_checks():
    cfg = CodecConfig.create(2, m=16, suite="null")
    r = Reassembler(cfg, window=3)
    payload = bytes(cfg.channel_bytes)
    for bid in range(1, 4):
        assert r.add(make_frame(cfg, 1, bid, payload)) == []
    with pytest.raises(ReassemblyTimeout):
        r.add(make_frame(cfg, 1, 4, payload))
    r = Reassembler(cfg)
    r.add(make_frame(cfg, 0, 0, payload))
    with pytest.raises(FrameMismatch):
        r.add(make_frame(cfg, 0, 0, payload))
    done = r.add(make_frame(cfg, 1, 0, payload))
    assert [bid for bid, _ in done] == [0]
    with pytest.raises(FrameMismatch):
        r.add(make_frame(cfg, 1, 0, payload))
    with pytest.raises(FrameMismatch):
        r.add(make_frame(cfg, 1, 1, payload[:-1]))
    other = CodecConfig.create(2, m=8, suite="null")
    with pytest.raises(FrameMismatch):
        r.add(make_frame(other, 0, 1, bytes(other.channel_bytes)))
