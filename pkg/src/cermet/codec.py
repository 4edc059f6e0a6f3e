"""Batch and stream codec: premix with G, encrypt c channels, decrypt, unmix with H.

A batch is n messages of N = k_in/m symbols each. Column i of the batch is
mixed as X^(i) = G M^(i); row j of the coded batch becomes channel j's
payload. Channels 0..c-1 are encrypted, the rest travel as packed symbols.
Symbols are packed most-significant-bit first, in column order.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator, Sequence

import numpy as np

from . import ciphers
from .ciphers import CipherSuiteId, Ciphertext, KeyPair, NonceTracker
from .errors import (
    BadPadding,
    BatchIdMismatch,
    CodecError,
    DimensionMismatch,
    FrameMismatch,
    MalformedCiphertext,
    Misaligned,
    MissingChannel,
    ReassemblyTimeout,
)
from .frame import ChannelFrame, frame_serialize, iter_frames
from .gf import DTYPE, FieldSpec
from .mrd import SecrecyCode

log = logging.getLogger(__name__)

DEFAULT_WINDOW = 1 << 16
CHUNK_BATCHES = 2048


@dataclass(frozen=True)
class CodecConfig:
    code: SecrecyCode
    suite: CipherSuiteId = CipherSuiteId.NULL
    c: int = 1
    k_in: int | None = None
    keys: tuple = ()
    ephemeral_seed: bytes | None = field(default=None, repr=False)
    backend: str = "rpa"
    nonce_tracker: NonceTracker | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        suite = CipherSuiteId(self.suite)
        object.__setattr__(self, "suite", suite)
        n, m = self.code.n, self.code.spec.m
        if n > m:
            raise ValueError(f"n={n} exceeds m={m}")
        if not 1 <= self.c <= n:
            raise ValueError(f"need 1 <= c <= n, got c={self.c}, n={n}")
        if self.k_in is None:
            object.__setattr__(self, "k_in", ciphers.DEFAULT_K_IN[suite])
        if self.k_in <= 0 or self.k_in % m:
            raise ValueError(f"k_in={self.k_in} is not a positive multiple of m={m}")
        if self.k_in % 8:
            raise Misaligned(f"k_in={self.k_in} is not a whole number of bytes")
        keys = tuple(self.keys)
        if suite is CipherSuiteId.NULL and not keys:
            keys = (ciphers.gen(suite),) * self.c
        if len(keys) != self.c:
            raise ValueError(f"{self.c} encrypted channels need {self.c} keys, got {len(keys)}")
        if any(k.suite != suite for k in keys):
            raise ciphers.SuiteMismatch(f"keys do not all belong to {suite.name}")
        object.__setattr__(self, "keys", keys)
        if self.ephemeral_seed is None:
            object.__setattr__(self, "ephemeral_seed", os.urandom(32))

    @classmethod
    def create(
        cls,
        n: int,
        m: int = 16,
        suite=CipherSuiteId.NULL,
        c: int = 1,
        keys: Sequence[KeyPair] | None = None,
        k_in: int | None = None,
        poly: int | None = None,
        basis: Sequence[int] | None = None,
        **kw,
    ) -> "CodecConfig":
        """Default MRD code over GF(2^m) plus fresh keys when none are given."""
        spec = FieldSpec(m, poly)
        code = SecrecyCode.from_basis(basis, spec) if basis is not None else SecrecyCode.default(n, spec)
        suite = CipherSuiteId.parse(suite)
        if keys is None:
            keys = [ciphers.gen(suite) for _ in range(c)]
        return cls(code, suite, c, k_in, tuple(keys), **kw)

    @property
    def spec(self) -> FieldSpec:
        return self.code.spec

    @property
    def n(self) -> int:
        return self.code.n

    @property
    def m(self) -> int:
        return self.code.spec.m

    @property
    def N(self) -> int:
        return self.k_in // self.m

    @property
    def channel_bytes(self) -> int:
        return self.k_in // 8

    @property
    def batch_bytes(self) -> int:
        return self.n * self.channel_bytes

    def payload_len(self, channel_index: int) -> int:
        extra = ciphers.NONCE_LEN[self.suite] if channel_index < self.c else 0
        return self.channel_bytes + extra


@dataclass(frozen=True, eq=False)
class MessageBatch:
    """n x N symbols; row j is message M_j, column i is M^(i)."""

    symbols: np.ndarray

    def __eq__(self, other):
        return isinstance(other, MessageBatch) and np.array_equal(self.symbols, other.symbols)

    @classmethod
    def from_bytes(cls, data: bytes, cfg: CodecConfig) -> "MessageBatch":
        if len(data) != cfg.batch_bytes:
            raise DimensionMismatch(f"batch is {cfg.batch_bytes} bytes, got {len(data)}")
        raw = np.frombuffer(data, dtype=np.uint8).reshape(cfg.n, cfg.channel_bytes)
        return cls(unpack_array(raw, cfg.m))

    def to_bytes(self, m: int) -> bytes:
        return pack_array(self.symbols, m).tobytes()


@dataclass(frozen=True, eq=False)
class CodedBatch:
    """n x N coded symbols; column i is X^(i) = G M^(i)."""

    symbols: np.ndarray


@dataclass(frozen=True)
class ChannelPayload:
    channel_index: int
    encrypted: bool
    batch_id: int
    data: bytes


# -- symbol packing -----------------------------------------------------------

def pack_array(symbols: np.ndarray, m: int) -> np.ndarray:
    """Pack the last axis of ``symbols`` MSB-first into bytes."""
    symbols = np.asarray(symbols, dtype=DTYPE)
    count = symbols.shape[-1]
    if (count * m) % 8:
        raise Misaligned(f"{count} symbols of {m} bits do not fill whole bytes")
    if m == 8:
        return symbols.astype(np.uint8)
    if m == 16:
        be = symbols.astype(">u2")
        return be.view(np.uint8).reshape(symbols.shape[:-1] + (count * 2,))
    shifts = np.arange(m - 1, -1, -1, dtype=DTYPE)
    bits = ((symbols[..., None] >> shifts) & 1).astype(np.uint8)
    bits = bits.reshape(symbols.shape[:-1] + (count * m,))
    return np.packbits(bits, axis=-1)


def unpack_array(data: np.ndarray, m: int) -> np.ndarray:
    """Inverse of ``pack_array`` along the last axis."""
    data = np.asarray(data, dtype=np.uint8)
    nbytes = data.shape[-1]
    if (nbytes * 8) % m:
        raise Misaligned(f"{nbytes} bytes do not split into {m}-bit symbols")
    count = nbytes * 8 // m
    if m == 8:
        return data.astype(DTYPE)
    if m == 16:
        pairs = data.reshape(data.shape[:-1] + (count, 2)).astype(DTYPE)
        return (pairs[..., 0] << 8) | pairs[..., 1]
    bits = np.unpackbits(data, axis=-1).reshape(data.shape[:-1] + (count, m)).astype(DTYPE)
    weights = (1 << np.arange(m - 1, -1, -1)).astype(DTYPE)
    return (bits * weights).sum(axis=-1, dtype=DTYPE)


def pack_symbols(row: Sequence[int], m: int) -> bytes:
    return pack_array(np.asarray(row, dtype=DTYPE), m).tobytes()


def unpack_symbols(data: bytes, m: int) -> list:
    return [int(x) for x in unpack_array(np.frombuffer(data, dtype=np.uint8), m)]


# -- padding ------------------------------------------------------------------

def pad_message(data: bytes, batch_bytes: int) -> bytes:
    """Append 0x80 and zeros up to the next multiple of ``batch_bytes``."""
    fill = batch_bytes - (len(data) % batch_bytes)
    return bytes(data) + b"\x80" + b"\x00" * (fill - 1)


def unpad_message(data: bytes, batch_bytes: int) -> bytes:
    if not data or len(data) % batch_bytes:
        raise BadPadding(f"padded length {len(data)} is not a positive multiple of {batch_bytes}")
    end = len(data) - 1
    floor = len(data) - batch_bytes
    while end >= floor and data[end] == 0:
        end -= 1
    if end < floor or data[end] != 0x80:
        raise BadPadding("missing 0x80 padding marker in the final batch")
    return bytes(data[:end])


# -- batches ------------------------------------------------------------------

def channel_nonce(suite: CipherSuiteId, channel_index: int, batch_id: int) -> bytes:
    """12 bytes: suite (u16) || channel (u16) || batch_id (u64)."""
    return int(suite).to_bytes(2, "big") + channel_index.to_bytes(2, "big") + batch_id.to_bytes(8, "big")


def _encrypt(cfg: CodecConfig, channel: int, batch_id: int, plain: bytes) -> bytes:
    if cfg.suite is CipherSuiteId.NULL:
        return plain
    nonce = channel_nonce(cfg.suite, channel, batch_id)
    eph = None
    if cfg.suite is CipherSuiteId.X25519_HYBRID:
        eph = ciphers.derive_ephemeral(cfg.ephemeral_seed, nonce)
    ct = ciphers.enc(plain, cfg.keys[channel], nonce, ephemeral=eph, tracker=cfg.nonce_tracker)
    return ct.to_bytes()


def _decrypt(cfg: CodecConfig, channel: int, data: bytes) -> bytes:
    ct = Ciphertext.from_bytes(cfg.suite, data)
    plain = ciphers.dec(ct, cfg.keys[channel])
    if len(plain) != cfg.channel_bytes:
        raise MalformedCiphertext(
            f"channel {channel} decrypted to {len(plain)} bytes, expected {cfg.channel_bytes}"
        )
    return plain


def encode_many(messages: np.ndarray, cfg: CodecConfig, first_batch_id: int = 0) -> list:
    """Encode a (B, n, N) symbol array; returns B lists of n payload byte strings."""
    messages = np.asarray(messages, dtype=DTYPE)
    if messages.ndim != 3 or messages.shape[1:] != (cfg.n, cfg.N):
        raise DimensionMismatch(f"expected (B, {cfg.n}, {cfg.N}) symbols, got {messages.shape}")
    coded = cfg.code.encode(messages, cfg.backend)
    packed = pack_array(coded, cfg.m)  # (B, n, channel_bytes)
    out = []
    for b in range(packed.shape[0]):
        bid = first_batch_id + b
        rows = [packed[b, i].tobytes() for i in range(cfg.n)]
        for i in range(cfg.c):
            rows[i] = _encrypt(cfg, i, bid, rows[i])
        out.append(rows)
    return out


def decode_many(batches: Sequence[Sequence[bytes]], cfg: CodecConfig) -> np.ndarray:
    """Inverse of ``encode_many``: B lists of n payloads -> (B, n, N) symbols."""
    rows = []
    for payloads in batches:
        if len(payloads) != cfg.n:
            raise DimensionMismatch(f"expected {cfg.n} payloads, got {len(payloads)}")
        for i, data in enumerate(payloads):
            if i < cfg.c:
                rows.append(_decrypt(cfg, i, data))
            else:
                if len(data) != cfg.channel_bytes:
                    raise DimensionMismatch(
                        f"channel {i} payload is {len(data)} bytes, expected {cfg.channel_bytes}"
                    )
                rows.append(data)
    raw = np.frombuffer(b"".join(rows), dtype=np.uint8).reshape(len(batches), cfg.n, cfg.channel_bytes)
    return cfg.code.decode(unpack_array(raw, cfg.m), cfg.backend)


def encode_batch(batch: MessageBatch, cfg: CodecConfig, batch_id: int = 0) -> list:
    payloads = encode_many(batch.symbols[None], cfg, batch_id)[0]
    return [ChannelPayload(i, i < cfg.c, batch_id, data) for i, data in enumerate(payloads)]


def coded_batch(batch: MessageBatch, cfg: CodecConfig) -> CodedBatch:
    return CodedBatch(cfg.code.encode(batch.symbols, cfg.backend))


def decode_batch(payloads: Iterable[ChannelPayload], cfg: CodecConfig) -> MessageBatch:
    by_index = {}
    batch_ids = set()
    for p in payloads:
        if not 0 <= p.channel_index < cfg.n:
            raise DimensionMismatch(f"channel_index {p.channel_index} out of range")
        if p.channel_index in by_index:
            raise ValueError(f"duplicate payload for channel {p.channel_index}")
        by_index[p.channel_index] = p.data
        batch_ids.add(p.batch_id)
    missing = set(range(cfg.n)) - by_index.keys()
    if missing:
        raise MissingChannel(missing)
    if len(batch_ids) != 1:
        raise BatchIdMismatch(f"payloads span batch ids {sorted(batch_ids)}")
    symbols = decode_many([[by_index[i] for i in range(cfg.n)]], cfg)[0]
    return MessageBatch(symbols)


# -- streams ------------------------------------------------------------------

def make_frame(cfg: CodecConfig, channel: int, batch_id: int, payload: bytes) -> ChannelFrame:
    return ChannelFrame(cfg.m, cfg.n, cfg.c, channel, channel < cfg.c, int(cfg.suite), batch_id, payload)


def _read_chunks(reader: BinaryIO, size: int) -> Iterator[tuple]:
    """Yield (chunk, is_last); the last chunk may be short or empty."""
    current = reader.read(size)
    while True:
        nxt = reader.read(size) if len(current) == size else b""
        if not nxt:
            yield current, True
            return
        yield current, False
        current = nxt


def encode_stream(
    reader: BinaryIO,
    cfg: CodecConfig,
    writers: Sequence,
    first_batch_id: int = 0,
    chunk_batches: int = CHUNK_BATCHES,
) -> int:
    """Split ``reader`` into padded batches and write one frame per channel per
    batch to ``writers[channel]``. Returns the number of batches written."""
    if len(writers) != cfg.n:
        raise ValueError(f"need {cfg.n} channel writers, got {len(writers)}")
    bid = first_batch_id
    size = chunk_batches * cfg.batch_bytes
    for chunk, last in _read_chunks(reader, size):
        if last:
            chunk = pad_message(chunk, cfg.batch_bytes)
        count = len(chunk) // cfg.batch_bytes
        raw = np.frombuffer(chunk, dtype=np.uint8).reshape(count, cfg.n, cfg.channel_bytes)
        encoded = encode_many(unpack_array(raw, cfg.m), cfg, bid)
        for payloads in encoded:
            for i, payload in enumerate(payloads):
                writers[i].write(frame_serialize(make_frame(cfg, i, bid, payload)))
            bid += 1
    return bid - first_batch_id


class Reassembler:
    """Collects frames by (batch_id, channel) and releases whole batches in
    batch-id order. More than ``window`` incomplete batches in flight means the
    oldest one has stalled, which raises ReassemblyTimeout."""

    def __init__(self, cfg: CodecConfig, first_batch_id: int = 0, window: int = DEFAULT_WINDOW):
        self.cfg = cfg
        self.window = window
        self.next_id = first_batch_id
        self.pending: dict = {}

    def check(self, frame: ChannelFrame) -> None:
        cfg = self.cfg
        if (frame.m, frame.n, frame.c, frame.suite_id) != (cfg.m, cfg.n, cfg.c, int(cfg.suite)):
            raise FrameMismatch(
                f"frame for m={frame.m} n={frame.n} c={frame.c} suite={frame.suite_id}, "
                f"session is m={cfg.m} n={cfg.n} c={cfg.c} suite={int(cfg.suite)}"
            )
        if frame.encrypted != (frame.channel_index < cfg.c):
            raise FrameMismatch(f"channel {frame.channel_index} has the wrong encrypted flag")
        if len(frame.payload) != cfg.payload_len(frame.channel_index):
            raise FrameMismatch(
                f"channel {frame.channel_index} payload is {len(frame.payload)} bytes, "
                f"expected {cfg.payload_len(frame.channel_index)}"
            )

    def missing(self, batch_id: int) -> list:
        slots = self.pending.get(batch_id)
        if slots is None:
            return list(range(self.cfg.n))
        return [i for i, s in enumerate(slots) if s is None]

    def add(self, frame: ChannelFrame) -> list:
        """Returns the (batch_id, payloads) pairs completed by this frame."""
        self.check(frame)
        bid = frame.batch_id
        if bid < self.next_id:
            raise FrameMismatch(f"stale or duplicate frame for batch {bid}")
        slots = self.pending.setdefault(bid, [None] * self.cfg.n)
        if slots[frame.channel_index] is not None:
            raise FrameMismatch(f"duplicate frame for batch {bid} channel {frame.channel_index}")
        slots[frame.channel_index] = frame.payload
        done = []
        while True:
            slots = self.pending.get(self.next_id)
            if slots is None or any(s is None for s in slots):
                break
            done.append((self.next_id, self.pending.pop(self.next_id)))
            self.next_id += 1
        if len(self.pending) > self.window:
            raise ReassemblyTimeout(
                f"batch {self.next_id} still missing channel(s) {self.missing(self.next_id)} "
                f"after {self.window} later batches"
            )
        return done

    def finish(self) -> None:
        if self.pending:
            raise MissingChannel(self.missing(self.next_id), self.next_id)


def decode_frames(
    frames: Iterable[ChannelFrame],
    cfg: CodecConfig,
    writer: BinaryIO,
    first_batch_id: int = 0,
    window: int = DEFAULT_WINDOW,
    chunk_batches: int = CHUNK_BATCHES,
) -> int:
    """Reassemble, decrypt and unmix ``frames``; write the unpadded message.
    Returns the number of batches decoded."""
    reasm = Reassembler(cfg, first_batch_id, window)
    ready: list = []
    tail = None  # last decoded batch, held back for unpadding
    total = 0

    def flush():
        nonlocal tail, total
        if not ready:
            return
        symbols = decode_many([p for _, p in ready], cfg)
        data = pack_array(symbols, cfg.m).tobytes()
        total += len(ready)
        ready.clear()
        if tail is not None:
            writer.write(tail)
        writer.write(data[: -cfg.batch_bytes])
        tail = data[-cfg.batch_bytes:]

    for frame in frames:
        ready.extend(reasm.add(frame))
        if len(ready) >= chunk_batches:
            flush()
    reasm.finish()
    flush()
    if tail is None:
        raise CodecError("stream carried no batches")
    writer.write(unpad_message(tail, cfg.batch_bytes))
    return total


def _round_robin(iterators: list) -> Iterator:
    live = list(iterators)
    while live:
        for it in list(live):
            try:
                yield next(it)
            except StopIteration:
                live.remove(it)


def decode_stream(
    readers: Sequence[BinaryIO],
    cfg: CodecConfig,
    writer: BinaryIO,
    window: int = DEFAULT_WINDOW,
    first_batch_id: int = 0,
) -> int:
    """Decode channel streams given in any order; each stream is identified by
    the channel index in its frames."""
    iters = []
    seen = set()
    for r in readers:
        it = iter_frames(r)
        first = next(it, None)
        if first is None:
            continue
        seen.add(first.channel_index)
        iters.append(_chain(first, it))
    missing = set(range(cfg.n)) - seen
    if missing:
        raise MissingChannel(missing)
    return decode_frames(_round_robin(iters), cfg, writer, first_batch_id, window)


def _chain(first, rest):
    yield first
    yield from rest
