"""Channel frame wire format (big-endian, 24-byte header).

    offset  size  field
    0       4     magic "CMT1"
    4       1     version (1)
    5       1     m
    6       1     n
    7       1     c
    8       1     channel_index
    9       1     flags (bit0 = encrypted; other bits must be zero)
    10      1     suite_id
    11      1     reserved (zero)
    12      8     batch_id
    20      4     payload_len
    24      ...   payload (nonce-prefixed when encrypted)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .ciphers import CipherSuiteId
from .errors import BadMagic, MalformedHeader, Truncated, UnsupportedVersion

MAGIC = b"CMT1"
VERSION = 1
HEADER = struct.Struct(">4sBBBBBBBBQI")
HEADER_LEN = HEADER.size
FLAG_ENCRYPTED = 0x01
MAX_PAYLOAD = 1 << 20

assert HEADER_LEN == 24


@dataclass(frozen=True)
class ChannelFrame:
    m: int
    n: int
    c: int
    channel_index: int
    encrypted: bool
    suite_id: int
    batch_id: int
    payload: bytes

    def serialize(self) -> bytes:
        return frame_serialize(self)


def frame_serialize(frame: ChannelFrame) -> bytes:
    if not 0 <= frame.channel_index < frame.n:
        raise MalformedHeader(f"channel_index {frame.channel_index} >= n {frame.n}")
    if len(frame.payload) > MAX_PAYLOAD:
        raise MalformedHeader("payload too large")
    header = HEADER.pack(
        MAGIC,
        VERSION,
        frame.m,
        frame.n,
        frame.c,
        frame.channel_index,
        FLAG_ENCRYPTED if frame.encrypted else 0,
        int(frame.suite_id),
        0,
        frame.batch_id,
        len(frame.payload),
    )
    return header + frame.payload


def parse_header(buf) -> tuple:
    """Validate a 24-byte header; returns (fields..., payload_len)."""
    if len(buf) < HEADER_LEN:
        raise Truncated(f"header needs {HEADER_LEN} bytes, have {len(buf)}")
    magic, version, m, n, c, idx, flags, suite, reserved, batch_id, plen = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {bytes(magic)!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"frame version {version}")
    if reserved:
        raise MalformedHeader("reserved byte is nonzero")
    if flags & ~FLAG_ENCRYPTED:
        raise MalformedHeader(f"unknown flag bits {flags:#x}")
    if n == 0 or idx >= n:
        raise MalformedHeader(f"channel_index {idx} out of range for n={n}")
    if c > n:
        raise MalformedHeader(f"c={c} exceeds n={n}")
    if suite not in CipherSuiteId._value2member_map_:
        raise MalformedHeader(f"unknown suite id {suite}")
    if plen > MAX_PAYLOAD:
        raise MalformedHeader(f"payload_len {plen} exceeds {MAX_PAYLOAD}")
    return m, n, c, idx, bool(flags & FLAG_ENCRYPTED), suite, batch_id, plen


def parse_prefix(buf) -> tuple:
    """Parse one frame from the start of ``buf``; returns (frame, consumed)."""
    m, n, c, idx, encrypted, suite, batch_id, plen = parse_header(buf)
    end = HEADER_LEN + plen
    if len(buf) < end:
        raise Truncated(f"payload needs {plen} bytes, have {len(buf) - HEADER_LEN}")
    return ChannelFrame(m, n, c, idx, encrypted, suite, batch_id, bytes(buf[HEADER_LEN:end])), end


def frame_parse(buf) -> ChannelFrame:
    """Parse exactly one frame; trailing bytes are an error."""
    frame, used = parse_prefix(buf)
    if used != len(buf):
        raise MalformedHeader(f"{len(buf) - used} trailing bytes after frame")
    return frame


def _read_exact(stream, k: int) -> bytes:
    chunks = []
    while k:
        chunk = stream.read(k)
        if not chunk:
            break
        chunks.append(chunk)
        k -= len(chunk)
    return b"".join(chunks)


def read_frame(stream) -> ChannelFrame | None:
    """Next frame from a binary stream, or None at a clean end of stream."""
    head = _read_exact(stream, HEADER_LEN)
    if not head:
        return None
    fields = parse_header(head)
    plen = fields[-1]
    payload = _read_exact(stream, plen)
    if len(payload) != plen:
        raise Truncated(f"stream ended inside a {plen}-byte payload")
    return ChannelFrame(*fields[:-1], payload)


def iter_frames(stream):
    while True:
        frame = read_frame(stream)
        if frame is None:
            return
        yield frame
