"""Pluggable cryptosystems: key generation, encryption and decryption.

Three suites share one interface:

NULL           identity transform, for tests and baselines.
AES256_CTR     AES-256 in counter mode, 96-bit nonce || 32-bit block counter.
X25519_HYBRID  ephemeral X25519 key agreement, HKDF-SHA256, then AES-256-CTR
               under the derived one-time key. The ephemeral public key is
               carried as the nonce.

Every suite is length preserving (|body| == |plaintext|), which the codec
relies on for its fixed per-channel payload size. There is no integrity
protection.
"""

from __future__ import annotations

import enum
import hashlib
import hmac
import os
import threading
from collections import OrderedDict
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from . import x25519
from .errors import (
    BadKeyFile,
    EntropyUnavailable,
    MalformedCiphertext,
    NonceReuse,
    SuiteMismatch,
    WeakSharedSecret,
)


class CipherSuiteId(enum.IntEnum):
    NULL = 0
    AES256_CTR = 1
    X25519_HYBRID = 2

    @classmethod
    def parse(cls, name: str | int) -> "CipherSuiteId":
        if isinstance(name, int):
            return cls(name)
        key = str(name).strip().upper().replace("-", "_")
        aliases = {"AES": "AES256_CTR", "AES256": "AES256_CTR", "X25519": "X25519_HYBRID", "ECC": "X25519_HYBRID"}
        key = aliases.get(key, key)
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown cipher suite {name!r}") from None


NONCE_LEN = {CipherSuiteId.NULL: 0, CipherSuiteId.AES256_CTR: 12, CipherSuiteId.X25519_HYBRID: 32}
KEY_LEN = {CipherSuiteId.NULL: 0, CipherSuiteId.AES256_CTR: 32, CipherSuiteId.X25519_HYBRID: 32}
SECURITY_BITS = {CipherSuiteId.NULL: 0, CipherSuiteId.AES256_CTR: 256, CipherSuiteId.X25519_HYBRID: 128}

# crypto input width each suite is costed and framed at by default
DEFAULT_K_IN = {CipherSuiteId.NULL: 128, CipherSuiteId.AES256_CTR: 128, CipherSuiteId.X25519_HYBRID: 256}


@dataclass(frozen=True)
class KeyPair:
    """``secret_key`` may be None for a sender holding only the public half."""

    public_key: bytes
    secret_key: bytes | None
    suite: CipherSuiteId
    security_bits: int

    @classmethod
    def from_secret(cls, suite: CipherSuiteId, secret: bytes) -> "KeyPair":
        suite = CipherSuiteId(suite)
        _check_len(suite, secret)
        if suite is CipherSuiteId.X25519_HYBRID:
            secret = x25519.clamp(secret)
            public = _public_from_secret(secret)
        else:
            public = secret
        return cls(public, secret, suite, SECURITY_BITS[suite])

    @classmethod
    def from_public(cls, suite: CipherSuiteId, public: bytes) -> "KeyPair":
        suite = CipherSuiteId(suite)
        _check_len(suite, public)
        return cls(public, None, suite, SECURITY_BITS[suite])


def _check_len(suite, key):
    if len(key) != KEY_LEN[suite]:
        raise ValueError(f"{suite.name} keys are {KEY_LEN[suite]} bytes, got {len(key)}")


@dataclass(frozen=True)
class Ciphertext:
    suite: CipherSuiteId
    nonce: bytes
    body: bytes

    def to_bytes(self) -> bytes:
        return self.nonce + self.body

    @classmethod
    def from_bytes(cls, suite: CipherSuiteId, data: bytes) -> "Ciphertext":
        suite = CipherSuiteId(suite)
        k = NONCE_LEN[suite]
        if len(data) <= k:
            raise MalformedCiphertext(
                f"{suite.name} ciphertext needs more than {k} bytes, got {len(data)}"
            )
        return cls(suite, bytes(data[:k]), bytes(data[k:]))


# -- primitives ---------------------------------------------------------------

def aes256_encrypt_block(key: bytes, block: bytes) -> bytes:
    """Raw single-block AES-256 (for known-answer tests)."""
    if len(key) != 32 or len(block) != 16:
        raise ValueError("AES-256 takes a 32-byte key and a 16-byte block")
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def aes256_ctr_xor(key: bytes, counter_block: bytes, data: bytes) -> bytes:
    """XOR ``data`` with the AES-256 keystream starting at ``counter_block``."""
    if len(key) != 32 or len(counter_block) != 16:
        raise ValueError("AES-256-CTR takes a 32-byte key and a 16-byte counter block")
    enc = Cipher(algorithms.AES(key), modes.CTR(counter_block)).encryptor()
    return enc.update(data) + enc.finalize()


@lru_cache(maxsize=256)
def _public_from_secret(secret: bytes) -> bytes:
    return X25519PrivateKey.from_private_bytes(secret).public_key().public_bytes_raw()


def fast_scalar_mult(scalar: bytes, point_u: bytes) -> bytes:
    """Compiled X25519; agrees with ``x25519.x25519_scalar_mult`` except that
    an all-zero shared point raises WeakSharedSecret."""
    try:
        return X25519PrivateKey.from_private_bytes(scalar).exchange(
            X25519PublicKey.from_public_bytes(point_u)
        )
    except ValueError as exc:
        raise WeakSharedSecret("X25519 produced the all-zero shared secret") from exc


def hybrid_derive(shared_secret: bytes, context: bytes) -> bytes:
    if len(shared_secret) != 32:
        raise ValueError("shared secret must be 32 bytes")
    if not any(shared_secret):
        raise WeakSharedSecret("all-zero shared secret")
    return HKDF(
        algorithm=hashes.SHA256(), length=32, salt=None, info=b"cermet/x25519-hybrid/" + context
    ).derive(shared_secret)


def derive_ephemeral(seed: bytes, nonce: bytes) -> bytes:
    """Deterministic per-message ephemeral scalar from a sender-held seed."""
    return hmac.new(seed, b"cermet/ephemeral/" + nonce, hashlib.sha256).digest()


# -- nonce tracking -----------------------------------------------------------

class NonceTracker:
    """Remembers up to ``capacity`` (key, nonce) pairs and rejects repeats."""

    def __init__(self, capacity: int = 1 << 16):
        self.capacity = capacity
        self._seen: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def check(self, key: bytes, nonce: bytes) -> None:
        tag = hashlib.sha256(key).digest()[:16] + nonce
        with self._lock:
            if tag in self._seen:
                raise NonceReuse(f"nonce {nonce.hex()} already used with this key")
            self._seen[tag] = None
            if len(self._seen) > self.capacity:
                self._seen.popitem(last=False)


# -- Gen / Enc / Dec ----------------------------------------------------------

def gen(suite: CipherSuiteId, entropy: Callable[[int], bytes] = os.urandom) -> KeyPair:
    suite = CipherSuiteId(suite)
    if suite is CipherSuiteId.NULL:
        return KeyPair(b"", b"", suite, 0)
    try:
        raw = entropy(KEY_LEN[suite])
    except (OSError, NotImplementedError) as exc:
        raise EntropyUnavailable(str(exc)) from exc
    if raw is None or len(raw) != KEY_LEN[suite]:
        raise EntropyUnavailable(f"entropy source returned {0 if raw is None else len(raw)} bytes")
    return KeyPair.from_secret(suite, bytes(raw))


def enc(
    plaintext: bytes,
    key: KeyPair,
    nonce: bytes = b"",
    *,
    ephemeral: bytes | None = None,
    tracker: NonceTracker | None = None,
) -> Ciphertext:
    """Encrypt under ``key.public_key``.

    ``nonce`` is the caller's unique per-message value (12 bytes for AES;
    mixed into the ephemeral derivation by the codec for X25519). Passing a
    ``tracker`` turns on strict reuse detection.
    """
    if not plaintext:
        raise ValueError("plaintext must be nonempty")
    suite = key.suite
    if suite is CipherSuiteId.NULL:
        return Ciphertext(suite, b"", bytes(plaintext))
    if tracker is not None:
        tracker.check(key.public_key, nonce)
    if suite is CipherSuiteId.AES256_CTR:
        if len(nonce) != 12:
            raise ValueError("AES256_CTR needs a 12-byte nonce")
        body = aes256_ctr_xor(key.public_key, nonce + b"\x00" * 4, plaintext)
        return Ciphertext(suite, bytes(nonce), body)
    if suite is CipherSuiteId.X25519_HYBRID:
        eph_secret = ephemeral if ephemeral is not None else os.urandom(32)
        eph_public = _public_from_secret(x25519.clamp(eph_secret))
        shared = fast_scalar_mult(eph_secret, key.public_key)
        stream_key = hybrid_derive(shared, eph_public + key.public_key)
        body = aes256_ctr_xor(stream_key, bytes(16), plaintext)
        return Ciphertext(suite, eph_public, body)
    raise SuiteMismatch(f"unsupported suite {suite!r}")


def dec(ciphertext: Ciphertext, key: KeyPair) -> bytes:
    if ciphertext.suite != key.suite:
        raise SuiteMismatch(f"{ciphertext.suite.name} ciphertext, {key.suite.name} key")
    if key.secret_key is None:
        raise SuiteMismatch("decryption needs the secret key")
    suite = key.suite
    if len(ciphertext.nonce) != NONCE_LEN[suite] or not ciphertext.body:
        raise MalformedCiphertext("bad nonce length or empty body")
    if suite is CipherSuiteId.NULL:
        return ciphertext.body
    if suite is CipherSuiteId.AES256_CTR:
        return aes256_ctr_xor(key.secret_key, ciphertext.nonce + b"\x00" * 4, ciphertext.body)
    shared = fast_scalar_mult(key.secret_key, ciphertext.nonce)
    stream_key = hybrid_derive(shared, ciphertext.nonce + key.public_key)
    return aes256_ctr_xor(stream_key, bytes(16), ciphertext.body)


# -- key files: 4-byte big-endian suite id, then the raw key --------------------

def write_key_file(path, suite: CipherSuiteId, key: bytes) -> None:
    with open(path, "wb") as f:
        f.write(int(suite).to_bytes(4, "big") + key)


def read_key_file(path) -> tuple:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 4:
        raise BadKeyFile(f"{path}: too short")
    try:
        suite = CipherSuiteId(int.from_bytes(data[:4], "big"))
    except ValueError:
        raise BadKeyFile(f"{path}: unknown suite id") from None
    key = data[4:]
    if len(key) != KEY_LEN[suite]:
        raise BadKeyFile(f"{path}: {suite.name} key must be {KEY_LEN[suite]} bytes")
    return suite, key


def save_keypair(kp: KeyPair, path) -> tuple:
    """Write ``path`` (secret) and ``path.pub`` (public); returns both paths."""
    path = os.fspath(path)
    pub = path + ".pub"
    write_key_file(path, kp.suite, kp.secret_key)
    write_key_file(pub, kp.suite, kp.public_key)
    return path, pub


def load_secret(path) -> KeyPair:
    suite, key = read_key_file(path)
    return KeyPair.from_secret(suite, key)


def load_public(path) -> KeyPair:
    suite, key = read_key_file(path)
    return KeyPair.from_public(suite, key)
