"""X25519: x-coordinate-only Montgomery ladder on Curve25519 (RFC 7748).

Pure Python reference. The hybrid cipher suite uses a compiled backend for
bulk work and this module as the cross-checked reference.
"""

P = 2**255 - 19
A24 = 121665
BASE_POINT = (9).to_bytes(32, "little")


def clamp(scalar: bytes) -> bytes:
    if len(scalar) != 32:
        raise ValueError("X25519 scalars are 32 bytes")
    k = bytearray(scalar)
    k[0] &= 248
    k[31] &= 127
    k[31] |= 64
    return bytes(k)


def _decode_scalar(k: bytes) -> int:
    return int.from_bytes(clamp(k), "little")


def _decode_u(u: bytes) -> int:
    if len(u) != 32:
        raise ValueError("X25519 u-coordinates are 32 bytes")
    # top bit is masked; non-canonical values >= p are reduced
    return (int.from_bytes(u, "little") & ((1 << 255) - 1)) % P


def _ladder(k: int, u: int) -> int:
    x1 = u
    x2, z2 = 1, 0
    x3, z3 = u, 1
    swap = 0
    for t in reversed(range(255)):
        kt = (k >> t) & 1
        swap ^= kt
        if swap:
            x2, x3 = x3, x2
            z2, z3 = z3, z2
        swap = kt

        a = (x2 + z2) % P
        aa = a * a % P
        b = (x2 - z2) % P
        bb = b * b % P
        e = (aa - bb) % P
        c = (x3 + z3) % P
        d = (x3 - z3) % P
        da = d * a % P
        cb = c * b % P
        x3 = (da + cb) ** 2 % P
        z3 = x1 * (da - cb) ** 2 % P
        x2 = aa * bb % P
        z2 = e * (aa + A24 * e) % P
    if swap:
        x2, x3 = x3, x2
        z2, z3 = z3, z2
    return x2 * pow(z2, P - 2, P) % P


def x25519_scalar_mult(scalar: bytes, point_u: bytes) -> bytes:
    """u-coordinate of [clamp(scalar)] * point_u. An all-zero result (small
    order input) is returned as is."""
    return _ladder(_decode_scalar(scalar), _decode_u(point_u)).to_bytes(32, "little")


def public_key(secret: bytes) -> bytes:
    return x25519_scalar_mult(secret, BASE_POINT)
