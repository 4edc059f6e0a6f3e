"""Arithmetic in the binary extension field GF(2^m), 2 <= m <= 16.

Elements are plain Python ints: bit i holds the coefficient of x^i, so
addition is XOR and multiplication by x is a left shift followed by a
conditional reduction. Two multiplication backends are provided:

* ``gf_mul_rpa``  -- the shift/XOR "Russian peasant" loop with a reduction at
  every step. No memory beyond a few registers. This is the default.
* ``gf_mul_table`` -- log/antilog lookups built from a primitive element.

The shift/XOR loop needs no tables, which is what makes it attractive in
hardware; in software the tables are usually faster. Both are exact and
interchangeable.

Bulk helpers (``mul_const`` and friends) apply the same two algorithms
elementwise over numpy arrays so that codec and audit work is vectorised.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DivisionByZero, FieldError, NotIrreducible, NotPrimitive

FieldElement = int

MIN_DEGREE = 2
MAX_DEGREE = 16

# Primitive for every m except 8, where the AES polynomial (irreducible, not
# primitive) is used for familiarity; table construction then falls back to
# the smallest primitive element (0x03).
DEFAULT_POLYS = {
    2: 0x7,        # x^2 + x + 1
    3: 0xB,        # x^3 + x + 1
    4: 0x13,       # x^4 + x + 1
    5: 0x25,       # x^5 + x^2 + 1
    6: 0x43,       # x^6 + x + 1
    7: 0x89,       # x^7 + x^3 + 1
    8: 0x11B,      # x^8 + x^4 + x^3 + x + 1
    9: 0x211,      # x^9 + x^4 + 1
    10: 0x409,     # x^10 + x^3 + 1
    11: 0x805,     # x^11 + x^2 + 1
    12: 0x1053,    # x^12 + x^6 + x^4 + x + 1
    13: 0x201B,    # x^13 + x^4 + x^3 + x + 1
    14: 0x4443,    # x^14 + x^10 + x^6 + x + 1
    15: 0x8003,    # x^15 + x + 1
    16: 0x1100B,   # x^16 + x^12 + x^3 + x + 1
}


def _poly_mod(a: int, p: int) -> int:
    dp = p.bit_length()
    while a.bit_length() >= dp:
        a ^= p << (a.bit_length() - dp)
    return a


def is_irreducible(poly: int) -> bool:
    """Trial division by every polynomial of degree 1..deg(poly)//2."""
    deg = poly.bit_length() - 1
    if deg < 1:
        return False
    for d in range(2, 1 << (deg // 2 + 1)):
        if _poly_mod(poly, d) == 0:
            return False
    return True


@dataclass(frozen=True)
class FieldSpec:
    """GF(2^m) defined by ``reduction_poly`` (bit m set, degree exactly m)."""

    m: int
    reduction_poly: int = field(default=None)

    def __post_init__(self):
        if not isinstance(self.m, int) or not MIN_DEGREE <= self.m <= MAX_DEGREE:
            raise FieldError(f"m must be in [{MIN_DEGREE}, {MAX_DEGREE}], got {self.m!r}")
        if self.reduction_poly is None:
            object.__setattr__(self, "reduction_poly", DEFAULT_POLYS[self.m])
        if self.reduction_poly.bit_length() - 1 != self.m:
            raise FieldError(
                f"reduction polynomial {self.reduction_poly:#x} does not have degree {self.m}"
            )
        if not _cached_irreducible(self.reduction_poly):
            raise NotIrreducible(f"{self.reduction_poly:#x} is reducible over F_2")

    @property
    def q(self) -> int:
        return 1 << self.m

    @property
    def order(self) -> int:
        """Size of the multiplicative group, 2^m - 1."""
        return (1 << self.m) - 1

    def check(self, a: int) -> int:
        if not 0 <= a < self.q:
            raise FieldError(f"{a!r} is not an element of GF(2^{self.m})")
        return a


@lru_cache(maxsize=None)
def _cached_irreducible(poly: int) -> bool:
    return is_irreducible(poly)


def gf_add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a ^ b


def gf_mul_rpa(a: FieldElement, b: FieldElement, spec: FieldSpec) -> FieldElement:
    """Shift-and-add multiplication with per-step reduction."""
    if a == 0 or b == 0:
        return 0
    m = spec.m
    p = spec.reduction_poly
    mask = 1 << (m - 1)
    c = 0
    for _ in range(m):
        if b == 0:
            break
        if b & 1:
            c ^= a
        highbit = a & mask
        a <<= 1
        b >>= 1
        if highbit:
            a ^= p
    return c


gf_mul = gf_mul_rpa


@dataclass(frozen=True, eq=False)
class LogExpTables:
    """Discrete log / antilog tables for one field and generator.

    ``log[0]`` is the sentinel -1. ``exp`` has 2^m entries; index 2^m - 1
    wraps back to 1.
    """

    spec: FieldSpec
    generator: int
    log: tuple
    exp: tuple

    @property
    def log_array(self) -> np.ndarray:
        return _np_tables(self)[0]

    @property
    def exp_array(self) -> np.ndarray:
        return _np_tables(self)[1]


def multiplicative_order(a: int, spec: FieldSpec) -> int:
    if a == 0:
        raise DivisionByZero("0 has no multiplicative order")
    x, k = a, 1
    while x != 1:
        x = gf_mul_rpa(x, a, spec)
        k += 1
    return k


def find_primitive_element(spec: FieldSpec) -> int:
    for g in range(2, spec.q):
        if multiplicative_order(g, spec) == spec.order:
            return g
    # m >= 2 always has one; GF(2^1) is excluded by FieldSpec
    raise NotPrimitive(f"no primitive element in GF(2^{spec.m})")


def build_log_exp_tables(spec: FieldSpec, generator: int | None = None) -> LogExpTables:
    """Tabulate powers of ``generator`` (default 2, or the smallest primitive
    element when 2 is not primitive for ``spec.reduction_poly``)."""
    if generator is None:
        generator = 2 if multiplicative_order(2, spec) == spec.order else find_primitive_element(spec)
    spec.check(generator)
    q = spec.q
    log = [-1] * q
    exp = [0] * q
    power = 1
    for i in range(q - 1):
        if log[power] != -1:
            raise NotPrimitive(
                f"{generator:#x} has order {i} < {spec.order} in GF(2^{spec.m})"
            )
        log[power] = i
        exp[i] = power
        power = gf_mul_rpa(generator, power, spec)
    if power != 1:
        raise NotPrimitive(f"{generator:#x} is not a unit of order {spec.order}")
    exp[q - 1] = 1
    return LogExpTables(spec, generator, tuple(log), tuple(exp))


@lru_cache(maxsize=None)
def tables_for(spec: FieldSpec) -> LogExpTables:
    """Shared, lazily built default tables for ``spec``."""
    return build_log_exp_tables(spec)


def gf_mul_table(a: FieldElement, b: FieldElement, tables: LogExpTables) -> FieldElement:
    if a == 0 or b == 0:
        return 0
    return tables.exp[(tables.log[a] + tables.log[b]) % tables.spec.order]


def gf_pow(a: FieldElement, k: int, spec: FieldSpec) -> FieldElement:
    if k < 0:
        raise FieldError("negative exponent; use gf_inv")
    if a == 0:
        if k == 0:
            raise FieldError("0^0 is undefined")
        return 0
    result = 1
    base = a
    while k:
        if k & 1:
            result = gf_mul_rpa(result, base, spec)
        k >>= 1
        if k:
            base = gf_mul_rpa(base, base, spec)
    return result


def gf_pow2k(a: FieldElement, j: int, spec: FieldSpec) -> FieldElement:
    """a^(2^j) by j successive squarings."""
    if not 0 <= j <= 64:
        raise FieldError(f"Frobenius iterate j={j} outside [0, 64]")
    for _ in range(j):
        a = gf_mul_rpa(a, a, spec)
    return a


def gf_inv(a: FieldElement, spec: FieldSpec) -> FieldElement:
    # Fermat: a^(q-2). Not constant time.
    if a == 0:
        raise DivisionByZero("0 has no inverse")
    return gf_pow(a, spec.q - 2, spec)


# -- vectorised helpers -------------------------------------------------------

DTYPE = np.uint32


# (spec, generator) fully determines the tables, so instances share arrays
_NP_CACHE: dict = {}


def _np_tables(tables: LogExpTables):
    k = (tables.spec, tables.generator)
    arrs = _NP_CACHE.get(k)
    if arrs is None:
        log = np.array(tables.log, dtype=np.int64)
        log[0] = 0  # masked out by callers
        cycle = tables.exp[: tables.spec.order]
        exp = np.array(cycle + cycle, dtype=DTYPE)
        arrs = _NP_CACHE[k] = (log, exp)
    return arrs


def mul_const(c: int, arr: np.ndarray, spec: FieldSpec, backend: str = "rpa") -> np.ndarray:
    """Multiply every element of ``arr`` by the field constant ``c``."""
    arr = np.asarray(arr, dtype=DTYPE)
    if c == 0:
        return np.zeros_like(arr)
    if c == 1:
        return arr.copy()
    if backend == "table":
        log, exp = _np_tables(tables_for(spec))
        out = exp[log[arr] + log[c]]
        out[arr == 0] = 0
        return out
    if backend != "rpa":
        raise ValueError(f"unknown backend {backend!r}")
    m = spec.m
    p = DTYPE(spec.reduction_poly)
    a = arr.copy()
    acc = np.zeros_like(a)
    while c:
        if c & 1:
            acc ^= a
        c >>= 1
        if c:
            a <<= 1
            a ^= ((a >> m) & 1) * p
    return acc


def mul_vec(a: np.ndarray, b: np.ndarray, spec: FieldSpec, backend: str = "rpa") -> np.ndarray:
    """Elementwise product of two arrays of field elements."""
    a = np.asarray(a, dtype=DTYPE)
    b = np.asarray(b, dtype=DTYPE)
    if backend == "table":
        log, exp = _np_tables(tables_for(spec))
        out = exp[log[a] + log[b]]
        out[(a == 0) | (b == 0)] = 0
        return out
    if backend != "rpa":
        raise ValueError(f"unknown backend {backend!r}")
    m = spec.m
    p = DTYPE(spec.reduction_poly)
    a, b = np.broadcast_arrays(a, b)
    a = a.copy()
    b = b.copy()
    acc = np.zeros_like(a)
    for _ in range(m):
        acc ^= a * (b & 1)
        b >>= 1
        a <<= 1
        a ^= ((a >> m) & 1) * p
    return acc
