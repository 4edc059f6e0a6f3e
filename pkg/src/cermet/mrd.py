"""MRD secrecy code: the Moore parity matrix H and its inverse G.

With h_1..h_n linearly independent over F_2 (n <= m), the matrix
``H[i][j] = h_i^(2^j)`` (0-based j) is invertible. The sender mixes messages
with ``G = H^-1``; the receiver unmixes with ``H``. The matrices are public.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DependentBasis, DimensionMismatch, Singular, TooManyChannels
from .gf import DTYPE, FieldSpec, gf_inv, gf_mul_rpa, gf_pow2k, mul_const


@dataclass(frozen=True)
class GfMatrix:
    rows: int
    cols: int
    entries: tuple  # row-major

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise DimensionMismatch(
                f"{len(self.entries)} entries for a {self.rows}x{self.cols} matrix"
            )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "GfMatrix":
        rows = [tuple(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise DimensionMismatch("ragged rows")
        return cls(len(rows), ncols, tuple(x for r in rows for x in r))

    @classmethod
    def identity(cls, n: int) -> "GfMatrix":
        return cls.from_rows([[int(i == j) for j in range(n)] for i in range(n)])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def to_rows(self) -> list:
        return [list(self.row(i)) for i in range(self.rows)]

    def permute_rows(self, perm: Sequence[int]) -> "GfMatrix":
        return GfMatrix.from_rows([self.row(p) for p in perm])


def default_basis(n: int, spec: FieldSpec) -> list:
    """Monomial basis 1, x, ..., x^(n-1)."""
    if n < 1:
        raise ValueError("need at least one channel")
    if n > spec.m:
        raise TooManyChannels(f"n={n} exceeds m={spec.m}")
    return [1 << i for i in range(n)]


def f2_rank(vectors: Sequence[int]) -> int:
    """Rank over F_2 of integers viewed as bit vectors."""
    pivots: dict = {}
    rank = 0
    for v in vectors:
        while v:
            top = v.bit_length() - 1
            if top not in pivots:
                pivots[top] = v
                rank += 1
                break
            v ^= pivots[top]
    return rank


def check_f2_independence(h: Sequence[int], m: int) -> bool:
    if not h:
        raise ValueError("empty basis")
    if any(not 0 <= x < (1 << m) for x in h):
        raise ValueError("basis element outside the field")
    return f2_rank(h) == len(h)


def build_parity_matrix(h: Sequence[int], spec: FieldSpec) -> GfMatrix:
    if len(h) > spec.m:
        raise TooManyChannels(f"n={len(h)} exceeds m={spec.m}")
    if not check_f2_independence(h, spec.m):
        raise DependentBasis(f"basis {[hex(x) for x in h]} is linearly dependent over F_2")
    n = len(h)
    return GfMatrix.from_rows([[gf_pow2k(hi, j, spec) for j in range(n)] for hi in h])


def mat_mul(a: GfMatrix, b: GfMatrix, spec: FieldSpec) -> GfMatrix:
    if a.cols != b.rows:
        raise DimensionMismatch(f"{a.rows}x{a.cols} @ {b.rows}x{b.cols}")
    out = []
    for i in range(a.rows):
        row = []
        for j in range(b.cols):
            s = 0
            for k in range(a.cols):
                s ^= gf_mul_rpa(a[i, k], b[k, j], spec)
            row.append(s)
        out.append(row)
    return GfMatrix.from_rows(out)


def invert_matrix(a: GfMatrix, spec: FieldSpec) -> GfMatrix:
    """Gauss-Jordan elimination; the pivot is the first nonzero entry at or
    below the diagonal (every nonzero pivot is exact in a field)."""
    if a.rows != a.cols:
        raise DimensionMismatch("only square matrices are invertible")
    n = a.rows
    work = [list(a.row(i)) + [int(i == j) for j in range(n)] for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if work[r][col]), None)
        if pivot is None:
            raise Singular(f"no nonzero pivot in column {col}")
        work[col], work[pivot] = work[pivot], work[col]
        inv = gf_inv(work[col][col], spec)
        work[col] = [gf_mul_rpa(inv, x, spec) for x in work[col]]
        for r in range(n):
            f = work[r][col]
            if r != col and f:
                work[r] = [x ^ gf_mul_rpa(f, y, spec) for x, y in zip(work[r], work[col])]
    result = GfMatrix.from_rows([row[n:] for row in work])
    if mat_mul(a, result, spec) != GfMatrix.identity(n):
        raise Singular("inverse failed verification")
    return result


def mat_vec_mul(a: GfMatrix, v: Sequence[int], spec: FieldSpec) -> list:
    if a.cols != len(v):
        raise DimensionMismatch(f"{a.rows}x{a.cols} matrix times length-{len(v)} vector")
    out = []
    for i in range(a.rows):
        s = 0
        for j, x in enumerate(v):
            s ^= gf_mul_rpa(a[i, j], x, spec)
        out.append(s)
    return out


def apply_matrix(a: GfMatrix, x: np.ndarray, spec: FieldSpec, backend: str = "rpa") -> np.ndarray:
    """Bulk ``a @ x`` where axis -2 of ``x`` indexes the ``a.cols`` inputs.

    ``x`` may carry leading batch axes and a trailing symbol axis, e.g.
    shape (batches, n, N).
    """
    x = np.asarray(x, dtype=DTYPE)
    if x.shape[-2] != a.cols:
        raise DimensionMismatch(f"matrix has {a.cols} columns, data has {x.shape[-2]} rows")
    out = np.zeros(x.shape[:-2] + (a.rows, x.shape[-1]), dtype=DTYPE)
    for i in range(a.rows):
        acc = out[..., i, :]
        for j in range(a.cols):
            c = a[i, j]
            if c:
                acc ^= mul_const(c, x[..., j, :], spec, backend)
    return out


@dataclass(frozen=True)
class SecrecyCode:
    """Parity matrix H, generator G = H^-1, and the basis they came from.

    ``h`` is None for codes built directly from a matrix (e.g. the identity
    control used by the audit).
    """

    spec: FieldSpec
    n: int
    h: tuple | None
    H: GfMatrix
    G: GfMatrix

    @classmethod
    def from_basis(cls, h: Sequence[int], spec: FieldSpec) -> "SecrecyCode":
        H = build_parity_matrix(h, spec)
        return cls(spec, len(h), tuple(h), H, invert_matrix(H, spec))

    @classmethod
    def default(cls, n: int, spec: FieldSpec) -> "SecrecyCode":
        return cls.from_basis(default_basis(n, spec), spec)

    @classmethod
    def from_parity(cls, H: GfMatrix, spec: FieldSpec) -> "SecrecyCode":
        return cls(spec, H.rows, None, H, invert_matrix(H, spec))

    @classmethod
    def identity(cls, n: int, spec: FieldSpec) -> "SecrecyCode":
        """No mixing at all; leaks every observed message."""
        eye = GfMatrix.identity(n)
        return cls(spec, n, None, eye, eye)

    def encode(self, messages: np.ndarray, backend: str = "rpa") -> np.ndarray:
        return apply_matrix(self.G, messages, self.spec, backend)

    def decode(self, coded: np.ndarray, backend: str = "rpa") -> np.ndarray:
        return apply_matrix(self.H, coded, self.spec, backend)

    def to_bytes(self) -> bytes:
        """m (u8), reduction poly (u32), n (u8), then h_i as big-endian u16."""
        if self.h is None:
            raise ValueError("only basis-derived codes have a canonical byte form")
        return struct.pack(f">BIB{self.n}H", self.spec.m, self.spec.reduction_poly, self.n, *self.h)

    @classmethod
    def from_bytes(cls, data: bytes) -> "SecrecyCode":
        if len(data) < 6:
            raise ValueError("truncated code description")
        m, poly, n = struct.unpack_from(">BIB", data)
        if len(data) != 6 + 2 * n:
            raise ValueError(f"expected {6 + 2 * n} bytes for n={n}, got {len(data)}")
        h = struct.unpack_from(f">{n}H", data, 6)
        return cls.from_basis(h, FieldSpec(m, poly))
