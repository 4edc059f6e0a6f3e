import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cermet.errors import DivisionByZero, FieldError, NotIrreducible, NotPrimitive
from cermet.gf import (
    DEFAULT_POLYS,
    FieldSpec,
    build_log_exp_tables,
    gf_add,
    gf_inv,
    gf_mul_rpa,
    gf_mul_table,
    gf_pow,
    gf_pow2k,
    is_irreducible,
    mul_const,
    mul_vec,
    multiplicative_order,
    tables_for,
)
from oracles import schoolbook_mul, brute_inverse

GF4 = FieldSpec(4)
GF8 = FieldSpec(8)
GF16 = FieldSpec(16)


def elems(spec):
    return st.integers(0, spec.q - 1)


def test_default_polys():
    assert FieldSpec(4).reduction_poly == 0x13
    assert FieldSpec(8).reduction_poly == 0x11B
    assert FieldSpec(16).reduction_poly == 0x1100B
    for m, poly in DEFAULT_POLYS.items():
        assert poly.bit_length() == m + 1
        assert is_irreducible(poly)


def test_spec_rejects_bad_polys():
    with pytest.raises(NotIrreducible):
        FieldSpec(4, 0x15)  # x^4 + x^2 + 1 = (x^2 + x + 1)^2
    with pytest.raises(FieldError):
        FieldSpec(4, 0x0B)  # degree 3
    with pytest.raises(FieldError):
        FieldSpec(17)
    with pytest.raises(FieldError):
        FieldSpec(1)


def test_add_examples():
    assert gf_add(0x53, 0xCA) == 0x99
    assert gf_add(7, 0) == 7
    assert gf_add(7, 7) == 0


def test_rpa_examples():
    assert gf_mul_rpa(0x3, 0x7, GF4) == 0x9
    assert gf_mul_rpa(0x53, 0xCA, GF8) == 0x01
    for a in range(16):
        assert gf_mul_rpa(a, 1, GF4) == a
        assert gf_mul_rpa(a, 0, GF4) == 0
        assert gf_mul_rpa(0, a, GF4) == 0


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_rpa_matches_schoolbook_exhaustive(m):
    spec = FieldSpec(m)
    for a in range(spec.q):
        for b in range(spec.q):
            assert gf_mul_rpa(a, b, spec) == schoolbook_mul(a, b, spec.reduction_poly)


def test_rpa_matches_schoolbook_random_gf16():
    rng = random.Random(7)
    for _ in range(20000):
        a, b = rng.randrange(1 << 16), rng.randrange(1 << 16)
        assert gf_mul_rpa(a, b, GF16) == schoolbook_mul(a, b, 0x1100B)


def test_table_examples():
    t = build_log_exp_tables(GF4, 2)
    assert list(t.exp[:5]) == [1, 2, 4, 8, 3]
    assert t.log[1] == 0
    t2 = build_log_exp_tables(FieldSpec(2), 2)
    assert list(t2.exp[:3]) == [1, 2, 3]
    assert gf_mul_table(0x3, 0x7, t) == 0x9
    for b in range(16):
        assert gf_mul_table(0, b, t) == 0
        assert gf_mul_table(1, b, t) == b


@pytest.mark.parametrize("m", range(2, 17))
def test_table_invariants(m):
    spec = FieldSpec(m)
    t = tables_for(spec)
    order = spec.q - 1
    assert t.exp[0] == 1
    assert sorted(t.exp[:order]) == list(range(1, spec.q))
    for i in range(0, order, max(1, order // 500)):
        assert t.log[t.exp[i]] == i
    for a in range(1, spec.q, max(1, spec.q // 500)):
        assert t.exp[t.log[a]] == a


def test_aes_poly_is_not_primitive():
    # 0x11B is irreducible but x has order 51, so generator 2 is rejected
    assert multiplicative_order(2, GF8) == 51
    with pytest.raises(NotPrimitive):
        build_log_exp_tables(GF8, 2)
    assert tables_for(GF8).generator == 3


def test_non_primitive_generator_rejected():
    with pytest.raises(NotPrimitive):
        build_log_exp_tables(GF4, 0xF)  # order 5 in GF(16)
    with pytest.raises(NotPrimitive):
        build_log_exp_tables(GF4, 1)


@pytest.mark.parametrize("m", [2, 3, 4, 8])
def test_backends_agree_exhaustive(m):
    spec = FieldSpec(m)
    t = tables_for(spec)
    for a in range(spec.q):
        for b in range(spec.q):
            assert gf_mul_rpa(a, b, spec) == gf_mul_table(a, b, t)


def test_pow_examples():
    assert gf_pow(0x2, 4, GF4) == 0x3
    for a in range(1, 16):
        assert gf_pow(a, 1, GF4) == a
        assert gf_pow(a, 0, GF4) == 1
        assert gf_pow(a, 15, GF4) == 1
    assert gf_pow(0, 3, GF4) == 0
    with pytest.raises(ValueError):
        gf_pow(0, 0, GF4)
    with pytest.raises(ValueError):
        gf_pow(3, -1, GF4)


def test_pow2k():
    for a in range(16):
        assert gf_pow2k(a, 0, GF4) == a
    assert gf_pow2k(0x2, 1, GF4) == 0x4
    for a in range(16):
        for b in range(16):
            for j in range(5):
                assert gf_pow2k(a ^ b, j, GF4) == gf_pow2k(a, j, GF4) ^ gf_pow2k(b, j, GF4)
    # Frobenius has order m
    for a in range(16):
        assert gf_pow2k(a, 4, GF4) == a


def test_inverse_examples():
    assert gf_inv(1, GF4) == 1
    assert gf_inv(0x6, GF4) == 0x7
    assert gf_inv(0x53, GF8) == 0xCA
    with pytest.raises(DivisionByZero):
        gf_inv(0, GF4)
    with pytest.raises(ZeroDivisionError):
        gf_inv(0, GF8)


def test_inverse_matches_brute_force_gf16_field_small():
    for a in range(1, 16):
        assert gf_inv(a, GF4) == brute_inverse(a, 0x13)


def test_element_range_checked():
    assert GF4.check(15) == 15
    with pytest.raises(FieldError):
        GF4.check(16)
    with pytest.raises(FieldError):
        GF4.check(-1)


@settings(max_examples=300, deadline=None)
@given(a=elems(GF16), b=elems(GF16), c=elems(GF16))
def test_field_laws_gf16(a, b, c):
    mul = lambda x, y: gf_mul_rpa(x, y, GF16)
    assert mul(a, b) == mul(b, a)
    assert mul(mul(a, b), c) == mul(a, mul(b, c))
    assert mul(a, b ^ c) == mul(a, b) ^ mul(a, c)


@pytest.mark.parametrize("m", [4, 8, 16])
@pytest.mark.parametrize("backend", ["rpa", "table"])
def test_vectorised_matches_scalar(m, backend):
    spec = FieldSpec(m)
    rng = np.random.default_rng(m)
    a = rng.integers(0, spec.q, 3000)
    b = rng.integers(0, spec.q, 3000)
    a[:5] = 0
    b[5:10] = 0
    got = mul_vec(a, b, spec, backend)
    want = [gf_mul_rpa(int(x), int(y), spec) for x, y in zip(a, b)]
    assert got.tolist() == want
    for c in (0, 1, 2, int(b[20])):
        assert mul_const(c, a, spec, backend).tolist() == [gf_mul_rpa(c, int(x), spec) for x in a]


def test_unknown_backend():
    with pytest.raises(ValueError):
        mul_const(3, np.array([1]), GF4, "fft")
