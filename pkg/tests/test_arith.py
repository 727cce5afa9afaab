import random
from fractions import Fraction

import pytest
from scipy import stats

from mpc_riskagg.arith import (
    FRAC_BITS,
    FieldElem,
    MAX_FIELD_PRIME,
    ModReal,
    QuantParams,
    RangeError,
    default_field_prime,
    mod_real,
    signed_decode,
    signed_embed,
    validate_field_prime,
)

SPAN = 1 << FRAC_BITS


# -- modular reals -----------------------------------------------------------


def test_mod_real_decimal_examples():
    # decimal strings parse exactly, so both published examples are bit-exact
    assert mod_real("3.6", 2) == mod_real("1.6", 2)
    assert mod_real("3.6", 2).to_float() == 1.6
    assert mod_real("3.6", 3) == mod_real("0.6", 3)
    assert mod_real("3.6", 3).to_float() == 0.6


def test_mod_real_zero_identity():
    for m in (1, 2, 3, 17, 1 << 32):
        assert mod_real(0, m).raw == 0
        assert mod_real(0, m).to_float() == 0.0


def test_mod_real_negative_wraps():
    assert mod_real("-0.5", 3) == mod_real("2.5", 3)
    assert mod_real(-2, 3).to_float() == 1.0


def test_mod_real_range_errors():
    with pytest.raises(RangeError):
        mod_real(float(1 << 65), 3)
    with pytest.raises(RangeError):
        ModReal(raw=-1, modulus=3)
    with pytest.raises(RangeError):
        ModReal(raw=3 * SPAN, modulus=3)
    with pytest.raises(RangeError):
        mod_real(1.0, 0)


def test_add_sub_negate_exact_group_laws():
    rng = random.Random(1)
    m = 7
    for _ in range(500):
        a = ModReal.uniform(m, rng)
        b = ModReal.uniform(m, rng)
        c = ModReal.uniform(m, rng)
        assert a + b == b + a
        assert (a + b) + c == a + (b + c)
        assert (a - b) + b == a
        assert a + (-a) == ModReal(0, m)


def test_sum_equals_pairwise_fold():
    rng = random.Random(2)
    m = 11
    values = [ModReal.uniform(m, rng) for _ in range(64)]
    left = values[0]
    for v in values[1:]:
        left = left + v
    raw = sum(v.raw for v in values) % (m * SPAN)
    assert left.raw == raw


def test_masking_makes_values_uniform():
    # for fixed x in [0,1), x + R mod m is uniform when R is uniform
    rng = random.Random(1)
    m = 3
    x = mod_real("0.37", m)
    samples = [(x + ModReal.uniform(m, rng)).to_float() / m for _ in range(4000)]
    stat, p = stats.kstest(samples, "uniform")
    assert p > 0.01, f"masked values not uniform (p={p})"


def test_widen_round_roundtrip():
    x = mod_real("0.3", 5)
    wide = x.widen(130)
    assert wide.frac_bits == 130
    assert wide.round_to(FRAC_BITS) == x
    with pytest.raises(ValueError):
        wide.widen(64)


def test_mul_wide_exact():
    a = mod_real("0.5", 4)
    b = mod_real("0.25", 4)
    prod = a.mul_wide(b)
    assert prod.frac_bits == 128
    assert prod.to_fraction() == Fraction(1, 8)


def test_u128_wire_roundtrip():
    x = mod_real("2.9", 3)
    assert len(x.encode()) == 16
    assert ModReal.decode(x.encode(), 3) == x
    with pytest.raises(ValueError):
        ModReal.decode(b"\x00" * 15, 3)


# -- prime field -------------------------------------------------------------


def _xgcd(a, b):
    old_r, r = a, b
    old_s, s = 1, 0
    while r:
        qt = old_r // r
        old_r, r = r, old_r - qt * r
        old_s, s = s, old_s - qt * s
    return old_r, old_s


def test_field_small_examples():
    p7 = FieldElem(3, 7) * FieldElem(5, 7)
    assert p7.value == 1  # 15 mod 7
    p = 101
    for a in (1, 13, 55, 100):
        assert (FieldElem(a, p) + FieldElem(p - a, p)).value == 0


def test_field_inverse_against_euclid_oracle():
    p = MAX_FIELD_PRIME
    rng = random.Random(4)
    for _ in range(1000):
        a = rng.randrange(1, p)
        g, s = _xgcd(a, p)
        assert g == 1
        expected = s % p
        elem = FieldElem(a, p)
        assert elem.inv().value == expected
        assert (elem * elem.inv()).value == 1


def test_field_distributivity():
    p = 2**61 - 1
    rng = random.Random(5)
    for _ in range(300):
        a, b, c = (FieldElem(rng.randrange(p), p) for _ in range(3))
        assert a * (b + c) == a * b + a * c


def test_field_errors():
    with pytest.raises(ZeroDivisionError):
        FieldElem(0, 7).inv()
    with pytest.raises(ValueError):
        FieldElem(1, 7) + FieldElem(1, 11)
    with pytest.raises(RangeError):
        FieldElem(7, 7)
    with pytest.raises(RangeError):
        FieldElem(1, 1 << 61)


def test_field_wire_roundtrip():
    e = FieldElem(123456789, MAX_FIELD_PRIME)
    assert FieldElem.decode(e.encode(), MAX_FIELD_PRIME) == e


# -- quantization ------------------------------------------------------------


def test_quantize_endpoints_and_symmetry():
    qp = QuantParams(5)
    assert qp.half == 2
    assert qp.quantize(1.0) == 2
    assert qp.quantize(-1.0) == -2
    assert qp.quantize(0.0) == 0
    assert qp.dequantize(1) == 0.5
    # clamping beyond the endpoints
    assert qp.quantize(7.3) == 2
    assert qp.quantize(-7.3) == -2


def test_quantize_odd_symmetry_random():
    qp = QuantParams(257)
    rng = random.Random(6)
    for _ in range(2000):
        u = rng.uniform(-1, 1)
        assert qp.quantize(-u) == -qp.quantize(u)


def test_quantize_roundtrip_error_bound():
    qp = QuantParams(101)
    rng = random.Random(7)
    half_step = qp.step / 2
    worst = 0.0
    for _ in range(10_000):
        u = rng.uniform(-1, 1)
        err = abs(qp.dequantize(qp.quantize(u)) - u)
        worst = max(worst, err)
    assert worst <= half_step + 1e-12, worst


def test_quantize_rejects_even_levels():
    with pytest.raises(ValueError):
        QuantParams(4)
    with pytest.raises(ValueError):
        QuantParams(1)


# -- signed embedding --------------------------------------------------------


def test_signed_embed_decode_examples():
    assert signed_embed(-3, 11).value == 8
    assert signed_decode(FieldElem(8, 11)) == -3
    assert signed_decode(signed_embed(0, 11)) == 0


def test_signed_embed_identity_exhaustive():
    p = 11
    for c in range(-5, 6):
        assert signed_decode(signed_embed(c, p)) == c
    with pytest.raises(RangeError):
        signed_embed(6, 11)
    with pytest.raises(RangeError):
        signed_embed(-6, 11)


# -- session prime -----------------------------------------------------------


def test_default_field_prime():
    assert default_field_prime(100, (1 << 16) + 1) == MAX_FIELD_PRIME
    validate_field_prime(MAX_FIELD_PRIME, 10_000, 256)
    with pytest.raises(RangeError):
        default_field_prime(1 << 40, 1 << 16)
    with pytest.raises(RangeError):
        validate_field_prime(101, 100, 5)  # p <= q^2 n
    with pytest.raises(RangeError):
        validate_field_prime(100, 2, 5)  # not prime
