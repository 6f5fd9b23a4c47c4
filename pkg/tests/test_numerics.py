import cmath
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhist.errors import AmplitudeParseError
from qhist.numerics import (
    I,
    ONE,
    SQRT2,
    ZERO,
    ExactScalar,
    Sign,
    conj_mul,
    parse_amplitude,
    real_sign,
    render,
    render_float,
)

R2 = 2 ** 0.5


@pytest.mark.parametrize(
    "text, coeffs",
    [
        ("1/(2*sqrt2)", (0, Fraction(1, 4), 0, 0)),
        ("0", (0, 0, 0, 0)),
        ("-7/24", (Fraction(-7, 24), 0, 0, 0)),
        ("i/sqrt2", (0, 0, 0, Fraction(1, 2))),
        ("(1 + i) * √2", (0, 1, 0, 1)),
        ("sqrt(2)*sqrt2", (2, 0, 0, 0)),
        ("0.25", (Fraction(1, 4), 0, 0, 0)),
        ("-(-3)", (3, 0, 0, 0)),
    ],
)
def test_parse(text, coeffs):
    assert parse_amplitude(text).coefficients == tuple(Fraction(c) for c in coeffs)


def test_parse_zero_is_additive_identity():
    z = parse_amplitude("0")
    x = parse_amplitude("3/5 - i*sqrt2")
    assert z == ZERO and z + x == x and z.is_zero()


@pytest.mark.parametrize("bad", ["", "1/", "sqrt3", "2**2", "1/0", "(1", "1)", "i i", "1/(sqrt2 - sqrt2)"])
def test_parse_rejects(bad):
    with pytest.raises(AmplitudeParseError) as info:
        parse_amplitude(bad)
    assert 0 <= info.value.position <= len(bad)


def test_conj_mul_examples():
    h = parse_amplitude("1/(2*sqrt2)")
    assert conj_mul(h, -h) == ExactScalar(Fraction(-1, 8))
    assert conj_mul(I, I) == ONE
    assert conj_mul(I * h, h) == ExactScalar(0, 0, Fraction(-1, 8))


def test_conj_mul_float_oracle():
    h = 1 / (2 * R2)
    assert cmath.isclose(conj_mul(h, -h), -1 / 8)
    assert cmath.isclose(conj_mul(1j * h, h), -1j / 8)


@pytest.mark.parametrize(
    "x, sign",
    [
        (ExactScalar(Fraction(1, 8)), Sign.POSITIVE),
        (ZERO, Sign.ZERO),
        (ExactScalar(1, -1), Sign.NEGATIVE),
        (ExactScalar(-1, 1), Sign.POSITIVE),
        (ExactScalar(3, -2), Sign.POSITIVE),
        (ExactScalar(-3, 2), Sign.NEGATIVE),
        (ExactScalar(Fraction(-7, 5), 1), Sign.POSITIVE),
    ],
)
def test_real_sign(x, sign):
    assert real_sign(x) is sign


def test_real_sign_rejects_complex():
    with pytest.raises(ValueError):
        real_sign(I)


def test_inverse_and_division():
    x = ExactScalar(1, 2, -3, Fraction(1, 2))
    assert x * x.inverse() == ONE
    assert (x / x) == ONE
    with pytest.raises(ZeroDivisionError):
        ZERO.inverse()


def test_ordering_uses_exact_sign():
    assert SQRT2 > ExactScalar(Fraction(141, 100))
    assert SQRT2 < ExactScalar(Fraction(142, 100))
    assert sorted([ONE, SQRT2, ZERO]) == [ZERO, ONE, SQRT2]


def test_render_forms():
    assert render(ZERO) == "0"
    assert render(parse_amplitude("1/(2*sqrt2)")) == "1/4*sqrt2"
    assert render(ExactScalar(Fraction(1, 3), 0, 0, Fraction(-7, 24))) == "1/3 - 7/24*i*sqrt2"


def test_render_float_is_fixed_precision():
    assert render_float(0.5) == "5.00000000000e-01"
    assert render_float(complex(1, -2)).endswith("i")


def _random_scalar(rng):
    def q():
        return Fraction(rng.randint(-1000, 1000), rng.randint(1, 1000)) if rng.random() < 0.8 else Fraction(0)

    return ExactScalar(q(), q(), q(), q())


def test_round_trip_ten_thousand():
    rng = random.Random(20260101)
    for _ in range(10_000):
        x = _random_scalar(rng)
        assert parse_amplitude(render(x)) == x


fractions = st.fractions(min_value=-1000, max_value=1000, max_denominator=1000)
scalars = st.builds(ExactScalar, fractions, fractions, fractions, fractions)


@settings(max_examples=300, deadline=None)
@given(scalars, scalars)
def test_float_agreement(x, y):
    fx, fy = complex(x), complex(y)
    scale = 1 + abs(fx) + abs(fy)
    assert abs(complex(x + y) - (fx + fy)) <= 1e-9 * scale
    assert abs(complex(x - y) - (fx - fy)) <= 1e-9 * scale
    assert abs(complex(x * y) - fx * fy) <= 1e-9 * scale ** 2
    if not y.is_zero() and abs(fy) > 1e-6:
        assert cmath.isclose(complex(x / y), fx / fy, rel_tol=1e-9, abs_tol=1e-9)


@settings(max_examples=300, deadline=None)
@given(scalars)
def test_norm_is_real_nonnegative(x):
    n = conj_mul(x, x)
    assert n.is_real()
    assert real_sign(n) in (Sign.ZERO, Sign.POSITIVE)
    assert (real_sign(n) is Sign.ZERO) == x.is_zero()


@settings(max_examples=200, deadline=None)
@given(scalars)
def test_hash_consistent_with_equality(x):
    y = parse_amplitude(render(x))
    assert x == y and hash(x) == hash(y)
