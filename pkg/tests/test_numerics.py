from fractions import Fraction

import pytest
from flint import arb, ctx
from hypothesis import given, settings
from hypothesis import strategies as st

from carleman.numerics import (
    ComplexEnclosure,
    Enclosure,
    LogMag,
    NeedMorePrecision,
    Ordering,
    complex_inv_pow_exact,
    amax,
    amin,
    ipow,
    log_compare,
    parse_rational,
    precision,
    to_fraction,
    with_precision_retry,
)

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=1000)


def test_parse_rational_forms():
    assert parse_rational("3/4") == Fraction(3, 4)
    assert parse_rational("-0.125") == Fraction(-1, 8)
    assert parse_rational("1e-3") == Fraction(1, 1000)
    with pytest.raises(ValueError):
        parse_rational("abc")


@given(rationals, rationals)
def test_exact_arithmetic_stays_exact(a, b):
    x, y = Enclosure.exact(a), Enclosure.exact(b)
    assert (x + y).value == a + b
    assert (x * y).value == a * b
    assert (x - y).is_exact
    if b:
        assert (x / y).value == a / b


@given(rationals, rationals)
def test_ball_contains_exact(a, b):
    ex = Enclosure.exact(a) * Enclosure.exact(b) + Enclosure.exact(a)
    ball = Enclosure.ball(arb(a.numerator) / a.denominator) * Enclosure.ball(
        arb(b.numerator) / b.denominator
    ) + Enclosure.ball(arb(a.numerator) / a.denominator)
    assert ball.contains(ex.value)


@given(st.integers(min_value=-30, max_value=30))
def test_ipow_handles_zero_midpoint(n):
    x = arb(0, arb(1) / 8)
    if n < 0:
        return
    r = ipow(x, n)
    assert r.is_finite()
    if n > 0:
        assert r.contains(0) and r.abs_upper() <= arb("0.126") ** n


@given(st.fractions(min_value=Fraction(1, 64), max_value=50, max_denominator=64), st.integers(-20, 20))
def test_ipow_matches_exact_power(q, n):
    a = arb(q.numerator) / q.denominator
    assert Enclosure.ball(ipow(a, n)).contains(q**n)


@given(rationals, rationals.filter(bool), st.integers(1, 12))
def test_complex_inv_pow_exact(u, v, n):
    re, im = complex_inv_pow_exact(u, v, n)
    z = complex(u, v) ** (-n)
    assert abs(complex(float(re), float(im)) - z) <= 1e-9 * abs(z)


def test_logmag_ordering():
    big = LogMag.of(Enclosure.ball(arb(2) ** 1000))
    small = LogMag.of(Enclosure.exact(3))
    assert log_compare(small, big) is Ordering.LESS
    assert log_compare(big, small) is Ordering.GREATER
    fuzzy = LogMag.of(Enclosure.ball(arb("3 +/- 0.5")))
    assert log_compare(fuzzy, small) is Ordering.INDETERMINATE
    assert LogMag.of(Enclosure.exact(0)).hi is None


def test_logmag_of_zero_straddling_ball_has_no_lower_bound():
    lm = LogMag.of(Enclosure.ball(arb("0 +/- 1")))
    assert lm.lo is None and lm.hi is not None


def test_precision_context_restores():
    with precision(512):
        assert ctx.prec == 512
    assert ctx.prec == 256


def test_precision_retry_doubles():
    seen = []

    def fn():
        seen.append(ctx.prec)
        if ctx.prec < 1024:
            raise NeedMorePrecision("more")
        return ctx.prec

    assert with_precision_retry(fn) == 1024
    assert seen == [256, 512, 1024]
    assert ctx.prec == 256


def test_complex_enclosure_bounds():
    z = ComplexEnclosure.exact(Fraction(3), Fraction(4))
    assert z.abs_upper() >= 5 and z.abs_lower() <= 5
    assert to_fraction(z.re) == 3


def test_certainty_predicates():
    x = Enclosure.ball(arb("1 +/- 0.1"))
    assert x.certainly_gt(0) and x.certainly_lt(2)
    assert not x.certainly_gt(1) and not x.certainly_lt(1)
    assert Enclosure.exact(Fraction(1, 3)).certainly_eq(Fraction(1, 3))


@given(st.floats(-1e12, 1e12), st.floats(-1e12, 1e12))
def test_amax_amin_keep_precision(x, y):
    a, b = arb(x) + arb(0, arb(2) ** -200), arb(y) / 3
    big, small = (a, b) if a.mid() >= b.mid() else (b, a)
    scale = arb(2) ** -150 * (1 + abs(a).upper() + abs(b).upper())
    hi, lo = amax(a, b), amin(a, b)
    assert hi.overlaps(big) and hi.rad() <= scale
    assert lo.overlaps(small) and lo.rad() <= scale
