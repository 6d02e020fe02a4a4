import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ostro.errors import InsufficientDepth, ValidationError
from ostro.numerics import (
    IntervalEnclosure,
    LogMagnitude,
    as_rational,
    enclose_tail,
    log_float,
    log_product,
    rational_pair,
    rational_str,
)
from ostro.sequences import OstroSequence

small_fracs = st.fractions(min_value=-50, max_value=50, max_denominator=60)


# -- rationals ---------------------------------------------------------------


@pytest.mark.parametrize(
    "text, expected",
    [("3/4", Fraction(3, 4)), ("-6/8", Fraction(-3, 4)), ("0.3", Fraction(3, 10)), ("7", Fraction(7)), (5, Fraction(5))],
)
def test_as_rational_accepts_exact_forms(text, expected):
    assert as_rational(text) == expected


@pytest.mark.parametrize("bad", [0.3, True, "abc", "1/0", None])
def test_as_rational_rejects_inexact_or_malformed(bad):
    with pytest.raises((ValidationError, ZeroDivisionError)):
        as_rational(bad)


def test_rational_serialization():
    assert rational_str(Fraction(6, 8)) == "3/4"
    assert rational_str(Fraction(5)) == "5"
    assert rational_pair(Fraction(-3, 9)) == {"num": "-1", "den": "3"}


@given(st.lists(st.tuples(st.integers(-30, 30), st.integers(1, 30)), min_size=2, max_size=2))
def test_rational_addition_matches_cross_multiplication(pairs):
    (a, b), (c, d) = pairs
    total = Fraction(a, b) + Fraction(c, d)
    num, den = a * d + c * b, b * d
    g = math.gcd(num, den)
    assert (total.numerator, total.denominator) == (num // g, den // g)
    assert total.denominator > 0


# -- enclosures --------------------------------------------------------------


def test_enclose_tail_sylvester_two_extra(syl1):
    enc = enclose_tail(syl1, 3, 2)
    p = Fraction(1, 42) + Fraction(1, 1806)
    assert enc.lo == p
    assert enc.hi == p + Fraction(2, 3263442)
    assert 0.024363 <= float(enc.lo) <= float(enc.hi) <= 0.024364


def test_enclose_tail_pure_bound(syl1):
    assert enclose_tail(syl1, 3, 0) == IntervalEnclosure(0, Fraction(1, 21))


def test_enclose_tail_power_two(pow2):
    assert enclose_tail(pow2, 1, 1) == IntervalEnclosure(Fraction(1, 8), Fraction(1, 8) + Fraction(2, 128))


def test_enclose_tail_insufficient_depth():
    with pytest.raises(InsufficientDepth):
        enclose_tail(OstroSequence([1, 2, 6]), 2, 3)


def _true_tail(seq, n, upto=14):
    # oracle: partial sum far beyond the enclosure, in mpmath at high precision
    with mpmath.workdps(200):
        return sum(mpmath.mpf(1) / seq.q(i) for i in range(n + 1, upto))


@given(st.integers(0, 6), st.integers(0, 5), st.integers(0, 5))
def test_enclosure_soundness_and_nesting(syl2_n, e1, e2):
    from ostro.sequences import GeneratorRule

    seq = OstroSequence.from_rule(GeneratorRule.sylvester(1))
    n = syl2_n
    a, b = sorted((e1, e2))
    ea, eb = enclose_tail(seq, n, a), enclose_tail(seq, n, b)
    # widening never loosens either end, and the enclosures intersect
    assert eb.lo >= ea.lo and eb.hi <= ea.hi
    assert ea.intersects(eb)
    assert eb.width <= Fraction(2, seq.q(n + b + 1))
    with mpmath.workdps(200):
        true = _true_tail(seq, n)
        assert mpmath.mpf(ea.lo.numerator) / ea.lo.denominator <= true
        assert true <= mpmath.mpf(ea.hi.numerator) / ea.hi.denominator


@given(small_fracs, small_fracs, small_fracs, small_fracs, small_fracs, small_fracs)
def test_interval_arithmetic_contains_exact_results(a, b, c, d, x0, y0):
    x = IntervalEnclosure(min(a, b), max(a, b))
    y = IntervalEnclosure(min(c, d), max(c, d))
    px = x.lo + (x.hi - x.lo) * Fraction(1, 3)
    py = y.lo + (y.hi - y.lo) * Fraction(2, 7)
    assert (x + y).contains(px + py)
    assert (x - y).contains(px - py)
    assert (x * y).contains(px * py)
    assert (-x).contains(-px)


def test_empty_enclosure_rejected():
    with pytest.raises(ValueError):
        IntervalEnclosure(1, 0)


def test_enclosure_comparisons():
    a, b = IntervalEnclosure(0, 1), IntervalEnclosure(2, 3)
    assert a.certainly_below(b) and b.certainly_above(a)
    assert not a.intersects(b)
    assert a.hull(b) == IntervalEnclosure(0, 3)


def test_enclosure_iv_round_trip_is_outward():
    x = IntervalEnclosure(Fraction(1, 3), Fraction(1, 3))
    back = IntervalEnclosure.from_iv(x.to_iv())
    assert back.contains(Fraction(1, 3))


# -- log magnitudes ----------------------------------------------------------


def test_log_product_empty_is_one():
    p = log_product([])
    assert p.sign == 1 and p.log_abs == 0


def test_log_product_adds_logs():
    p = log_product([LogMagnitude.of(2), LogMagnitude.of(3)])
    assert p.sign == 1
    with mpmath.workprec(128):
        assert abs(p.log_abs - mpmath.log(6)) < mpmath.mpf(10) ** -30


def test_log_product_negative_small_magnitude():
    # ln 1024 plus a negated (8 / 2^512)^(1/10)
    small = LogMagnitude.from_log(mpmath.mpf(0.1) * (3 * mpmath.log(2) - 512 * mpmath.log(2)), sign=-1)
    p = log_product([LogMagnitude.of(1024), small])
    assert p.sign == -1
    expected = 10 * math.log(2) + 0.1 * (3 - 512) * math.log(2)
    assert abs(float(p.log_abs) - expected) < 1e-12
    assert abs(p.to_float() + 2.0**10 * 2.0 ** (0.1 * (3 - 512))) < 1e-20


def test_log_magnitude_huge_values():
    big = 2 ** (2**20)
    lm = LogMagnitude.of(big)
    assert abs(float(lm.log_abs) - 2**20 * math.log(2)) < 1e-6
    assert lm.to_float() == math.inf
    assert (LogMagnitude.of(Fraction(1, big))).to_float() == 0.0


@given(st.fractions(min_value=Fraction(1, 10**6), max_value=10**6), st.fractions(min_value=Fraction(1, 10**6), max_value=10**6))
def test_log_magnitude_order_and_product(x, y):
    lx, ly = LogMagnitude.of(x), LogMagnitude.of(y)
    if x < y:
        assert lx < ly
    assert abs((lx * ly).to_float() - float(x * y)) <= 1e-9 * float(x * y)
    assert abs((lx / ly).to_float() - float(x / y)) <= 1e-9 * float(x / y)


def test_log_magnitude_zero():
    z = LogMagnitude.of(0)
    assert z.sign == 0
    assert (z * LogMagnitude.of(5)).sign == 0
    assert z.to_json()["approx"] == 0.0


def test_log_float_beyond_float_range():
    n = 3**5000
    assert abs(log_float(n) - 5000 * math.log(3)) < 1e-9 * 5000
    assert abs(log_float(Fraction(1, n)) + 5000 * math.log(3)) < 1e-9 * 5000
