import itertools
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ostro.cylinders import cover_set, partial_sum
from ostro.errors import PrecisionBudget
from ostro.kernels import (
    alternating_degenerate,
    constant,
    half_minus_geometric,
    half_minus_quarter_sqrt,
    inverse_2k,
    one_minus_inverse_square,
    point_mass,
    table,
    uniform,
)
from ostro.measures import (
    MeasureModel,
    cdf,
    cdf_detail,
    continuity_test,
    cylinder_mass,
    gauge_eval,
    geometric_checkpoints,
    kakutani_classify,
    ks_distance,
    sample,
    sample_codes,
)
from ostro.sequences import GeneratorRule, OstroSequence, reconstruct

SYL = OstroSequence.from_rule(GeneratorRule.sylvester(1))


def _model(kernel, seq=SYL):
    return MeasureModel(seq, kernel)


def _brute_cdf(model, x, depth=8):
    """Oracle: sum masses of all rank-`depth` cylinders left of x (float endpoints, 60 digits)."""
    seq = model.seq
    below = Fraction(0)
    straddle = Fraction(0)
    with mpmath.workdps(60):
        xv = mpmath.mpf(x.numerator) / x.denominator
        even_tail = sum(mpmath.mpf(1) / seq.q(j) for j in range(depth + 1, 16) if j % 2 == 0)
        odd_tail = sum(mpmath.mpf(1) / seq.q(j) for j in range(depth + 1, 16) if j % 2 == 1)
        for word in itertools.product((0, 1), repeat=depth):
            mass = Fraction(1)
            for k, c in enumerate(word, start=1):
                mass *= model.kernel.prob(c, k)
            if mass == 0:
                continue
            s = partial_sum(seq, word)
            s = mpmath.mpf(s.numerator) / s.denominator
            if s + odd_tail < xv:
                below += mass
            elif s - even_tail < xv:
                straddle += mass
    return below, below + straddle


# -- masses ---------------------------------------------------------------------


def test_cylinder_mass_examples():
    assert cylinder_mass(_model(uniform()), (1, 0, 1)) == Fraction(1, 8)
    assert cylinder_mass(_model(inverse_2k()), (0, 0)) == Fraction(1, 8)
    assert cylinder_mass(_model(constant("3/10")), ()) == 1


def test_cylinder_mass_irrational_kernel_is_enclosed():
    mass = cylinder_mass(_model(half_minus_quarter_sqrt()), (0, 1))
    # p0_1 = 1/4, p1_2 = 1/2 + 1/(4 sqrt 2)
    expected = 0.25 * (0.5 + 0.25 / 2**0.5)
    assert float(mass.lo) <= expected + 1e-15 and expected - 1e-15 <= float(mass.hi)


@pytest.mark.parametrize("kernel", [uniform(), constant("3/10"), inverse_2k(), alternating_degenerate()], ids=lambda k: k.name)
def test_mass_additivity_and_total(kernel):
    model = _model(kernel)
    for m in range(0, 9):
        total = Fraction(0)
        for word in itertools.product((0, 1), repeat=m):
            mass = cylinder_mass(model, word)
            total += mass
            if m < 8:
                assert mass == cylinder_mass(model, word + (0,)) + cylinder_mass(model, word + (1,))
        assert total == 1


# -- classification -------------------------------------------------------------


def test_continuity_uniform():
    v = continuity_test(uniform(), 64)
    assert v.verdict == "continuous" and v.basis == "analytic_certificate"
    assert v.evidence[-1]["D_n"] == pytest.approx(2.0**-64)


def test_continuity_telescoping_atoms():
    v = continuity_test(one_minus_inverse_square(), 4096)
    assert v.verdict == "discrete_atoms"
    # D_n = prod_{m=2}^{n+1} (1 - 1/m^2) = (n+2)/(2(n+1)) -> 1/2
    n = v.evidence[-1]["n"]
    assert v.evidence[-1]["D_n"] == pytest.approx((n + 2) / (2 * (n + 1)), rel=1e-12)


def test_continuity_raw_table_undetermined():
    v = continuity_test(table([["1/3", "2/3"]] * 5), 10)
    assert v.verdict == "undetermined" and v.basis == "numeric_trend"
    assert v.evidence[-1]["n"] == 5


@pytest.mark.parametrize(
    "kernel, verdict",
    [(half_minus_quarter_sqrt(), "singular"), (half_minus_geometric(), "equivalent"), (constant("3/10"), "singular")],
    ids=["quarter-sqrt", "geometric", "constant"],
)
def test_kakutani_examples(kernel, verdict):
    v = kakutani_classify(kernel, 1024)
    assert v.verdict == verdict and v.basis == "analytic_certificate"


def test_kakutani_partial_sums_match_direct_sum():
    v = kakutani_classify(half_minus_quarter_sqrt(), 256)
    direct = sum(1 / (4 * k) for k in range(1, 257))
    assert v.evidence[-1]["partial_sum"] == pytest.approx(direct, rel=1e-12)


def test_geometric_checkpoints():
    assert geometric_checkpoints(10) == [1, 2, 4, 8, 10]
    assert geometric_checkpoints(8) == [1, 2, 4, 8]


# -- distribution function -------------------------------------------------------


def test_cdf_outside_spectrum():
    model = _model(uniform())
    assert cdf(model, Fraction(-1)) == cdf(model, Fraction(-1)).point(0)
    assert cdf(model, Fraction(2)).lo == 1 and cdf(model, Fraction(2)).hi == 1


def test_cdf_rank_one_gap_is_exactly_half():
    res = cdf_detail(_model(uniform()), Fraction(1, 3))
    assert res.exact and res.value.lo == res.value.hi == Fraction(1, 2)
    lo, hi = _brute_cdf(_model(uniform()), Fraction(1, 3), depth=6)
    assert lo == hi == Fraction(1, 2)


@pytest.mark.parametrize("x", [Fraction(1, 10), Fraction(7, 10), Fraction(9, 10), Fraction(-1, 5), Fraction(1, 50)])
@pytest.mark.parametrize("kernel", [uniform(), constant("3/10"), inverse_2k()], ids=lambda k: k.name)
def test_cdf_matches_enumeration(x, kernel):
    model = _model(kernel)
    enc = cdf(model, x, Fraction(1, 10**4))
    lo, hi = _brute_cdf(model, x)
    assert enc.lo <= hi and lo <= enc.hi
    assert enc.width <= Fraction(1, 10**4)


def test_cdf_spectrum_point_needs_depth():
    # 1/7 is an incomplete sum (digits 0011...), so tight tolerances run out of depth
    with pytest.raises(PrecisionBudget):
        cdf(_model(uniform()), Fraction(1, 7), Fraction(1, 10**9))
    assert cdf(_model(uniform()), Fraction(1, 7), Fraction(1, 10**4)).width <= Fraction(1, 10**4)


xs = st.fractions(min_value=Fraction(-6, 10), max_value=Fraction(12, 10), max_denominator=1000)


@given(xs, xs)
@settings(max_examples=40)
def test_cdf_monotone(x, y):
    x, y = min(x, y), max(x, y)
    tol = Fraction(1, 1000)
    model = _model(constant("3/10"))
    fx, fy = cdf(model, x, tol), cdf(model, y, tol)
    assert fx.hi <= fy.hi + tol and fx.lo <= fy.lo + tol


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_cdf_difference_across_cylinder_is_its_mass(m):
    model = _model(constant("3/10"))
    cover = sorted(cover_set(SYL, m), key=lambda c: c.hull.lo)
    gaps = [(a.hull.hi + b.hull.lo) / 2 for a, b in zip(cover, cover[1:])]
    for cyl, left, right in zip(cover[1:-1], gaps, gaps[1:]):
        diff = cdf(model, right) - cdf(model, left)
        assert diff.contains(cylinder_mass(model, cyl.word))


def test_gauge_uniform_kernel_h1_equals_h2():
    model = _model(uniform())
    for t in (Fraction(1, 10), Fraction(1, 3), Fraction(7, 10)):
        h1 = gauge_eval(model, t, "h1", Fraction(1, 10**4))
        h2 = gauge_eval(model, t, "h2", Fraction(1, 10**4))
        assert h1.intersects(h2)
    assert gauge_eval(model, Fraction(-1), "h1").hi == 0


def test_gauge_with_degenerate_odd_digits():
    # p0 in {0, 1} at odd k: h1 only sees the surviving cylinders
    kern = alternating_degenerate(1, 1)
    model = _model(kern)
    cover = sorted(cover_set(SYL, 2), key=lambda c: c.hull.lo)
    t = (cover[1].hull.hi + cover[2].hull.lo) / 2
    h1 = gauge_eval(model, t, "h1")
    h2 = gauge_eval(model, t, "h2")
    from ostro.kernels import uniformized

    lo1, hi1 = _brute_cdf(_model(uniformized(kern)), t, depth=6)
    lo2, hi2 = _brute_cdf(_model(uniform()), t, depth=6)
    assert h1.lo <= hi1 and lo1 <= h1.hi
    assert h2.lo <= hi2 and lo2 <= h2.hi
    assert h2.lo == Fraction(1, 2)
    assert h1.lo in (0, 1)


# -- sampling ---------------------------------------------------------------------


def test_degenerate_samples():
    zeros = sample(_model(point_mass(0)), 8, seed=1, count=50)
    assert set(zeros) == {0}
    ones = sample(_model(point_mass(1)), 8, seed=1, count=50)
    assert set(ones) == {reconstruct(SYL, 8)}


def test_sampling_is_deterministic():
    model = _model(constant("3/10"))
    a = sample(model, 10, seed=42, count=200)
    b = sample(model, 10, seed=42, count=200)
    c = sample(model, 10, seed=43, count=200)
    assert a == b and a != c


def test_sample_digit_frequencies():
    model = _model(constant("3/10"))
    codes = sample_codes(model, 6, seed=3, count=20000)
    ones = [(codes >> k & 1).mean() for k in range(6)]
    assert all(abs(f - 0.7) < 0.02 for f in ones)


def test_sample_truncation_within_tail():
    from ostro.cylinders import cylinder, length

    model = _model(uniform())
    codes = sample_codes(model, 6, seed=5, count=100)
    values = sample(model, 6, seed=5, count=100)
    bound = Fraction(2, SYL.q(7))
    assert length(SYL, 6).hi <= bound
    for code, v in zip(codes, values):
        word = tuple((int(code) >> k) & 1 for k in range(6))
        # the untruncated value lies in the word's cylinder, which contains v and is shorter than 2/q_7
        assert v == partial_sum(SYL, word)
        assert cylinder(SYL, word).contains(v)


def test_ks_distance_small_sample():
    model = _model(uniform())
    values = sample(model, 10, seed=11, count=2000)
    out = ks_distance(model, values, Fraction(1, 1000))
    assert out["n"] == 2000
    assert out["sup_distance_upper"] < 0.05
