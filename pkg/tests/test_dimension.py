import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ostro import kernels
from ostro.dimension import (
    dim_mu_nu_r,
    dim_mu_nu_star,
    dim_spectrum_nu_r,
    entropy_profile,
    preservation_check,
    spectrum_dim_profile,
    trend_of,
)
from ostro.errors import DegenerateKernel

LN2 = math.log(2)


def _h(p):
    """Binary entropy in nats with 0 ln 0 = 0."""
    return -sum(x * math.log(x) for x in (p, 1 - p) if 0 < x < 1)


def _oracle_ratio(p0_of, n, denom="g"):
    """``H_n / (g_n ln 2)`` or ``H_n / (n ln 2)`` by plain summation."""
    hs = [_h(float(p0_of(k))) for k in range(1, n + 1)]
    g = sum(1 for k in range(1, n + 1) if 0 < p0_of(k) < 1)
    return math.fsum(hs) / ((g if denom == "g" else n) * LN2)


# -- spectrum ---------------------------------------------------------------------


def test_spectrum_profile_checkpoints(syl1):
    rep = spectrum_dim_profile(syl1, range(1, 12))
    with mpmath.workdps(40):
        q9 = mpmath.mpf(syl1.q(9))
        oracle8 = 8 * mpmath.log(2) / mpmath.log(q9 / 2)
    assert abs(rep.value_at(8) - float(oracle8)) < 1e-3
    assert rep.value_at(8) <= 0.05
    assert rep.value_at(11) <= 0.02
    assert rep.analytic_limit["value"] == 0.0
    assert rep.trend == "decreasing"


def test_spectrum_enclosures_bracket_value(syl1):
    rep = spectrum_dim_profile(syl1, range(1, 9))
    for row in rep.extra["enclosures"]:
        assert row["lo"] <= row["hi"]
        assert row["source"] == "exact"


@pytest.mark.parametrize("fixture", ["syl2", "pow2", "primes"])
def test_spectrum_limit_attached_everywhere(fixture, request):
    seq = request.getfixturevalue(fixture)
    rep = spectrum_dim_profile(seq, range(2, 9))
    assert rep.analytic_limit["value"] == 0.0
    assert rep.value_at(8) < 0.1


# -- entropy ----------------------------------------------------------------------


def test_entropy_uniform():
    prof = entropy_profile(kernels.uniform(), 64)
    assert all(h == LN2 for h in prof.h)
    assert list(prof.n_half) == list(range(1, 65))
    assert list(prof.g) == list(range(1, 65))
    assert prof.ratio_nu_star(64) == 1.0


def test_entropy_degenerate():
    prof = entropy_profile(kernels.point_mass(1), 32)
    assert all(h == 0 for h in prof.h)
    assert int(prof.g[-1]) == 0 and int(prof.N[-1]) == 0


def test_entropy_constant():
    prof = entropy_profile(kernels.constant(Fraction(3, 10)), 10)
    with mpmath.workdps(30):
        oracle = -(mpmath.mpf("0.3") * mpmath.log(mpmath.mpf("0.3")) + mpmath.mpf("0.7") * mpmath.log(mpmath.mpf("0.7")))
    assert abs(prof.h[0] - float(oracle)) < 1e-15
    assert abs(prof.h[0] - 0.61086) < 1e-5


def test_degenerate_kernel_rejected():
    with pytest.raises(DegenerateKernel):
        dim_mu_nu_star(kernels.point_mass(0), 100)
    with pytest.raises(DegenerateKernel):
        dim_mu_nu_r(kernels.point_mass(1), 100)


# -- measure dimensions -------------------------------------------------------------


def test_inverse_2k_goes_to_zero():
    kern = kernels.inverse_2k()
    rep = dim_mu_nu_star(kern, 10**4)
    assert rep.last <= 0.01
    assert abs(rep.last - _oracle_ratio(kern.p0, 10**4)) < 1e-10
    assert rep.analytic_limit["value"] == 0


def test_quarter_sqrt_goes_to_one():
    kern = kernels.half_minus_quarter_sqrt()
    rep = dim_mu_nu_star(kern, 10**4)
    assert rep.last >= 0.999
    assert abs(rep.last - _oracle_ratio(lambda k: 0.5 - 0.25 / math.sqrt(k), 10**4)) < 1e-10
    assert rep.analytic_limit["value"] == 1


def test_alternating_example_half():
    kern = kernels.alternating_example()
    rep = dim_mu_nu_star(kern, 10**4)
    assert abs(rep.last - 0.5) <= 0.05
    assert abs(rep.last - _oracle_ratio(kern.p0, 10**4)) < 1e-10
    assert rep.analytic_limit["value"] == 0.5


def test_nu_r_examples():
    assert all(v == 1.0 for _, v in dim_mu_nu_r(kernels.uniform(), 256).checkpoints)
    dy = dim_mu_nu_r(kernels.dyadic_positions(), 2**12)
    # H_n = (floor(log2 n) + 1) ln 2
    for n, v in dy.checkpoints:
        assert v == pytest.approx((n.bit_length()) / n, abs=1e-12)
    assert dy.analytic_limit["value"] == 0
    c = dim_mu_nu_r(kernels.constant(Fraction(3, 10)), 1000)
    assert abs(c.last - 0.8813) < 1e-4
    assert c.trend == "constant"


def test_spectrum_nu_r_examples():
    assert all(v == 1.0 for _, v in dim_spectrum_nu_r(kernels.constant(Fraction(3, 10)), 128).checkpoints)
    dy = dim_spectrum_nu_r(kernels.dyadic_positions(), 16)
    assert dy.value_at(16) == 0.3125
    assert ["16", "5/16"] == [str(dy.extra["exact"][-1][0]), dy.extra["exact"][-1][1]]
    alt = dim_spectrum_nu_r(kernels.alternating_degenerate(), 1000)
    assert abs(alt.last - 0.5) < 1e-2
    assert alt.analytic_limit["value"] == 0.5


# -- preservation -------------------------------------------------------------------


def test_preservation_examples():
    assert preservation_check(kernels.uniform(), Fraction(2, 5), 1000).verdict == "preserves"
    v = preservation_check(kernels.constant(Fraction(3, 10)), Fraction(1, 4), 1000)
    assert v.verdict == "not_preserves"
    assert abs(v.flags["criterion_value"] - 0.8813) < 1e-3
    assert not v.flags["hypothesis_violated"]
    q = preservation_check(kernels.half_minus_quarter_sqrt(), Fraction(1, 5), 1000)
    assert q.verdict == "preserves" and q.basis == "analytic_certificate"


def test_preservation_flags_floor_violation():
    v = preservation_check(kernels.constant(Fraction(3, 10)), Fraction(2, 5), 100)
    assert v.flags["hypothesis_violated"] and v.flags["first_violation_index"] == 1
    assert v.verdict == "not_preserves"


def test_preservation_rejects_bad_floor():
    with pytest.raises(ValueError):
        preservation_check(kernels.uniform(), Fraction(3, 4), 10)


# -- invariants ---------------------------------------------------------------------

_KERNELS = [
    kernels.inverse_2k(),
    kernels.half_minus_quarter_sqrt(),
    kernels.alternating_example(),
    kernels.dyadic_positions(),
    kernels.constant(Fraction(3, 10)),
    kernels.alternating_degenerate(),
]


@pytest.mark.parametrize("kern", _KERNELS, ids=lambda k: k.name)
def test_uniformized_has_full_dimension(kern):
    rep = dim_mu_nu_star(kernels.uniformized(kern), 512)
    assert all(v == 1.0 for _, v in rep.checkpoints)


@pytest.mark.parametrize("kern", _KERNELS, ids=lambda k: k.name)
def test_profile_invariants(kern):
    prof = entropy_profile(kern, 300)
    assert all(0 <= h <= LN2 for h in prof.h)
    assert all(b >= a - 1e-15 for a, b in zip(prof.H, prof.H[1:]))
    assert list(prof.g) == list(prof.N)
    for n in range(1, 301):
        nu_r = prof.ratio_nu_r(n)
        star = prof.ratio_nu_star(n)
        if star is None:
            assert nu_r == 0
            continue
        assert -1e-12 <= star <= 1 + 1e-12
        assert nu_r == pytest.approx(star * int(prof.g[n - 1]) / n, rel=1e-12, abs=1e-15)


@given(st.fractions(min_value=Fraction(1, 1000), max_value=Fraction(999, 1000)))
def test_entropy_bounded_by_ln2(p):
    h = entropy_profile(kernels.constant(p), 1).h[0]
    assert 0 < h <= LN2
    assert (h == LN2) == (p == Fraction(1, 2))


@given(st.lists(st.floats(min_value=0, max_value=1), min_size=1, max_size=20))
def test_trend_labels_monotone(xs):
    label = trend_of(sorted(xs))
    assert label in ("increasing", "constant")
