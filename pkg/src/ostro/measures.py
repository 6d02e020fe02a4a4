"""The random incomplete sum ``xi = sum (-1)^(k+1) xi_k / q_k`` and its law.

Cylinder masses, the Lévy continuity and Kakutani classifications, an
exact-enclosure CDF, the two gauge functions built from it, and seeded
sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _accel
from .cylinders import _word
from .errors import DepthOverflow, InsufficientDepth, PrecisionBudget
from .kernels import ProbabilityKernel, uniform, uniformized
from .numerics import IntervalEnclosure, as_rational, enclose_tail, rational_str
from .sequences import OstroSequence, as_sequence

RNG_ALGORITHM = "philox4x64-10/numpy-random"
MAX_PACKED_DEPTH = 62


def geometric_checkpoints(n_max: int) -> list[int]:
    """``1, 2, 4, ...`` up to ``n_max``, with ``n_max`` itself appended."""
    points, n = [], 1
    while n <= n_max:
        points.append(n)
        n *= 2
    if not points or points[-1] != n_max:
        points.append(n_max)
    return points


@dataclass
class MeasureModel:
    seq: OstroSequence
    kernel: ProbabilityKernel

    def __post_init__(self):
        self.seq = as_sequence(self.seq)

    def shifted_prob(self, k: int):
        """``P(eta_k = 1)``: digit 1 at odd k, digit 0 at even k."""
        return self.kernel.prob_enclosure(1 if k % 2 else 0, k)

    def describe(self) -> dict:
        return {"sequence": self.seq.to_json(), "kernel": self.kernel.describe()}


@dataclass
class ClassificationVerdict:
    verdict: str  # equivalent | singular | discrete_atoms | continuous | undetermined | preserves | not_preserves
    evidence: list
    basis: str  # analytic_certificate | numeric_trend
    certificate: str | None = None
    flags: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "basis": self.basis,
            "certificate": self.certificate,
            "evidence": self.evidence,
            "flags": self.flags,
        }


# -- masses -------------------------------------------------------------------


def cylinder_mass(model: MeasureModel, word):
    """``prod_j p_{c_j, j}``: exact Fraction, or an enclosure for irrational kernels."""
    mass = Fraction(1)
    for k, bit in enumerate(_word(word), start=1):
        mass = mass * model.kernel.prob_enclosure(bit, k)
    return mass


def _kernel_depth(kernel: ProbabilityKernel, depth: int) -> int:
    if kernel.length is not None:
        return min(depth, kernel.length)
    return depth


def continuity_test(kernel: ProbabilityKernel, depth: int) -> ClassificationVerdict:
    """Lévy criterion: continuous iff ``D = prod max(p0_k, p1_k) = 0``."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    n = _kernel_depth(kernel, depth)
    p0, p1 = kernel.float_arrays(n)
    logs = _accel.log_max_prefix(_accel.as_f64(p0), _accel.as_f64(p1))
    evidence = [
        {"n": c, "log_D_n": float(logs[c - 1]), "D_n": math.exp(logs[c - 1])} for c in geometric_checkpoints(n)
    ]
    cert = kernel.certificate("levy_D_zero")
    if cert is None:
        return ClassificationVerdict("undetermined", evidence, "numeric_trend", None, {"truncated_at": n})
    verdict = "continuous" if cert.value else "discrete_atoms"
    return ClassificationVerdict(verdict, evidence, "analytic_certificate", cert.reason)


def uniformized_kernel(kernel: ProbabilityKernel) -> ProbabilityKernel:
    """Reference kernel: 1/2 on non-degenerate digits, 0/1 entries preserved."""
    return uniformized(kernel)


def kakutani_classify(kernel: ProbabilityKernel, depth: int) -> ClassificationVerdict:
    """Equivalence vs singularity w.r.t. the uniformized measure.

    Decided by convergence of ``sum_{p0 p1 > 0} (1 - 2 p0_k)^2``.
    """
    n = _kernel_depth(kernel, depth)
    p0, p1 = kernel.float_arrays(n)
    sums = _accel.kakutani_prefix(_accel.as_f64(p0), _accel.as_f64(p1))
    evidence = [{"n": c, "partial_sum": float(sums[c - 1])} for c in geometric_checkpoints(n)]
    cert = kernel.certificate("kakutani_converges")
    levy = kernel.certificate("levy_D_zero")
    flags = {}
    if levy is not None:
        flags["continuous"] = bool(levy.value)
    if cert is None:
        return ClassificationVerdict("undetermined", evidence, "numeric_trend", None, flags)
    if cert.value:
        return ClassificationVerdict("equivalent", evidence, "analytic_certificate", cert.reason, flags)
    if levy is not None and levy.value:
        flags["singular_continuous"] = True
    return ClassificationVerdict("singular", evidence, "analytic_certificate", cert.reason, flags)


# -- distribution function ------------------------------------------------------


def _hi(v):
    return v.hi if isinstance(v, IntervalEnclosure) else v


def _as_enc(v) -> IntervalEnclosure:
    return v if isinstance(v, IntervalEnclosure) else IntervalEnclosure.point(v)


@dataclass
class CdfResult:
    x: Fraction
    value: IntervalEnclosure
    depth_used: int
    exact: bool

    @property
    def lo(self):
        return self.value.lo

    @property
    def hi(self):
        return self.value.hi

    def to_json(self):
        return {
            "x": rational_str(self.x),
            "lo": rational_str(self.value.lo),
            "hi": rational_str(self.value.hi),
            "depth_used": self.depth_used,
        }


def cdf_detail(model: MeasureModel, x, tol=Fraction(1, 10**6), max_refine: int = 8) -> CdfResult:
    """``F(x) = P(xi < x)`` as an enclosure of width at most ``tol``.

    Walks the value-ordered digit tree of ``eta = xi + sum_even 1/q_k``:
    above ``1/q_k`` the lower subtree's mass is banked and the walk goes
    up; below the tail sum ``r_k`` it goes down; strictly between the two
    the point is in a gap and the value is exact.
    """
    x = as_rational(x)
    tol = as_rational(tol)
    if tol <= 0:
        raise ValueError("tol must be positive")
    seq = model.seq
    cum = Fraction(0)
    node = Fraction(1)
    chosen = Fraction(0)
    k = 1
    cut = 2

    def done(value, depth, exact=True):
        return CdfResult(x, _as_enc(value) if exact else value, depth, exact)

    while True:
        if _hi(node) <= tol:
            return CdfResult(x, _as_enc(cum).hull(_as_enc(cum + node)), k - 1, False)
        decided = False
        for _ in range(max_refine + 1):
            cut = max(cut, k + 1)
            try:
                even_core = seq.parity_recip_sum(0, cut, 0)
                tail = Fraction(2, seq.q(cut + 1))
                r_prev = enclose_tail(seq, k - 1, cut - k + 1)
                r_k = enclose_tail(seq, k, cut - k)
                a_k = Fraction(1, seq.q(k))
            except (InsufficientDepth, DepthOverflow) as exc:
                raise PrecisionBudget(f"tolerance {float(tol):.3g} not reached by depth {k}: {exc}") from exc
            d_lo = x + even_core - chosen
            d_hi = d_lo + tail
            if d_hi <= 0:
                return done(cum, k - 1)
            if d_lo > r_prev.hi:
                return done(cum + node, k - 1)
            if d_lo >= a_k:
                p_low = 1 - model.shifted_prob(k)
                cum = cum + node * p_low
                node = node * model.shifted_prob(k)
                chosen += a_k
                decided = True
                break
            if d_hi <= r_k.lo:
                node = node * (1 - model.shifted_prob(k))
                decided = True
                break
            if d_lo > r_k.hi and d_hi <= a_k:
                return done(cum + node * (1 - model.shifted_prob(k)), k)
            cut += max(1, cut - k)
        if not decided:
            raise PrecisionBudget(f"enclosures did not separate at digit {k}")
        k += 1


def cdf(model: MeasureModel, x, tol=Fraction(1, 10**6)) -> IntervalEnclosure:
    return cdf_detail(model, x, tol).value


def gauge_eval(model: MeasureModel, t, which: str = "h1", tol=Fraction(1, 10**6)) -> IntervalEnclosure:
    """``h1`` = distribution function of the uniformized measure, ``h2`` = of the all-1/2 measure."""
    if which == "h1":
        kern = uniformized_kernel(model.kernel)
    elif which == "h2":
        kern = uniform()
    else:
        raise ValueError("which must be 'h1' or 'h2'")
    return cdf(MeasureModel(model.seq, kern), t, tol)


# -- sampling -------------------------------------------------------------------


def sample_codes(model: MeasureModel, depth: int, seed: int, count: int) -> np.ndarray:
    """Digit words packed into int64 (bit ``k-1`` is ``xi_k``).

    Uniforms come from numpy's Philox generator keyed by ``seed`` and are
    laid out row-major by (sample, digit); ``xi_k = 1`` iff ``u < p1_k``.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if depth > MAX_PACKED_DEPTH:
        raise ValueError(f"sampling depth is limited to {MAX_PACKED_DEPTH}")
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random((count, depth))
    _, p1 = model.kernel.float_arrays(depth)
    return _accel.pack_codes(u, _accel.as_f64(p1))


def code_value(seq: OstroSequence, code: int, depth: int) -> Fraction:
    total = Fraction(0)
    for k in range(1, depth + 1):
        if (code >> (k - 1)) & 1:
            total += Fraction(1 if k % 2 else -1, seq.q(k))
    return total


def sample(model: MeasureModel, depth: int, seed: int, count: int) -> list[Fraction]:
    """``count`` truncated realizations ``sum_{k<=depth} (-1)^(k+1) xi_k / q_k``, exact."""
    codes = sample_codes(model, depth, seed, count)
    uniq, inverse = np.unique(codes, return_inverse=True)
    values = [code_value(model.seq, int(c), depth) for c in uniq]
    return [values[i] for i in inverse.ravel()]


def ks_distance(model: MeasureModel, samples, tol=Fraction(1, 10**4)) -> dict:
    """Certified upper bound on sup |F_n - F| for a sample of exact points.

    Both sides of every jump of the empirical CDF are compared against the
    CDF enclosure at that point (continuous ``F`` assumed).
    """
    values = sorted(samples)
    n = len(values)
    if n == 0:
        raise ValueError("empty sample")
    distinct = []
    for v in values:
        if distinct and distinct[-1][0] == v:
            distinct[-1][1] += 1
        else:
            distinct.append([v, 1])
    worst = Fraction(0)
    below = 0
    for v, mult in distinct:
        enc = cdf(model, v, tol)
        for c in (below, below + mult):
            emp = Fraction(c, n)
            worst = max(worst, abs(emp - enc.lo), abs(emp - enc.hi))
        below += mult
    return {"n": n, "distinct": len(distinct), "sup_distance_upper": float(worst), "tol": rational_str(tol)}
