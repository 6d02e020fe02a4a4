"""Dimension profiles.

Every dimension here is a ``liminf`` and therefore not computable from a
finite prefix.  Reports keep three things apart: finite checkpoints, a
trend label for them, and an analytic limit that is attached only when the
kernel family (or the sequence structure) certifies it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from . import _accel
from .errors import DegenerateKernel
from .kernels import ProbabilityKernel
from .measures import ClassificationVerdict, geometric_checkpoints
from .numerics import as_rational, enclose_tail, rational_str
from .sequences import as_sequence

LN2 = math.log(2)


def trend_of(values) -> str:
    vals = [v for v in values if v is not None]
    if len(vals) < 2:
        return "constant"
    arr = np.asarray(vals, dtype=float)
    diffs = np.diff(arr)
    # float summation noise is not a trend
    diffs[np.abs(diffs) <= 1e-12 * np.maximum(1.0, np.abs(arr[1:]))] = 0.0
    if np.all(diffs == 0):
        return "constant"
    if np.all(diffs <= 0):
        return "decreasing"
    if np.all(diffs >= 0):
        return "increasing"
    return "oscillating"


@dataclass
class DimensionReport:
    checkpoints: list  # [(n, value)]
    trend: str
    liminf_estimate: float | None
    analytic_limit: dict | None = None
    flags: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def value_at(self, n: int):
        for m, v in self.checkpoints:
            if m == n:
                return v
        raise KeyError(n)

    @property
    def last(self):
        return self.checkpoints[-1][1]

    def to_json(self) -> dict:
        out = {
            "checkpoints": [[n, v] for n, v in self.checkpoints],
            "trend": self.trend,
            "liminf_estimate": self.liminf_estimate,
            "analytic_limit": self.analytic_limit,
        }
        if self.flags:
            out["flags"] = self.flags
        out.update(self.extra)
        return out


def _report(points, limit=None, flags=None, extra=None, lo=0.0, hi=1.0) -> DimensionReport:
    values = [v for _, v in points]
    tail = [v for v in values[-3:] if v is not None]
    flags = dict(flags or {})
    out_of_range = [n for n, v in points if v is not None and not (lo <= v <= hi)]
    if out_of_range:
        flags["outside_theoretical_range"] = out_of_range
    return DimensionReport(
        list(points), trend_of(values), min(tail) if tail else None, limit, flags, dict(extra or {})
    )


def _limit_json(cert) -> dict | None:
    if cert is None:
        return None
    return {"value": cert.value.approx, "expr": cert.value.expr, "certificate": cert.reason}


# -- spectrum ---------------------------------------------------------------------


def spectrum_dim_profile(seq, k_range) -> DimensionReport:
    """``k ln 2 / (-ln r_k)`` per k, with ``r_k = sum_{i>k} 1/q_i`` enclosed.

    Values are reported as the upper end of their enclosure (from
    ``r_k < 2/q_{k+1}``); the lower end is kept alongside.
    """
    seq = as_sequence(seq)
    rows, points = [], []
    with mpmath.workprec(128):
        for k in k_range:
            if seq.can_materialize(k + 2):
                r = enclose_tail(seq, k, 1)
                neg_log_hi = -mpmath.log(mpmath.mpf(r.lo.numerator) / r.lo.denominator) if r.lo else None
                neg_log_lo = -(mpmath.log(mpmath.mpf(r.hi.numerator)) - mpmath.log(mpmath.mpf(r.hi.denominator)))
                if neg_log_hi is None:
                    neg_log_hi = mpmath.log(mpmath.mpf(seq.q(k + 1)))
                source = "exact"
            else:
                # beyond exact depth: 1/q_{k+1} < r_k < 2/q_{k+1}
                lq = seq.log_q(k + 1)
                neg_log_hi, neg_log_lo = lq, lq - mpmath.log(2)
                source = "log-recurrence" if seq.log_is_exact(k + 1) else "log-approximate"
            v_hi = float(k * mpmath.log(2) / neg_log_lo)
            v_lo = float(k * mpmath.log(2) / neg_log_hi)
            points.append((k, v_hi))
            rows.append({"k": k, "lo": v_lo, "hi": v_hi, "source": source})
    limit = {
        "value": 0.0,
        "expr": "0",
        "certificate": "r_k < 2/q_(k+1) < 2/2^(2^(k-1)), so k ln 2 / (-ln r_k) <= k ln 2 / ((2^(k-1) - 1) ln 2) -> 0",
    }
    return _report(points, limit, extra={"enclosures": rows})


# -- entropy ----------------------------------------------------------------------


@dataclass
class EntropyProfile:
    """Per-index entropies and counts (arrays indexed 0..n-1 for n = 1..n_max).

    ``H`` is split as ``n_half * ln 2 + rest`` so digits with ``p0 = 1/2``
    contribute exactly ``ln 2``.
    """

    h: np.ndarray
    n_half: np.ndarray
    rest: np.ndarray
    g: np.ndarray
    N: np.ndarray

    @property
    def H(self) -> np.ndarray:
        return self.n_half * LN2 + self.rest

    def ratio_nu_star(self, n: int) -> float | None:
        g = int(self.g[n - 1])
        if g == 0:
            return None
        nh = int(self.n_half[n - 1])
        return nh / g + float(self.rest[n - 1]) / (g * LN2)

    def ratio_nu_r(self, n: int) -> float:
        return int(self.n_half[n - 1]) / n + float(self.rest[n - 1]) / (n * LN2)

    def to_json(self, points=None) -> list:
        points = points or geometric_checkpoints(len(self.h))
        return [
            {"n": n, "h_n": float(self.h[n - 1]), "H_n": float(self.H[n - 1]), "g_n": int(self.g[n - 1]), "N_n": int(self.N[n - 1])}
            for n in points
        ]


def entropy_profile(kernel: ProbabilityKernel, n_max: int) -> EntropyProfile:
    p0, p1 = kernel.float_arrays(n_max)
    nondeg, half = kernel.flags(n_max)
    q0 = np.where(half, 1.0, p0)
    q1 = np.where(half, 0.0, p1)
    q0 = np.where(nondeg, q0, 1.0)
    q1 = np.where(nondeg, q1, 0.0)
    rest = _accel.entropy_prefix(_accel.as_f64(q0), _accel.as_f64(q1))
    h = np.where(half, LN2, np.diff(np.concatenate(([0.0], rest))))
    n_half = np.cumsum(half.astype(np.int64))
    counts = np.cumsum(nondeg.astype(np.int64))
    return EntropyProfile(h, n_half, np.asarray(rest), counts, counts.copy())


def dim_mu_nu_star(kernel: ProbabilityKernel, n_max: int, profile: EntropyProfile | None = None) -> DimensionReport:
    """Checkpoints of ``H_n / (g_n ln 2)``."""
    prof = profile or entropy_profile(kernel, n_max)
    if int(prof.g[n_max - 1]) == 0:
        raise DegenerateKernel("no non-degenerate digit up to n_max: the measure is a point mass")
    points = [(n, prof.ratio_nu_star(n)) for n in geometric_checkpoints(n_max)]
    return _report(points, _limit_json(kernel.certificate("dim_nu_star")))


def dim_mu_nu_r(kernel: ProbabilityKernel, n_max: int, profile: EntropyProfile | None = None) -> DimensionReport:
    """Checkpoints of ``H_n / (n ln 2)``."""
    prof = profile or entropy_profile(kernel, n_max)
    if int(prof.g[n_max - 1]) == 0:
        raise DegenerateKernel("no non-degenerate digit up to n_max: the measure is a point mass")
    points = [(n, prof.ratio_nu_r(n)) for n in geometric_checkpoints(n_max)]
    return _report(points, _limit_json(kernel.certificate("dim_nu_r")))


def dim_spectrum_nu_r(kernel: ProbabilityKernel, k_max: int) -> DimensionReport:
    """Checkpoints of ``N_k / k`` (exact fractions kept alongside)."""
    nondeg, _ = kernel.flags(k_max)
    counts = np.cumsum(nondeg.astype(np.int64))
    pts = geometric_checkpoints(k_max)
    points = [(k, int(counts[k - 1]) / k) for k in pts]
    exact = [[k, rational_str(Fraction(int(counts[k - 1]), k))] for k in pts]
    return _report(points, _limit_json(kernel.certificate("spectrum_density")), extra={"exact": exact})


def preservation_check(kernel: ProbabilityKernel, p_floor, n_max: int) -> ClassificationVerdict:
    """Dimension preservation iff ``liminf H_n/(g_n ln 2) = 1`` (under ``p_ik >= p_floor``)."""
    floor = as_rational(p_floor)
    if not (0 < floor <= Fraction(1, 2)):
        raise ValueError("p_floor must lie in (0, 1/2]")
    violation = None
    for k in range(1, n_max + 1):
        enc = kernel.p0_enclosure(k)
        if enc.lo < floor or 1 - enc.hi < floor:
            violation = k
            break
    prof = entropy_profile(kernel, n_max)
    report = dim_mu_nu_star(kernel, n_max, prof)
    evidence = [{"n": n, "value": v} for n, v in report.checkpoints]
    flags = {
        "hypothesis_violated": violation is not None,
        "criterion_checkpoint": report.last,
        "p_floor": rational_str(floor),
    }
    if violation is not None:
        flags["first_violation_index"] = violation
    cert = kernel.certificate("dim_nu_star")
    if cert is None:
        return ClassificationVerdict("undetermined", evidence, "numeric_trend", None, flags)
    flags["criterion_value"] = cert.value.approx
    flags["criterion_expr"] = cert.value.expr
    verdict = "preserves" if cert.value.expr == "1" else "not_preserves"
    return ClassificationVerdict(verdict, evidence, "analytic_certificate", cert.reason, flags)
