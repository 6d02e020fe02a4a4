"""Sums of independent incomplete sums: finite and infinite convolutions.

Coverings use the explicit interval counts and lengths of the zero-dimension
arguments (no Minkowski-sum enumeration).  Their ``alpha``-volumes
``count * length**alpha`` are evaluated in log space because the lengths
are doubly exponentially small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import mpmath

from . import _accel
from .errors import DepthOverflow, InsufficientDepth, SummabilityViolated, ValidationError
from .fourier import ComplexEnclosure, cf_eval, DEFAULT_TOL
from .kernels import Certificate, ProbabilityKernel, first_digit_uniform, geometric_shift, uniform
from .measures import ClassificationVerdict, MeasureModel, continuity_test
from .numerics import LogMagnitude, as_rational, rational_str
from .sequences import GeneratorRule, OstroSequence, validate


@dataclass
class ConvolutionModel:
    mode: str  # "finite" | "infinite"
    components: list = field(default_factory=list)
    family: "ComponentFamily | None" = None

    def __post_init__(self):
        if self.mode == "finite" and not self.components:
            raise ValidationError("a finite convolution needs at least one component")
        if self.mode == "infinite" and self.family is None:
            raise ValidationError("an infinite convolution needs a component family")

    @property
    def m(self) -> int:
        return len(self.components)


@dataclass
class VolumeEntry:
    alpha: Fraction
    volume: LogMagnitude
    previous: LogMagnitude | None

    @property
    def decreasing(self) -> bool | None:
        if self.previous is None:
            return None
        return self.volume < self.previous

    def to_json(self):
        return {
            "alpha": rational_str(self.alpha),
            "volume": self.volume.to_json(),
            "decreasing_from_previous_rank": self.decreasing,
            "conclusive": self.decreasing is not False,
        }


@dataclass
class CoverReport:
    n: int
    count: int
    length: LogMagnitude
    length_exact: Fraction | None
    volumes: list

    def volume(self, alpha) -> LogMagnitude:
        alpha = as_rational(alpha)
        for v in self.volumes:
            if v.alpha == alpha:
                return v.volume
        raise KeyError(alpha)

    def to_json(self):
        return {
            "n": self.n,
            "count": str(self.count),
            "length": self.length.to_json(),
            "length_exact": rational_str(self.length_exact) if self.length_exact is not None and self.length_exact.denominator < 10**60 else None,
            "volumes": [v.to_json() for v in self.volumes],
        }


def _alphas(alphas) -> list[Fraction]:
    out = [as_rational(a) for a in alphas]
    if any(a <= 0 for a in out):
        raise ValueError("alpha must be positive")
    return out


def _volumes(count_fn, length_fn, n: int, alphas) -> tuple[list, LogMagnitude, Fraction | None]:
    """alpha-volumes at rank n, compared with rank n-1."""
    length, exact = length_fn(n)
    prev_length = length_fn(n - 1)[0] if n > 1 else None
    entries = []
    for a in _alphas(alphas):
        vol = LogMagnitude.of(count_fn(n)) * length**a
        prev = LogMagnitude.of(count_fn(n - 1)) * prev_length**a if prev_length is not None else None
        entries.append(VolumeEntry(a, vol, prev))
    return entries, length, exact


def _length_4m_over_q(seq: OstroSequence, m: int):
    def fn(n):
        try:
            exact = Fraction(4 * m, seq.q(n + 1))
            return LogMagnitude.of(exact), exact
        except (InsufficientDepth, DepthOverflow):
            with mpmath.workprec(160):
                log_len = mpmath.log(4 * m) - seq.log_q(n + 1)
            return LogMagnitude.from_log(log_len), None

    return fn


def autoconv_cover(model: MeasureModel, m: int, n: int, alphas) -> CoverReport:
    """Cover of the m-fold autoconvolution's spectrum: ``(m+1)^n`` intervals of length ``4m/q_{n+1}``."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    count_fn = lambda r: (m + 1) ** r  # noqa: E731
    entries, length, exact = _volumes(count_fn, _length_4m_over_q(model.seq, m), n, alphas)
    return CoverReport(n, count_fn(n), length, exact, entries)


def genconv_cover(models, n: int, alphas) -> CoverReport:
    """Cover for a convolution of m different models: ``2^(mn)`` intervals of length ``4m/2^(2^(n-1))``."""
    models = list(models)
    m = len(models)
    if m < 1 or n < 1:
        raise ValueError("need at least one model and n >= 1")
    for mod in models:
        if mod.seq.materialized >= 2:
            validate(mod.seq)

    def length_fn(r):
        # the uniform bound 2/q_{r+1} <= 2/2^(2^(r-1)) for every component
        log_len = LogMagnitude.of(4 * m) / LogMagnitude.of(2) ** Fraction(2 ** (r - 1))
        exact = Fraction(4 * m, 2 ** (2 ** (r - 1))) if r <= 16 else None
        return log_len, exact

    count_fn = lambda r: 2 ** (m * r)  # noqa: E731
    entries, length, exact = _volumes(count_fn, length_fn, n, alphas)
    return CoverReport(n, count_fn(n), length, exact, entries)


def conv_cf(models, t, tol=DEFAULT_TOL) -> ComplexEnclosure:
    """Characteristic function of a finite convolution: the product of the components'."""
    models = list(models)
    if not models:
        raise ValidationError("no components")
    each = as_rational(tol) / (4 * len(models))
    out = ComplexEnclosure.one()
    for mod in models:
        out = out * cf_eval(mod, t, 1, each)
    return out


# -- infinite convolutions -------------------------------------------------------


@dataclass
class ComponentFamily:
    """A rule ``j -> MeasureModel`` (j = 1, 2, ...) with analytic certificates.

    ``summability``: does ``sum_j 1/q_1^(j)`` converge.  ``discrete``: does
    ``sum_j sum_k (1 - max(p0, p1))`` converge.  ``continuous``: is some or
    the total product of maxima zero.
    """

    name: str
    params: dict
    component: Callable[[int], MeasureModel]
    summability: Certificate
    discrete: Certificate | None = None
    continuous: Certificate | None = None
    flags: dict = field(default_factory=dict)
    cover: Callable | None = None

    def describe(self):
        return {"name": self.name, "params": {k: str(v) for k, v in self.params.items()}}


def geometric_discrete_family() -> ComponentFamily:
    """Component j: q_1 = 2^j with the product rule, p0_k = 1 - 2^-(j+k)."""

    def component(j):
        return MeasureModel(OstroSequence.from_rule(GeneratorRule.sylvester(2**j)), geometric_shift(j))

    return ComponentFamily(
        "geometric_discrete",
        {},
        component,
        Certificate(True, "sum_j 2^-j = 1"),
        discrete=Certificate(True, "sum_j sum_k 2^-(j+k) = 1 < oo, so the double product of maxima is positive"),
        continuous=Certificate(False, "the double product of maxima is positive"),
    )


def dyadic_uniform_family(tail_p0=1) -> ComponentFamily:
    """Component j: q_1 = 2^j with one fair first digit; later digits fixed."""

    def component(j):
        return MeasureModel(OstroSequence.from_rule(GeneratorRule.sylvester(2**j)), first_digit_uniform(tail_p0))

    return ComponentFamily(
        "dyadic_uniform",
        {"tail_p0": tail_p0},
        component,
        Certificate(True, "sum_j 2^-j = 1"),
        discrete=Certificate(False, "every component has D_j = 1/2, so the product over j vanishes"),
        continuous=Certificate(True, "prod_j D_j = prod_j 1/2 = 0"),
        flags={"pattern": "fair digits at denominators 2, 4, 8, ...: binary expansion of a uniform variable"},
    )


def nested_family(base: GeneratorRule | None = None, kernel: ProbabilityKernel | None = None) -> ComponentFamily:
    """Component j uses the shifted sequence ``q_k^(j) = q_{k+j}`` of a base sequence."""
    base = base or GeneratorRule.sylvester(1)
    kernel = kernel or uniform()
    base_seq = OstroSequence.from_rule(base)

    def component(j):
        depth = max(0, base_seq.depth_limit - j)
        terms = base_seq.terms(depth + j)[j:]
        return MeasureModel(OstroSequence(terms, None, max_exact_depth=len(terms)), kernel)

    def cover(N, alphas):
        # digit position d = j + k collects d - 1 terms, so at most d coefficient values;
        # the tail beyond N spreads less than sum_{d>N} (d-1)/q_d <= 2N/q_{N+1}
        count = math.factorial(N)
        try:
            exact = Fraction(2 * N, base_seq.q(N + 1))
            length = LogMagnitude.of(exact)
        except (InsufficientDepth, DepthOverflow):
            exact = None
            length = LogMagnitude.from_log(mpmath.log(2 * N) - base_seq.log_q(N + 1))
        entries = []
        for a in _alphas(alphas):
            entries.append(VolumeEntry(a, LogMagnitude.of(count) * length**a, None))
        return CoverReport(N, count, length, exact, entries)

    levy = kernel.certificate("levy_D_zero")
    return ComponentFamily(
        "nested",
        {"base": base.kind, "kernel": kernel.name},
        component,
        Certificate(True, "sum_j 1/q_(1+j) < 2/q_2"),
        discrete=Certificate(False, "components are continuous") if levy is not None and levy.value else None,
        continuous=Certificate(True, "every component is continuous") if levy is not None and levy.value else None,
        flags={"spectrum_zero_dimensional": True},
        cover=cover,
    )


def linear_q1_family() -> ComponentFamily:
    """Component j: q_1 = j + 1; violates summability (harmonic series)."""

    def component(j):
        return MeasureModel(OstroSequence.from_rule(GeneratorRule.sylvester(j + 1)), uniform())

    return ComponentFamily("linear_q1", {}, component, Certificate(False, "sum_j 1/(j+1) diverges"))


FAMILIES = {
    "geometric_discrete": geometric_discrete_family,
    "dyadic_uniform": dyadic_uniform_family,
    "nested": nested_family,
    "linear_q1": linear_q1_family,
}


def make_family(name: str, **params) -> ComponentFamily:
    try:
        return FAMILIES[name](**params)
    except KeyError:
        raise ValidationError(f"unknown convolution family {name!r}") from None


def _dyadic_pattern(family: ComponentFamily, j_max: int, k_max: int) -> bool:
    """First j_max components: exactly one fair digit each, at denominator 2^j."""
    for j in range(1, j_max + 1):
        model = family.component(j)
        fair = []
        for k in range(1, k_max + 1):
            if not model.kernel.is_exact_at(k):
                return False
            p0 = model.kernel.p0(k)
            if p0 == Fraction(1, 2):
                fair.append(k)
            elif p0 not in (0, 1):
                return False
        if len(fair) != 1 or model.seq.q(fair[0]) != 2**j:
            return False
    return True


def infinite_conv_classify(family: ComponentFamily, j_max: int, k_max: int, cover_rank: int = 8) -> ClassificationVerdict:
    """Pure-type classification of ``sum_j xi^(j)``: discrete iff the double product of maxima is positive."""
    if not family.summability.value:
        raise SummabilityViolated(f"summability fails: {family.summability.reason}")
    log_products = []
    summability_partial = Fraction(0)
    any_continuous = False
    total = 0.0
    examined = 0
    for j in range(1, j_max + 1):
        try:
            model = family.component(j)
            model.seq.q(1)
        except (InsufficientDepth, DepthOverflow):
            break
        examined = j
        k_here = min(k_max, model.kernel.length or k_max)
        p0, p1 = model.kernel.float_arrays(k_here)
        total += float(_accel.log_max_prefix(_accel.as_f64(p0), _accel.as_f64(p1))[-1])
        log_products.append({"j": j, "log_double_product": total})
        summability_partial += Fraction(1, model.seq.q(1))
        comp = continuity_test(model.kernel, k_here)
        if comp.verdict == "continuous":
            any_continuous = True
    evidence = {
        "double_products": log_products,
        "summability": {
            "partial_sum": float(summability_partial),
            "certified": family.summability.value,
            "reason": family.summability.reason,
        },
    }
    flags = dict(family.flags)
    flags["some_component_continuous"] = any_continuous
    flags["components_examined"] = examined
    if family.cover is not None:
        report = family.cover(cover_rank, [Fraction(1, 2), Fraction(1, 10), Fraction(1, 100)])
        flags["cover"] = report.to_json()
    if family.flags.get("spectrum_zero_dimensional"):
        flags["singular"] = True
        flags["anomalously_fractal"] = True
        return ClassificationVerdict(
            "singular",
            [evidence],
            "analytic_certificate",
            "spectrum covered by N! intervals of length 2N/q_(N+1): zero Hausdorff dimension, hence singular",
            flags,
        )
    if family.discrete is not None and family.discrete.value and not any_continuous:
        return ClassificationVerdict("discrete", [evidence], "analytic_certificate", family.discrete.reason, flags)
    if (family.continuous is not None and family.continuous.value) or any_continuous:
        flags["non_discrete"] = True
        if _dyadic_pattern(family, min(examined, 12), k_max):
            flags["absolutely_continuous"] = True
        reason = family.continuous.reason if family.continuous is not None else "a component is continuous"
        return ClassificationVerdict("continuous", [evidence], "analytic_certificate", reason, flags)
    return ClassificationVerdict("undetermined", [evidence], "numeric_trend", None, flags)
