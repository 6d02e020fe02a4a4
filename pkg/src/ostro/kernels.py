"""Digit probability kernels ``k -> (p0_k, p1_k)``.

A kernel is either a raw finite table of exact rationals or a named closed
form.  Named families carry *certificates*: analytic statements about the
asymptotic quantities (Lévy product, Kakutani series, entropy ratios) that
finite prefixes cannot decide.  Only certified kernels ever receive a
definite asymptotic verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import DegenerateKernel, InsufficientDepth, NotExact, ValidationError
from .numerics import IntervalEnclosure, as_rational, rational_str

HALF = Fraction(1, 2)
_SQRT_BITS = 200


@dataclass(frozen=True)
class Certificate:
    """An analytic fact about a kernel family, with a one-line justification."""

    value: object
    reason: str

    def to_json(self):
        v = self.value
        if isinstance(v, Fraction):
            v = rational_str(v)
        return {"value": v, "reason": self.reason}


@dataclass(frozen=True)
class LimitValue:
    """An exact or closed-form limit; ``approx`` is its float value."""

    expr: str
    approx: float

    def to_json(self):
        return {"expr": self.expr, "approx": self.approx}


def _limit(value) -> LimitValue:
    if isinstance(value, LimitValue):
        return value
    value = Fraction(value)
    return LimitValue(rational_str(value), float(value))


def binary_entropy(p: Fraction | float) -> float:
    p = float(p)
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log(p) + (1 - p) * math.log1p(-p))


@dataclass(eq=False)
class ProbabilityKernel:
    """Per-digit probabilities; ``p0(k)`` is 1-indexed.

    ``exact(k)`` returns the exact ``p0_k`` or ``None`` when it is
    irrational, in which case ``enclose(k)`` supplies a rational enclosure.
    ``certificates`` maps keys ``levy_D_zero``, ``kakutani_converges``,
    ``dim_nu_star``, ``dim_nu_r``, ``spectrum_density`` to
    :class:`Certificate` objects.
    """

    name: str
    params: dict
    exact: Callable[[int], Fraction | None]
    floats: Callable[[int], tuple[float, float]]
    enclose: Callable[[int], IntervalEnclosure] | None = None
    certificates: dict = field(default_factory=dict)
    length: int | None = None  # finite tables only
    is_family: bool = True
    degenerate_after: int | None = None  # certified: every digit beyond this index has p0 in {0, 1}

    # -- entries -----------------------------------------------------------

    def _check_index(self, k: int):
        if k < 1:
            raise IndexError("kernel indices start at 1")
        if self.length is not None and k > self.length:
            raise InsufficientDepth(f"kernel table has {self.length} entries, index {k} requested")

    def p0(self, k: int) -> Fraction:
        self._check_index(k)
        value = self.exact(k)
        if value is None:
            raise NotExact(f"p0[{k}] of kernel {self.name!r} is irrational")
        return value

    def pair(self, k: int) -> tuple[Fraction, Fraction]:
        p0 = self.p0(k)
        return p0, 1 - p0

    def prob(self, bit: int, k: int) -> Fraction:
        p0 = self.p0(k)
        return p0 if bit == 0 else 1 - p0

    def p0_enclosure(self, k: int) -> IntervalEnclosure:
        self._check_index(k)
        value = self.exact(k)
        if value is not None:
            return IntervalEnclosure.point(value)
        if self.enclose is None:
            raise NotExact(f"kernel {self.name!r} has no enclosure for index {k}")
        return self.enclose(k)

    def prob_enclosure(self, bit: int, k: int):
        """Exact Fraction when available, else an IntervalEnclosure."""
        self._check_index(k)
        value = self.exact(k)
        if value is None:
            enc = self.p0_enclosure(k)
            return enc if bit == 0 else 1 - enc
        return value if bit == 0 else 1 - value

    def is_exact_at(self, k: int) -> bool:
        self._check_index(k)
        return self.exact(k) is not None

    def nondegenerate(self, k: int) -> bool:
        value = self.exact(k)
        if value is None:
            enc = self.enclose(k)
            return enc.lo > 0 and enc.hi < 1
        return 0 < value < 1

    def is_half(self, k: int) -> bool:
        return self.exact(k) == HALF

    def float_arrays(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``(p0, p1)`` float64 arrays of length ``n`` (each entry correctly rounded on its own)."""
        if self.length is not None and n > self.length:
            raise InsufficientDepth(f"kernel table has {self.length} entries, {n} requested")
        p0 = np.empty(n)
        p1 = np.empty(n)
        for k in range(1, n + 1):
            p0[k - 1], p1[k - 1] = self.floats(k)
        return p0, p1

    def flags(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Boolean arrays ``(nondegenerate, exactly_half)`` for indices 1..n."""
        nondeg = np.fromiter((self.nondegenerate(k) for k in range(1, n + 1)), dtype=bool, count=n)
        half = np.fromiter((self.is_half(k) for k in range(1, n + 1)), dtype=bool, count=n)
        return nondeg, half

    def certificate(self, key: str) -> Certificate | None:
        return self.certificates.get(key)

    # -- serialization -----------------------------------------------------

    def to_json(self, entries: int = 0) -> dict:
        family = {"name": self.name, "params": _params_json(self.params)} if self.is_family else None
        n = self.length if self.length is not None else entries
        rows = []
        for k in range(1, n + 1):
            if self.is_exact_at(k):
                p0, p1 = self.pair(k)
                rows.append([rational_str(p0), rational_str(p1)])
        return {"family": family, "entries": rows}

    def describe(self) -> dict:
        return {
            "name": self.name,
            "params": _params_json(self.params),
            "certified": sorted(self.certificates),
        }

    def __repr__(self):
        return f"ProbabilityKernel({self.name!r}, {self.params!r})"


def _params_json(params: dict) -> dict:
    out = {}
    for key, value in sorted(params.items()):
        if isinstance(value, Fraction):
            out[key] = rational_str(value)
        elif isinstance(value, (list, tuple)):
            out[key] = [rational_str(v) if isinstance(v, Fraction) else v for v in value]
        else:
            out[key] = value
    return out


def _from_exact(fn: Callable[[int], Fraction]):
    def floats(k):
        p0 = fn(k)
        return float(p0), float(1 - p0)

    return floats


def _cert(**kw) -> dict:
    return {key: Certificate(*val) for key, val in kw.items()}


# -- families ---------------------------------------------------------------


def uniform() -> ProbabilityKernel:
    return ProbabilityKernel(
        "uniform",
        {},
        lambda k: HALF,
        lambda k: (0.5, 0.5),
        certificates=_cert(
            levy_D_zero=(True, "every factor max(p0,p1) equals 1/2, so D_n = 2^-n -> 0"),
            kakutani_converges=(True, "every term (1-2p0)^2 vanishes"),
            dim_nu_star=(_limit(1), "h_n = ln 2 for every n"),
            dim_nu_r=(_limit(1), "H_n = n ln 2"),
            spectrum_density=(_limit(1), "every digit is non-degenerate"),
        ),
    )


def constant(p0) -> ProbabilityKernel:
    c = as_rational(p0)
    if not 0 <= c <= 1:
        raise ValidationError(f"probability {c} outside [0, 1]")
    if c in (0, 1):
        certs = _cert(
            levy_D_zero=(False, "every factor equals 1: the measure is a point mass"),
            kakutani_converges=(True, "no non-degenerate digits; the series is empty"),
            dim_nu_r=(_limit(0), "all entropies vanish"),
            spectrum_density=(_limit(0), "no non-degenerate digits"),
        )
    else:
        h = binary_entropy(c)
        ratio = 1.0 if c == HALF else h / math.log(2)
        expr = "1" if c == HALF else f"h({rational_str(c)})/ln 2"
        certs = _cert(
            levy_D_zero=(True, f"constant factor max(p0,p1) = {rational_str(max(c, 1 - c))} < 1"),
            kakutani_converges=(
                c == HALF,
                "all terms vanish" if c == HALF else f"constant positive term (1-2p0)^2 = {rational_str((1 - 2 * c) ** 2)}",
            ),
            dim_nu_star=(LimitValue(expr, ratio), "constant per-digit entropy, g_n = n"),
            dim_nu_r=(LimitValue(expr, ratio), "H_n = n h(p0)"),
            spectrum_density=(_limit(1), "every digit is non-degenerate"),
        )
    return ProbabilityKernel(
        "constant",
        {"p0": c},
        lambda k: c,
        _from_exact(lambda k: c),
        certificates=certs,
        degenerate_after=0 if c in (0, 1) else None,
    )


def inverse_2k() -> ProbabilityKernel:
    fn = lambda k: Fraction(1, 2 * k)  # noqa: E731
    return ProbabilityKernel(
        "inverse_2k",
        {},
        fn,
        _from_exact(fn),
        certificates=_cert(
            levy_D_zero=(True, "max = 1 - 1/(2k) and sum 1/(2k) diverges"),
            kakutani_converges=(False, "(1 - 1/k)^2 -> 1, the series diverges"),
            dim_nu_star=(_limit(0), "h_k ~ ln(2k)/(2k) -> 0, so H_n/n -> 0 by Cesaro"),
            dim_nu_r=(_limit(0), "h_k -> 0, so H_n/n -> 0 by Cesaro"),
            spectrum_density=(_limit(1), "0 < 1/(2k) < 1 for every k"),
        ),
    )


def _inv_sqrt_enclosure(k: int) -> IntervalEnclosure:
    """Rational enclosure of 1/sqrt(k) with about ``_SQRT_BITS`` bits."""
    scale = 1 << _SQRT_BITS
    s = math.isqrt(k * scale * scale)  # s <= sqrt(k)*scale < s+1
    if s * s == k * scale * scale:
        return IntervalEnclosure.point(Fraction(scale, s))
    return IntervalEnclosure(Fraction(scale, s + 1), Fraction(scale, s))


def half_minus_quarter_sqrt() -> ProbabilityKernel:
    def exact(k):
        r = math.isqrt(k)
        return HALF - Fraction(1, 4 * r) if r * r == k else None

    def enclose(k):
        return HALF - Fraction(1, 4) * _inv_sqrt_enclosure(k)

    def floats(k):
        d = 0.25 / math.sqrt(k)
        return 0.5 - d, 0.5 + d

    return ProbabilityKernel(
        "half_minus_quarter_sqrt",
        {},
        exact,
        floats,
        enclose,
        certificates=_cert(
            levy_D_zero=(True, "max = 1/2 + 1/(4 sqrt k) <= 3/4"),
            kakutani_converges=(False, "(1-2p0)^2 = 1/(4k), harmonic series diverges"),
            dim_nu_star=(_limit(1), "ln 2 - h_k = O(1/k), so H_n = n ln 2 - O(ln n)"),
            dim_nu_r=(_limit(1), "ln 2 - h_k = O(1/k)"),
            spectrum_density=(_limit(1), "1/4 <= p0 < 1/2 for every k"),
        ),
    )


def half_minus_geometric() -> ProbabilityKernel:
    fn = lambda k: HALF - Fraction(1, 2**k)  # noqa: E731
    return ProbabilityKernel(
        "half_minus_geometric",
        {},
        fn,
        _from_exact(fn),
        certificates=_cert(
            levy_D_zero=(True, "max = 1/2 + 2^-k <= 3/4 for k >= 2"),
            kakutani_converges=(True, "(1-2p0)^2 = 4^(1-k), a geometric series (k = 1 is degenerate and excluded)"),
            dim_nu_star=(_limit(1), "ln 2 - h_k = O(4^-k) is summable"),
            dim_nu_r=(_limit(1), "ln 2 - h_k = O(4^-k) is summable"),
            spectrum_density=(_limit(1), "only k = 1 is degenerate"),
        ),
    )


def alternating_example() -> ProbabilityKernel:
    """p0 = 1/2 - 1/(4j) at k = 2j and p0 = 1/(2j) at k = 2j - 1."""

    def fn(k):
        if k % 2 == 0:
            return HALF - Fraction(1, 2 * k)
        return Fraction(1, k + 1)

    return ProbabilityKernel(
        "alternating_example",
        {},
        fn,
        _from_exact(fn),
        certificates=_cert(
            levy_D_zero=(True, "even-index factors are at most 3/4"),
            kakutani_converges=(False, "odd-index terms (1 - 2/(k+1))^2 -> 1"),
            dim_nu_star=(_limit(HALF), "even entropies -> ln 2, odd entropies -> 0, all digits non-degenerate"),
            dim_nu_r=(_limit(HALF), "even entropies -> ln 2, odd entropies -> 0"),
            spectrum_density=(_limit(1), "every digit is non-degenerate"),
        ),
    )


def dyadic_positions() -> ProbabilityKernel:
    """p0 = 1/2 at k = 1, 2, 4, 8, ... and 0 elsewhere."""
    fn = lambda k: HALF if k & (k - 1) == 0 else Fraction(0)  # noqa: E731
    return ProbabilityKernel(
        "dyadic_positions",
        {},
        fn,
        _from_exact(fn),
        certificates=_cert(
            levy_D_zero=(True, "infinitely many factors equal 1/2"),
            kakutani_converges=(True, "every non-degenerate term vanishes"),
            dim_nu_star=(_limit(1), "every non-degenerate digit has entropy ln 2"),
            dim_nu_r=(_limit(0), "H_n = (floor(log2 n) + 1) ln 2 = o(n)"),
            spectrum_density=(_limit(0), "N_k = floor(log2 k) + 1 = o(k)"),
        ),
    )


def alternating_degenerate(degenerate_p0=0, degenerate_parity: int = 0) -> ProbabilityKernel:
    """p0 = 1/2 at indices of one parity, a fixed 0 or 1 at the other."""
    d = as_rational(degenerate_p0)
    if d not in (0, 1):
        raise ValidationError("degenerate_p0 must be 0 or 1")
    fn = lambda k: d if k % 2 == degenerate_parity else HALF  # noqa: E731
    return ProbabilityKernel(
        "alternating_degenerate",
        {"degenerate_p0": d, "degenerate_parity": degenerate_parity},
        fn,
        _from_exact(fn),
        certificates=_cert(
            levy_D_zero=(True, "every other factor equals 1/2"),
            kakutani_converges=(True, "every non-degenerate term vanishes"),
            dim_nu_star=(_limit(1), "every non-degenerate digit has entropy ln 2"),
            dim_nu_r=(_limit(HALF), "H_n = floor-or-ceil(n/2) ln 2"),
            spectrum_density=(_limit(HALF), "half of the digits are non-degenerate"),
        ),
    )


def one_minus_inverse_square() -> ProbabilityKernel:
    fn = lambda k: 1 - Fraction(1, (k + 1) ** 2)  # noqa: E731
    return ProbabilityKernel(
        "one_minus_inverse_square",
        {},
        fn,
        _from_exact(fn),
        certificates=_cert(
            levy_D_zero=(False, "D = prod_{m>=2} (1 - 1/m^2) = 1/2 (telescoping)"),
            kakutani_converges=(False, "(1 - 2p0)^2 -> 1"),
            dim_nu_star=(_limit(0), "h_k -> 0, Cesaro"),
            dim_nu_r=(_limit(0), "h_k -> 0, Cesaro"),
            spectrum_density=(_limit(1), "every digit is non-degenerate"),
        ),
    )


def geometric_shift(j: int = 0) -> ProbabilityKernel:
    """p0_k = 1 - 2^-(j+k); the digit-1 probabilities are summable."""
    fn = lambda k: 1 - Fraction(1, 2 ** (j + k))  # noqa: E731

    def floats(k):
        p1 = 2.0 ** -(j + k)
        return 1.0 - p1, p1

    return ProbabilityKernel(
        "geometric_shift",
        {"j": j},
        fn,
        floats,
        certificates=_cert(
            levy_D_zero=(False, f"sum_k 2^-(j+k) = 2^-{j} < oo, so D > 0"),
            kakutani_converges=(False, "(1-2p0)^2 -> 1"),
            dim_nu_star=(_limit(0), "h_k -> 0, Cesaro"),
            dim_nu_r=(_limit(0), "h_k -> 0, Cesaro"),
            spectrum_density=(_limit(1), "every digit is non-degenerate"),
        ),
    )


def point_mass(bit: int = 1) -> ProbabilityKernel:
    if bit not in (0, 1):
        raise ValidationError("bit must be 0 or 1")
    kern = constant(1 - bit)
    kern.name = "point_mass"
    kern.params = {"bit": bit}
    return kern


def first_digit_uniform(tail_p0=1) -> ProbabilityKernel:
    """p0_1 = 1/2 and every later digit fixed (p0 = ``tail_p0`` in {0, 1})."""
    d = as_rational(tail_p0)
    if d not in (0, 1):
        raise ValidationError("tail_p0 must be 0 or 1")
    fn = lambda k: HALF if k == 1 else d  # noqa: E731
    return ProbabilityKernel(
        "first_digit_uniform",
        {"tail_p0": d},
        fn,
        _from_exact(fn),
        certificates=_cert(
            levy_D_zero=(False, "D = 1/2: two atoms"),
            kakutani_converges=(True, "single non-degenerate digit with p0 = 1/2"),
            dim_nu_star=(_limit(1), "g_n = 1, H_n = ln 2"),
            dim_nu_r=(_limit(0), "H_n = ln 2"),
            spectrum_density=(_limit(0), "N_k = 1"),
        ),
        degenerate_after=1,
    )


def table(entries, default_p0=None) -> ProbabilityKernel:
    """Finite table of exact ``(p0, p1)`` rows; no certificates.

    With ``default_p0`` the table extends indefinitely with that value.
    """
    rows = []
    for i, row in enumerate(entries, start=1):
        if isinstance(row, (list, tuple)):
            p0 = as_rational(row[0])
            p1 = as_rational(row[1]) if len(row) > 1 else 1 - p0
        else:
            p0 = as_rational(row)
            p1 = 1 - p0
        if p0 < 0 or p1 < 0 or p0 + p1 != 1:
            raise ValidationError(f"row {i}: ({p0}, {p1}) is not a probability pair")
        rows.append(p0)
    default = as_rational(default_p0) if default_p0 is not None else None
    fn = lambda k: rows[k - 1] if k <= len(rows) else default  # noqa: E731
    return ProbabilityKernel(
        "table",
        {"entries": len(rows)} if default is None else {"entries": len(rows), "default_p0": default},
        fn,
        _from_exact(fn),
        length=len(rows) if default is None else None,
        is_family=False,
    )


def uniformized(base: ProbabilityKernel) -> ProbabilityKernel:
    """Replace every non-degenerate pair by (1/2, 1/2), keep 0/1 entries."""
    if base.name == "uniformized" or base.name == "uniform":
        return base

    def fn(k):
        base._check_index(k)
        if base.nondegenerate(k):
            return HALF
        return base.p0_enclosure(k).lo

    certs = {}
    density = base.certificate("spectrum_density")
    levy = base.certificate("levy_D_zero")
    if density is not None:
        infinite = density.value.approx > 0 or (levy is not None and levy.value)
        certs["levy_D_zero"] = Certificate(bool(infinite), "factor 1/2 at each non-degenerate digit of the base kernel")
        certs["kakutani_converges"] = Certificate(True, "every non-degenerate term vanishes")
        certs["dim_nu_star"] = Certificate(_limit(1), "every non-degenerate digit has entropy ln 2")
        certs["dim_nu_r"] = Certificate(density.value, "H_n = N_n ln 2: " + density.reason)
        certs["spectrum_density"] = density
    kern = ProbabilityKernel(
        "uniformized",
        {"base": base.name, **{f"base_{k}": v for k, v in base.params.items()}},
        fn,
        _from_exact(fn),
        certificates=certs,
        length=base.length,
        is_family=base.is_family,
        degenerate_after=base.degenerate_after,
    )
    kern.base = base
    return kern


FAMILIES = {
    "uniform": uniform,
    "constant": constant,
    "inverse_2k": inverse_2k,
    "half_minus_quarter_sqrt": half_minus_quarter_sqrt,
    "half_minus_geometric": half_minus_geometric,
    "alternating_example": alternating_example,
    "dyadic_positions": dyadic_positions,
    "alternating_degenerate": alternating_degenerate,
    "one_minus_inverse_square": one_minus_inverse_square,
    "geometric_shift": geometric_shift,
    "point_mass": point_mass,
    "first_digit_uniform": first_digit_uniform,
}


def make_kernel(name: str, **params) -> ProbabilityKernel:
    try:
        factory = FAMILIES[name]
    except KeyError:
        raise ValidationError(f"unknown kernel family {name!r}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for kernel family {name!r}: {exc}") from None


def kernel_from_json(data: dict) -> ProbabilityKernel:
    family = data.get("family")
    if family:
        params = dict(family.get("params") or {})
        for key in ("j", "bit", "degenerate_parity"):
            if key in params:
                params[key] = int(params[key])
        return make_kernel(family["name"], **params)
    entries = data.get("entries")
    if not entries:
        raise DegenerateKernel("kernel has neither a family nor entries")
    for row in entries:
        for value in row:
            if isinstance(value, float):
                raise ValidationError("float kernel entries are rejected; use 'num/den' strings")
    return table(entries, data.get("default_p0"))
