"""Characteristic function of the random incomplete sum.

``f(t) = prod_k (p0_k + p1_k exp(i (-1)^(k-1) t / q_k))``.

Arguments are carried as exact rationals, optionally as a rational multiple
of pi.  Each factor's angle is reduced exactly (``c/q_k mod 2``) before any
transcendental evaluation, which happens in ``mpmath.iv`` interval
arithmetic, so results are certified enclosures even for astronomically
large ``t`` such as ``2 pi lcm(q_1, ..., q_n)``.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from fractions import Fraction

from mpmath import iv

from .errors import DepthOverflow, InsufficientDepth, PrecisionBudget
from .measures import MeasureModel
from .numerics import IntervalEnclosure, as_rational, iv_from_rational, rational_str
from .sequences import as_sequence

DEFAULT_PREC = 256
MAX_PREC = 4096
PI_UPPER = Fraction(355, 113)  # pi < 355/113
DEFAULT_TOL = Fraction(1, 10**20)


@contextlib.contextmanager
def _ivprec(bits: int):
    saved = iv.prec
    iv.prec = bits
    try:
        yield
    finally:
        iv.prec = saved


@dataclass(frozen=True)
class Argument:
    """``t = coeff`` or ``t = coeff * pi`` with an exact rational ``coeff``."""

    coeff: Fraction
    pi: bool = False

    @classmethod
    def of(cls, t) -> "Argument":
        if isinstance(t, Argument):
            return t
        return cls(as_rational(t), False)

    @classmethod
    def pi_times(cls, c) -> "Argument":
        return cls(as_rational(c), True)

    def __neg__(self):
        return Argument(-self.coeff, self.pi)

    @property
    def abs_upper(self) -> Fraction:
        return abs(self.coeff) * (PI_UPPER if self.pi else 1)

    def to_json(self):
        return {"coeff": rational_str(self.coeff), "times_pi": self.pi}


@dataclass(frozen=True)
class ComplexEnclosure:
    re: IntervalEnclosure
    im: IntervalEnclosure

    @classmethod
    def one(cls):
        return cls(IntervalEnclosure.point(1), IntervalEnclosure.point(0))

    def contains(self, z: complex) -> bool:
        return self.re.contains(Fraction(z.real)) and self.im.contains(Fraction(z.imag))

    def conj(self):
        return ComplexEnclosure(self.re, -self.im)

    def __mul__(self, other: "ComplexEnclosure") -> "ComplexEnclosure":
        return ComplexEnclosure(self.re * other.re - self.im * other.im, self.re * other.im + self.im * other.re)

    def intersects(self, other: "ComplexEnclosure") -> bool:
        return self.re.intersects(other.re) and self.im.intersects(other.im)

    @property
    def width(self) -> Fraction:
        return max(self.re.width, self.im.width)

    def modulus(self) -> IntervalEnclosure:
        """Rational enclosure of ``|z|``."""
        with _ivprec(DEFAULT_PREC):
            re, im = self.re.to_iv(), self.im.to_iv()
            return IntervalEnclosure.from_iv(iv.sqrt(re * re + im * im))

    def to_json(self):
        return {"re": self.re.to_json(), "im": self.im.to_json(), "approx": [float(self.re), float(self.im)]}


def _rat_iv(x):
    if isinstance(x, IntervalEnclosure):
        return x.to_iv()
    return iv_from_rational(x)


def _reduced_turns(arg: Argument, k: int, q: int) -> Fraction | None:
    """Exact ``theta_k / pi`` reduced into [0, 2) for pi-multiples, else None."""
    if not arg.pi:
        return None
    sign = 1 if k % 2 == 1 else -1
    c = sign * arg.coeff / q
    return c - 2 * math.floor(c / 2)


_EXACT_UNIT = {
    Fraction(0): (1, 0),
    Fraction(1, 2): (0, 1),
    Fraction(1): (-1, 0),
    Fraction(3, 2): (0, -1),
}


def _cos_sin(arg: Argument, k: int, q: int):
    turns = _reduced_turns(arg, k, q)
    if turns is not None:
        if turns in _EXACT_UNIT:
            c, s = _EXACT_UNIT[turns]
            return iv.mpf(c), iv.mpf(s)
        x = iv.pi * iv_from_rational(turns)
    else:
        sign = 1 if k % 2 == 1 else -1
        x = iv_from_rational(sign * arg.coeff / q)
    return iv.cos(x), iv.sin(x)


def _half_sin_sq(arg: Argument, k: int, q: int):
    """``sin^2(theta_k / 2)`` as an iv interval."""
    turns = _reduced_turns(arg, k, q)
    if turns is not None:
        if turns == 0:
            return iv.mpf(0)
        if turns == 1:
            return iv.mpf(1)
        s = iv.sin(iv.pi * iv_from_rational(turns / 2))
    else:
        s = iv.sin(iv_from_rational(arg.coeff / q) / 2)
    return s * s


def _tail_eps(model: MeasureModel, arg: Argument, n: int) -> Fraction:
    """Certified ``|t| * sum_{k>n} 1/q_k < 2|t|/q_{n+1}``."""
    return 2 * arg.abs_upper / model.seq.q(n + 1)


def _terms_for(model: MeasureModel, arg: Argument, n_min: int, tol: Fraction) -> int:
    """Smallest ``n >= n_min`` whose tail bound is below tol/4 (bounded by the materializable depth)."""
    n = max(n_min, 1)
    seq = model.seq
    while True:
        try:
            eps = _tail_eps(model, arg, n)
        except (InsufficientDepth, DepthOverflow) as exc:
            raise PrecisionBudget(f"tail bound not below {float(tol):.3g} within sequence depth") from exc
        if eps <= tol / 4 or arg.coeff == 0:
            return n
        n += 1
        if not seq.can_materialize(n + 1):
            raise PrecisionBudget(f"tail bound not below {float(tol):.3g} within sequence depth")


def _exp_minus_one_upper(eps: Fraction) -> Fraction:
    """Rational upper bound on ``e^eps - 1`` for ``0 <= eps <= 1``."""
    if eps == 0:
        return Fraction(0)
    if eps > 1:
        return Fraction(2) ** math.ceil(eps * 2)  # crude; only used for non-certifying tails
    # e^eps - 1 <= eps + eps^2 (valid for eps <= 1)
    return eps + eps * eps


def _product(model: MeasureModel, arg: Argument, n: int):
    re, im = iv.mpf(1), iv.mpf(0)
    kern = model.kernel
    for k in range(1, n + 1):
        q = model.seq.q(k)
        if _reduced_turns(arg, k, q) == 0:
            continue  # whole turns: the factor is exactly 1
        p1 = kern.prob_enclosure(1, k)
        p0 = kern.prob_enclosure(0, k)
        c, s = _cos_sin(arg, k, q)
        fr = _rat_iv(p0) + _rat_iv(p1) * c
        fi = _rat_iv(p1) * s
        re, im = re * fr - im * fi, re * fi + im * fr
    return re, im


def cf_eval(
    model: MeasureModel,
    t,
    n_terms: int = 1,
    tol=DEFAULT_TOL,
    include_tail: bool = True,
    prec: int = DEFAULT_PREC,
) -> ComplexEnclosure:
    """Certified enclosure of ``f(t)``; ``t`` is a rational or an :class:`Argument`.

    With ``include_tail`` the product is extended beyond ``n_terms`` until
    the neglected factors (whose product lies within ``e^eps - 1`` of 1,
    ``eps = 2|t|/q_{n+1}``) fit the tolerance; otherwise the exact finite
    product of ``n_terms`` factors is enclosed.
    """
    arg = Argument.of(t)
    tol = as_rational(tol)
    if arg.coeff == 0:
        return ComplexEnclosure.one()
    n = _terms_for(model, arg, n_terms, tol) if include_tail else n_terms
    while prec <= MAX_PREC:
        with _ivprec(prec):
            re, im = _product(model, arg, n)
            out = ComplexEnclosure(IntervalEnclosure.from_iv(re), IntervalEnclosure.from_iv(im))
        if include_tail:
            eta = _exp_minus_one_upper(_tail_eps(model, arg, n))
            radius = eta * out.modulus().hi
            out = ComplexEnclosure(out.re.widen(radius), out.im.widen(radius))
        if out.width <= tol:
            return out
        prec *= 2
    raise PrecisionBudget(f"could not reach width {float(tol):.3g} at {MAX_PREC} bits")


def cf_modulus(
    model: MeasureModel,
    t,
    n_terms: int = 1,
    tol=DEFAULT_TOL,
    include_tail: bool = True,
    prec: int = DEFAULT_PREC,
) -> IntervalEnclosure:
    """``|f(t)|`` via ``prod sqrt(1 - 4 p0 p1 sin^2(theta_k/2))``; the tail can only shrink it by ``eps``."""
    arg = Argument.of(t)
    tol = as_rational(tol)
    if arg.coeff == 0:
        return IntervalEnclosure.point(1)
    n = _terms_for(model, arg, n_terms, tol) if include_tail else n_terms
    kern = model.kernel
    while prec <= MAX_PREC:
        with _ivprec(prec):
            prod = iv.mpf(1)
            for k in range(1, n + 1):
                p0 = _rat_iv(kern.prob_enclosure(0, k))
                p1 = _rat_iv(kern.prob_enclosure(1, k))
                v = 1 - 4 * p0 * p1 * _half_sin_sq(arg, k, model.seq.q(k))
                lo, hi = v.a, v.b
                if hi < 0:
                    hi = 0
                v = iv.mpf([max(lo, 0), hi])
                prod = prod * iv.sqrt(v)
            out = IntervalEnclosure.from_iv(prod)
        if include_tail:
            eps = _tail_eps(model, arg, n)
            if kern.degenerate_after is None or n < kern.degenerate_after:
                out = IntervalEnclosure(out.lo * max(Fraction(0), 1 - eps), out.hi)
        if out.width <= tol:
            return out
        prec *= 2
    raise PrecisionBudget(f"could not reach width {float(tol):.3g} at {MAX_PREC} bits")


def cf_factor(model: MeasureModel, t, k: int) -> ComplexEnclosure:
    """The single factor ``f_k(t)``."""
    arg = Argument.of(t)
    if _reduced_turns(arg, k, model.seq.q(k)) == 0:
        return ComplexEnclosure.one()
    with _ivprec(DEFAULT_PREC):
        c, s = _cos_sin(arg, k, model.seq.q(k))
        p0 = _rat_iv(model.kernel.prob_enclosure(0, k))
        p1 = _rat_iv(model.kernel.prob_enclosure(1, k))
        return ComplexEnclosure(IntervalEnclosure.from_iv(p0 + p1 * c), IntervalEnclosure.from_iv(p1 * s))


def fs_coefficient(model: MeasureModel, m: int, tol=DEFAULT_TOL, n_terms: int = 1) -> ComplexEnclosure:
    """Fourier-Stieltjes coefficient ``c_m = f(2 pi m)``."""
    if m < 0:
        raise ValueError("m must be >= 0")
    return cf_eval(model, Argument.pi_times(2 * m), n_terms, tol)


def lcm_subsequence(seq, n: int) -> int:
    """``lcm(q_1, ..., q_n)``."""
    seq = as_sequence(seq)
    return math.lcm(*seq.terms(n)) if n else 1


def coefficient_floor() -> IntervalEnclosure:
    """Enclosure of ``(1 - 2 pi/7)(1 - pi/6)``."""
    with _ivprec(DEFAULT_PREC):
        return IntervalEnclosure.from_iv((1 - 2 * iv.pi / 7) * (1 - iv.pi / 6))


@dataclass
class ProbeRow:
    n: int
    k_n: int
    modulus: IntervalEnclosure
    bound: IntervalEnclosure
    terms_used: int

    @property
    def bound_holds(self) -> bool:
        return self.modulus.lo >= self.bound.hi

    def to_json(self):
        return {
            "n": self.n,
            "k_n": str(self.k_n),
            "modulus_lo": float(self.modulus.lo),
            "modulus_hi": float(self.modulus.hi),
            "modulus": self.modulus.to_json(),
            "floor": float(self.bound.mid),
            "bound_holds": self.bound_holds,
            "terms_used": self.terms_used,
        }


@dataclass
class CoefficientProbeReport:
    rows: list

    def to_json(self):
        return [r.to_json() for r in self.rows]


def coefficient_probe(model: MeasureModel, n_range, tol=DEFAULT_TOL) -> CoefficientProbeReport:
    """``|c_{k_n}|`` at ``k_n = lcm(q_1..q_n)`` for each n; factors ``k <= n`` are exactly 1."""
    bound = coefficient_floor()
    rows = []
    for n in n_range:
        k_n = lcm_subsequence(model.seq, n)
        arg = Argument.pi_times(2 * k_n)
        terms = _terms_for(model, arg, n + 1, as_rational(tol))
        mod = cf_modulus(model, arg, terms, tol)
        rows.append(ProbeRow(n, k_n, mod, bound, terms))
    return CoefficientProbeReport(rows)


def l_lower_bound(model: MeasureModel, probe: CoefficientProbeReport) -> dict:
    """Certified lower bound for ``limsup |f(t)|`` and the ``lcm/q_{n+1}`` ratio trend."""
    if not probe.rows:
        raise ValueError("probe is empty")
    best = max(probe.rows, key=lambda r: r.modulus.lo)
    lower = IntervalEnclosure(best.modulus.lo, best.modulus.lo)
    ratios = []
    for row in probe.rows:
        ratio = Fraction(row.k_n, model.seq.q(row.n + 1))
        ratios.append({"n": row.n, "ratio": rational_str(ratio) if ratio.denominator < 10**30 else None, "approx": float(ratio)})
    rule = model.seq.rule
    divisible = all(model.seq.q(k + 1) % model.seq.q(k) == 0 for k in range(1, max(r.n for r in probe.rows) + 1))
    if rule is not None and rule.kind in ("sylvester", "power"):
        condition = {
            "status": "holds",
            "basis": "analytic_certificate",
            "reason": "q_k divides q_(k+1), so lcm(q_1..q_n) = q_n and q_n/q_(n+1) <= 1/(q_n+1) -> 0",
        }
    else:
        decreasing = all(b["approx"] < a["approx"] for a, b in zip(ratios, ratios[1:]))
        condition = {
            "status": "undetermined",
            "basis": "numeric_trend",
            "reason": "ratio trend " + ("decreasing" if decreasing else "not monotone decreasing") + " over probed n",
            "divisibility_chain": divisible,
        }
    return {
        "lower_bound": lower.to_json(),
        "lower_bound_approx": float(lower.lo),
        "from_n": best.n,
        "ratios": ratios,
        "L_equals_1_condition": condition,
    }
