"""Exact rationals, certified interval enclosures and log-space magnitudes.

Irrational quantities (series tails, CDF values, characteristic function
values) never travel as bare floats: they are carried as an
:class:`IntervalEnclosure` with rational endpoints that provably contain the
true value.  Quantities whose exact value is astronomically large or small
(e.g. ``(m+1)**n * (4m/q[n+1])**alpha``) are carried as a
:class:`LogMagnitude`.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable

import mpmath
from mpmath import libmp

from .errors import InsufficientDepth, ValidationError

BigRational = Fraction

LOG_PREC_BITS = int(os.environ.get("OSTRO_LOG_PREC_BITS", "128"))


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions and ``"num/den"`` strings to a Fraction.

    Floats are rejected: an exact quantity must not silently inherit binary
    rounding.
    """
    if isinstance(value, bool):
        raise ValidationError(f"not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            if "/" in text:
                num, den = text.split("/")
                return Fraction(int(num), int(den))
            if any(c in text for c in ".eE"):
                # decimal literals are exact in base 10
                return Fraction(text)
            return Fraction(int(text))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"not a rational: {value!r}") from exc
    raise ValidationError(f"not an exact rational: {value!r}")


def rational_str(x: Fraction) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def rational_pair(x: Fraction) -> dict:
    x = Fraction(x)
    return {"num": str(x.numerator), "den": str(x.denominator)}


def mpf_to_fraction(x) -> Fraction:
    """Exact value of an mpmath ``mpf`` (or raw mpf tuple) as a Fraction."""
    raw = x if isinstance(x, tuple) else x._mpf_
    p, q = libmp.to_rational(raw)
    return Fraction(int(p), int(q))


@dataclass(frozen=True)
class IntervalEnclosure:
    """Closed interval ``[lo, hi]`` with exact rational endpoints."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = as_rational(self.lo), as_rational(self.hi)
        if lo > hi:
            raise ValueError(f"empty enclosure [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x) -> "IntervalEnclosure":
        x = as_rational(x)
        return cls(x, x)

    @classmethod
    def from_iv(cls, x) -> "IntervalEnclosure":
        """Rational enclosure of an ``mpmath.iv`` interval."""
        lo, hi = x._mpi_
        return cls(mpf_to_fraction(lo), mpf_to_fraction(hi))

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    def contains(self, x) -> bool:
        if isinstance(x, IntervalEnclosure):
            return self.lo <= x.lo and x.hi <= self.hi
        x = as_rational(x)
        return self.lo <= x <= self.hi

    def intersects(self, other: "IntervalEnclosure") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def certainly_below(self, other) -> bool:
        """True when every point of ``self`` is strictly below every point of ``other``."""
        if isinstance(other, IntervalEnclosure):
            return self.hi < other.lo
        return self.hi < as_rational(other)

    def certainly_above(self, other) -> bool:
        if isinstance(other, IntervalEnclosure):
            return self.lo > other.hi
        return self.lo > as_rational(other)

    def _coerce(self, other):
        if isinstance(other, IntervalEnclosure):
            return other
        return IntervalEnclosure.point(other)

    def __add__(self, other):
        other = self._coerce(other)
        return IntervalEnclosure(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __neg__(self):
        return IntervalEnclosure(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        products = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return IntervalEnclosure(min(products), max(products))

    __rmul__ = __mul__

    def widen(self, radius) -> "IntervalEnclosure":
        radius = as_rational(radius)
        return IntervalEnclosure(self.lo - radius, self.hi + radius)

    def hull(self, other: "IntervalEnclosure") -> "IntervalEnclosure":
        return IntervalEnclosure(min(self.lo, other.lo), max(self.hi, other.hi))

    def to_iv(self):
        from mpmath import iv

        return iv.mpf([_round_down(self.lo), _round_up(self.hi)])

    def to_json(self) -> dict:
        return {"lo": rational_str(self.lo), "hi": rational_str(self.hi)}

    def to_pair_json(self) -> dict:
        return {"lo": rational_pair(self.lo), "hi": rational_pair(self.hi)}

    def __float__(self):
        return float(self.mid)

    def __repr__(self):
        return f"IntervalEnclosure([{float(self.lo):.12g}, {float(self.hi):.12g}])"


def _round_down(x: Fraction, prec: int = 256):
    with mpmath.workprec(prec):
        return mpmath.mpf(libmp.from_rational(x.numerator, x.denominator, prec, libmp.round_floor))


def _round_up(x: Fraction, prec: int = 256):
    with mpmath.workprec(prec):
        return mpmath.mpf(libmp.from_rational(x.numerator, x.denominator, prec, libmp.round_ceiling))


def iv_from_rational(x: Fraction):
    """Tight ``mpmath.iv`` interval around an exact rational at the current iv precision."""
    from mpmath import iv

    x = as_rational(x)
    if x.denominator == 1:
        return iv.mpf(x.numerator)
    return iv.mpf(x.numerator) / iv.mpf(x.denominator)


def enclose_tail(seq, n: int, extra_terms: int = 0) -> IntervalEnclosure:
    """Enclosure of ``r_n = sum_{i>n} 1/q_i``.

    The first ``extra_terms`` reciprocals after index ``n`` are summed
    exactly and the rest is bounded by ``r_{n+e} < 2/q_{n+e+1}``.
    """
    if n < 0 or extra_terms < 0:
        raise ValueError("n and extra_terms must be non-negative")
    stop = n + extra_terms
    try:
        q_next = seq.q(stop + 1)
    except InsufficientDepth:
        raise
    partial = seq.recip_sum(n, stop)
    return IntervalEnclosure(partial, partial + Fraction(2, q_next))


@dataclass(frozen=True)
class LogMagnitude:
    """A real number stored as ``sign * exp(log_abs)``.

    ``log_abs`` is an mpmath float at :data:`LOG_PREC_BITS` bits; zero is
    represented by ``sign == 0`` and ``log_abs == -inf``.
    """

    sign: int
    log_abs: mpmath.mpf

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or 1")
        with mpmath.workprec(LOG_PREC_BITS):
            value = mpmath.ninf if self.sign == 0 else mpmath.mpf(self.log_abs)
        object.__setattr__(self, "log_abs", value)

    @classmethod
    def one(cls) -> "LogMagnitude":
        return cls(1, mpmath.mpf(0))

    @classmethod
    def zero(cls) -> "LogMagnitude":
        return cls(0, mpmath.ninf)

    @classmethod
    def of(cls, x) -> "LogMagnitude":
        """Log form of an exact int/Fraction (works for numbers far beyond float range)."""
        x = as_rational(x)
        if x == 0:
            return cls.zero()
        sign = 1 if x > 0 else -1
        x = abs(x)
        with mpmath.workprec(LOG_PREC_BITS + 16):
            value = mpmath.log(mpmath.mpf(x.numerator)) - mpmath.log(mpmath.mpf(x.denominator))
        return cls(sign, value)

    @classmethod
    def from_log(cls, log_abs, sign: int = 1) -> "LogMagnitude":
        return cls(sign, log_abs)

    def __mul__(self, other: "LogMagnitude") -> "LogMagnitude":
        if self.sign == 0 or other.sign == 0:
            return LogMagnitude.zero()
        with mpmath.workprec(LOG_PREC_BITS):
            return LogMagnitude(self.sign * other.sign, self.log_abs + other.log_abs)

    def __truediv__(self, other: "LogMagnitude") -> "LogMagnitude":
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogMagnitude")
        if self.sign == 0:
            return LogMagnitude.zero()
        with mpmath.workprec(LOG_PREC_BITS):
            return LogMagnitude(self.sign * other.sign, self.log_abs - other.log_abs)

    def __pow__(self, alpha) -> "LogMagnitude":
        if self.sign < 0:
            raise ValueError("real powers of negative magnitudes are not defined")
        if self.sign == 0:
            return LogMagnitude.zero() if alpha > 0 else LogMagnitude.one()
        with mpmath.workprec(LOG_PREC_BITS):
            a = mpmath.mpf(alpha.numerator) / alpha.denominator if isinstance(alpha, Fraction) else mpmath.mpf(alpha)
            return LogMagnitude(1, self.log_abs * a)

    def __lt__(self, other: "LogMagnitude") -> bool:
        return self._key() < other._key()

    def _key(self):
        if self.sign == 0:
            return (0, 0)
        return (self.sign, self.sign * self.log_abs)

    @property
    def log10_abs(self):
        with mpmath.workprec(LOG_PREC_BITS):
            return self.log_abs / mpmath.log(10)

    def to_float(self) -> float:
        """Nearest float (0.0 / inf when outside float range)."""
        if self.sign == 0:
            return 0.0
        with mpmath.workprec(LOG_PREC_BITS):
            return self.sign * float(mpmath.exp(self.log_abs))

    def to_json(self) -> dict:
        if self.sign == 0:
            return {"sign": 0, "log_abs": "-inf", "approx": 0.0}
        return {
            "sign": self.sign,
            "log_abs": mpmath.nstr(self.log_abs, 30),
            "log10_abs": mpmath.nstr(self.log10_abs, 20),
            "approx": self.to_float(),
        }

    def __repr__(self):
        if self.sign == 0:
            return "LogMagnitude(0)"
        return f"LogMagnitude({'+' if self.sign > 0 else '-'}exp({mpmath.nstr(self.log_abs, 12)}))"


def log_product(factors: Iterable[LogMagnitude]) -> LogMagnitude:
    result = LogMagnitude.one()
    for factor in factors:
        result = result * factor
    return result


def log_float(x) -> float:
    """Natural log of an arbitrarily large positive int/Fraction, as a float."""
    x = as_rational(x)
    if x <= 0:
        raise ValueError("log of a non-positive number")
    num, den = x.numerator, x.denominator
    return _int_log(num) - _int_log(den)


def _int_log(n: int) -> float:
    bits = n.bit_length()
    if bits < 1000:
        return math.log(n)
    shift = bits - 64
    return math.log(n >> shift) + shift * math.log(2)
