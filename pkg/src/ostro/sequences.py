"""Denominator sequences ``q_1, q_2, ...`` with ``q_{k+1} >= q_k (q_k + 1)``.

Covers the built-in generator rules, the greedy expansion of a rational,
exact reconstruction of alternating partial sums, and the elementary
growth/tail properties of such sequences as checkable predicates.
"""

from __future__ import annotations

import math
import random
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import gmpy2
import mpmath

from .errors import DepthOverflow, InsufficientDepth, InvalidSequence, NonTerminatingBudget, NotInRange
from .numerics import LOG_PREC_BITS, IntervalEnclosure, as_rational, enclose_tail

DEFAULT_MAX_EXACT_DEPTH = 20

# Miller-Rabin with the first 13 prime bases is deterministic below this bound.
DETERMINISTIC_MR_LIMIT = 3_317_044_064_679_887_385_961_981
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
DEFAULT_MR_ROUNDS = 24

_SIEVE_WINDOW = 4096
_SMALL_PRIMES_LIMIT = 20_000


def _small_primes(limit: int) -> list[int]:
    sieve = bytearray([1]) * (limit + 1)
    sieve[0:2] = b"\x00\x00"
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(range(p * p, limit + 1, p)))
    return [i for i in range(limit + 1) if sieve[i]]


_SMALL_PRIMES = _small_primes(_SMALL_PRIMES_LIMIT)


def _mr_round(n, d, s, a) -> bool:
    x = gmpy2.powmod(a, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(s - 1):
        x = gmpy2.powmod(x, 2, n)
        if x == n - 1:
            return True
    return False


def miller_rabin(n: int, rounds: int = DEFAULT_MR_ROUNDS, seed: int = 0) -> bool:
    """Miller-Rabin test: deterministic below ``DETERMINISTIC_MR_LIMIT``.

    Above the limit the 13 fixed bases are followed by ``rounds`` bases drawn
    from a PRNG seeded by ``(seed, n)``, so the verdict is reproducible.
    """
    if n < 2:
        return False
    for p in _SMALL_PRIMES[:50]:
        if n == p:
            return True
        if n % p == 0:
            return False
    nz = gmpy2.mpz(n)
    d, s = nz - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        if not _mr_round(nz, d, s, gmpy2.mpz(a)):
            return False
    if n < DETERMINISTIC_MR_LIMIT:
        return True
    rng = random.Random(f"{seed}:{n}")
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        if not _mr_round(nz, d, s, gmpy2.mpz(a)):
            return False
    return True


def next_prime_at_least(n: int, rounds: int = DEFAULT_MR_ROUNDS) -> int:
    """Smallest prime ``>= n`` (sieved windows, then Miller-Rabin)."""
    if n <= 2:
        return 2
    base = n
    while True:
        window = bytearray([1]) * _SIEVE_WINDOW
        for p in _SMALL_PRIMES:
            start = (-base) % p
            # keep p itself when it falls in the window
            if base + start == p:
                start += p
            if start < _SIEVE_WINDOW:
                window[start::p] = bytearray(len(range(start, _SIEVE_WINDOW, p)))
        for offset in range(_SIEVE_WINDOW):
            if not window[offset]:
                continue
            cand = base + offset
            if cand < 2:
                continue
            nz = gmpy2.mpz(cand)
            # cheap base-2 Fermat filter before the full test
            if gmpy2.powmod(2, nz - 1, nz) != 1:
                continue
            if miller_rabin(cand, rounds):
                return cand
        base += _SIEVE_WINDOW


_PRIME_CHAIN_CACHE: dict[tuple[int, int], list[int]] = {}
_PRIME_CHAIN_LOCK = threading.Lock()


def _prime_chain_terms(p1: int, depth: int, rounds: int) -> list[int]:
    key = (p1, rounds)
    with _PRIME_CHAIN_LOCK:
        chain = _PRIME_CHAIN_CACHE.setdefault(key, [p1])
        while len(chain) < depth:
            p = chain[-1]
            chain.append(next_prime_at_least(p * (p + 1), rounds))
        return chain[:depth]


@dataclass(frozen=True)
class GeneratorRule:
    """How to materialize further denominators.

    ``kind`` is one of ``sylvester`` (params ``q1``), ``power`` (``s``),
    ``prime_chain`` (``p1``, ``mr_rounds``) or ``explicit`` (``terms``).
    """

    kind: str
    params: tuple = field(default=())

    KINDS = ("sylvester", "power", "prime_chain", "explicit")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if isinstance(self.params, dict):
            object.__setattr__(self, "params", tuple(sorted(self.params.items())))

    @classmethod
    def sylvester(cls, q1: int = 1) -> "GeneratorRule":
        if q1 < 1:
            raise ValueError("q1 must be >= 1")
        return cls("sylvester", {"q1": int(q1)})

    @classmethod
    def power(cls, s: int = 2) -> "GeneratorRule":
        if s < 2:
            raise ValueError("power rule needs s >= 2")
        return cls("power", {"s": int(s)})

    @classmethod
    def prime_chain(cls, p1: int = 2, mr_rounds: int = DEFAULT_MR_ROUNDS) -> "GeneratorRule":
        return cls("prime_chain", {"p1": int(p1), "mr_rounds": int(mr_rounds)})

    @classmethod
    def explicit(cls, terms) -> "GeneratorRule":
        return cls("explicit", {"terms": tuple(int(t) for t in terms)})

    def param(self, name, default=None):
        return dict(self.params).get(name, default)

    def terms(self, depth: int) -> list[int]:
        """First ``depth`` terms as exact integers."""
        if depth < 0:
            raise ValueError("depth must be >= 0")
        if self.kind == "sylvester":
            out, q = [], self.param("q1")
            for _ in range(depth):
                out.append(q)
                q = q * (q + 1)
            return out
        if self.kind == "power":
            s = self.param("s")
            return [s ** ((1 << k) - 1) for k in range(1, depth + 1)]
        if self.kind == "prime_chain":
            if depth == 0:
                return []
            return _prime_chain_terms(self.param("p1"), depth, self.param("mr_rounds"))
        terms = self.param("terms")
        if depth > len(terms):
            raise InsufficientDepth(f"explicit rule has only {len(terms)} terms, {depth} requested")
        return list(terms[:depth])

    @property
    def max_terms(self):
        return len(self.param("terms")) if self.kind == "explicit" else None

    def primality_info(self) -> dict | None:
        if self.kind != "prime_chain":
            return None
        return {
            "method": "miller-rabin",
            "deterministic_below": str(DETERMINISTIC_MR_LIMIT),
            "fixed_bases": list(_MR_BASES),
            "extra_random_rounds": self.param("mr_rounds"),
        }

    def to_json(self) -> dict:
        params = {}
        for key, value in self.params:
            if key == "terms":
                params[key] = [str(t) for t in value]
            else:
                params[key] = value
        return {"kind": self.kind, "params": params}


def _check_pair(prev: int, nxt: int, index: int):
    if nxt < prev * (prev + 1):
        raise InvalidSequence(index)


class OstroSequence:
    """A validated denominator sequence, materialized lazily.

    ``q(k)`` is 1-indexed.  Terms up to ``max_exact_depth`` are exact
    integers, memoized in an append-only cache; ``log_q(k)`` continues past
    that depth for rules with a closed-form log recurrence.
    """

    def __init__(self, prefix=(), rule: GeneratorRule | None = None, max_exact_depth: int = DEFAULT_MAX_EXACT_DEPTH):
        terms = [int(as_rational(q)) if not isinstance(q, int) else q for q in prefix]
        for i, q in enumerate(terms):
            if q < 1:
                raise InvalidSequence(i + 1, f"denominator q[{i + 1}] = {q} is not a positive integer")
            if i:
                _check_pair(terms[i - 1], q, i + 1)
        if rule is not None and terms:
            expected = rule.terms(min(len(terms), rule.max_terms or len(terms)))
            if terms[: len(expected)] != expected:
                raise InvalidSequence(1, "prefix does not agree with the generator rule")
        self.rule = rule
        self.max_exact_depth = max_exact_depth
        self._terms = terms
        self._recip_prefix = [Fraction(0)]
        self._parity_prefix = ([Fraction(0)], [Fraction(0)])  # (even-index, odd-index) sums
        self._lock = threading.Lock()

    # -- construction helpers ------------------------------------------------

    @classmethod
    def from_rule(cls, rule: GeneratorRule, depth: int = 0, max_exact_depth: int = DEFAULT_MAX_EXACT_DEPTH):
        seq = cls((), rule, max_exact_depth)
        if depth:
            seq.materialize(depth)
        return seq

    # -- materialization -----------------------------------------------------

    @property
    def depth_limit(self) -> int:
        if self.rule is None:
            return len(self._terms)
        if self.rule.max_terms is not None:
            return min(self.rule.max_terms, self.max_exact_depth)
        return self.max_exact_depth

    @property
    def materialized(self) -> int:
        return len(self._terms)

    def materialize(self, depth: int) -> None:
        if depth <= len(self._terms):
            return
        if self.rule is None or (self.rule.max_terms is not None and depth > self.rule.max_terms):
            raise InsufficientDepth(f"sequence has {len(self._terms)} terms, {depth} requested")
        if depth > self.max_exact_depth:
            raise DepthOverflow(f"depth {depth} exceeds max_exact_depth={self.max_exact_depth}")
        with self._lock:
            if depth > len(self._terms):
                self._terms = self.rule.terms(depth)

    def q(self, k: int) -> int:
        if k < 1:
            raise IndexError("denominators are 1-indexed")
        if k > len(self._terms):
            self.materialize(k)
        return self._terms[k - 1]

    def terms(self, n: int | None = None) -> tuple[int, ...]:
        if n is None:
            return tuple(self._terms)
        self.materialize(n)
        return tuple(self._terms[:n])

    def __iter__(self) -> Iterator[int]:
        return iter(self._terms)

    def __len__(self):
        return len(self._terms)

    def __repr__(self):
        shown = ", ".join(str(q) if q < 10**12 else f"~1e{len(str(q)) - 1}" for q in self._terms[:6])
        more = ", ..." if len(self._terms) > 6 or self.rule else ""
        return f"OstroSequence({shown}{more})"

    def can_materialize(self, k: int) -> bool:
        return k <= len(self._terms) or k <= self.depth_limit

    # -- exact sums ----------------------------------------------------------

    def _extend_sums(self, n: int):
        self.materialize(n)
        with self._lock:
            rp = self._recip_prefix
            even, odd = self._parity_prefix
            while len(rp) <= n:
                k = len(rp)
                a = Fraction(1, self._terms[k - 1])
                rp.append(rp[-1] + a)
                if k % 2 == 0:
                    even.append(even[-1] + a)
                    odd.append(odd[-1])
                else:
                    even.append(even[-1])
                    odd.append(odd[-1] + a)

    def recip_sum(self, start: int, stop: int) -> Fraction:
        """``sum_{i=start+1}^{stop} 1/q_i`` exactly."""
        if stop <= start:
            return Fraction(0)
        self._extend_sums(stop)
        return self._recip_prefix[stop] - self._recip_prefix[start]

    def parity_recip_sum(self, start: int, stop: int, parity: int) -> Fraction:
        """Like :meth:`recip_sum` restricted to indices ``i`` with ``i % 2 == parity``."""
        if stop <= start:
            return Fraction(0)
        self._extend_sums(stop)
        table = self._parity_prefix[0] if parity == 0 else self._parity_prefix[1]
        return table[stop] - table[start]

    def alternating_sum(self, n: int) -> Fraction:
        """``sum_{k<=n} (-1)^(k+1)/q_k``."""
        if n == 0:
            return Fraction(0)
        self._extend_sums(n)
        return self._parity_prefix[1][n] - self._parity_prefix[0][n]

    # -- logarithms ----------------------------------------------------------

    def log_q(self, k: int):
        """``ln q_k`` as an mpmath float; continues past the exact depth when the rule allows."""
        if k <= len(self._terms) or (self.rule is not None and k <= self.depth_limit):
            q = self.q(k)
            with mpmath.workprec(LOG_PREC_BITS + 16):
                return +mpmath.log(mpmath.mpf(q))
        if self.rule is None or self.rule.kind == "explicit":
            raise InsufficientDepth(f"no term or log recurrence available at index {k}")
        with mpmath.workprec(LOG_PREC_BITS + 16):
            if self.rule.kind == "power":
                return mpmath.mpf((1 << k) - 1) * mpmath.log(self.rule.param("s"))
            # sylvester: ln q_{j+1} = 2 ln q_j + ln(1 + 1/q_j); the prime chain
            # follows the same recurrence to relative accuracy ~ ln(q)/q^2
            j = self.depth_limit
            value = mpmath.log(mpmath.mpf(self.q(j)))
            while j < k:
                value = 2 * value + mpmath.log1p(mpmath.exp(-value))
                j += 1
            return value

    def log_is_exact(self, k: int) -> bool:
        """False when ``log_q(k)`` comes from an approximate recurrence (prime chain beyond exact depth)."""
        if k <= self.depth_limit:
            return True
        return self.rule is not None and self.rule.kind in ("power", "sylvester")

    # -- serialization -------------------------------------------------------

    def to_json(self, depth: int | None = None) -> dict:
        terms = self.terms(depth) if depth is not None else self.terms()
        rule = self.rule.to_json() if self.rule else {"kind": "explicit", "params": {}}
        out = {"kind": rule["kind"], "params": rule["params"], "prefix": [str(q) for q in terms]}
        if self.rule is not None and self.rule.primality_info():
            out["primality"] = self.rule.primality_info()
        return out

    @classmethod
    def from_json(cls, data: dict, max_exact_depth: int = DEFAULT_MAX_EXACT_DEPTH) -> "OstroSequence":
        kind = data.get("kind", "explicit")
        params = data.get("params", {}) or {}
        prefix = [int(q) for q in data.get("prefix", [])]
        if kind == "explicit":
            terms = [int(t) for t in params.get("terms", prefix)]
            return cls(terms, None, max_exact_depth=max(max_exact_depth, len(terms)))
        if kind == "sylvester":
            rule = GeneratorRule.sylvester(int(params.get("q1", 1)))
        elif kind == "power":
            rule = GeneratorRule.power(int(params.get("s", 2)))
        elif kind == "prime_chain":
            rule = GeneratorRule.prime_chain(int(params.get("p1", 2)), int(params.get("mr_rounds", DEFAULT_MR_ROUNDS)))
        else:
            raise InvalidSequence(0, f"unknown sequence kind {kind!r}")
        return cls(prefix, rule, max_exact_depth)


def as_sequence(seq) -> OstroSequence:
    if isinstance(seq, OstroSequence):
        return seq
    return OstroSequence(list(seq))


def generate(rule: GeneratorRule, depth: int, max_exact_depth: int = DEFAULT_MAX_EXACT_DEPTH) -> OstroSequence:
    """First ``depth`` terms of ``rule``; ``DepthOverflow`` past ``max_exact_depth``."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if depth > max_exact_depth:
        raise DepthOverflow(f"depth {depth} exceeds max_exact_depth={max_exact_depth}")
    return OstroSequence.from_rule(rule, depth, max_exact_depth)


def reconstruct(seq, n: int) -> Fraction:
    """Exact alternating partial sum of the first ``n`` terms."""
    return as_sequence(seq).alternating_sum(n)


# -- expansion ---------------------------------------------------------------


@dataclass(frozen=True)
class ExpansionState:
    step: int
    q_so_far: tuple
    beta: Fraction
    terminated: bool


def expand(x, max_terms: int = 64, strict: bool = True):
    """Greedy expansion of a rational ``x`` in ``(0, 1]``.

    Runs ``1 = q_1 x + b_1`` and ``q_k...q_1 = q_{k+1} b_k + b_{k+1}``.
    Returns ``(sequence, terminated, trace)``.  When ``max_terms`` is reached
    with a non-zero remainder, raises ``NonTerminatingBudget`` carrying the
    partial result (or returns it when ``strict`` is False).
    """
    x = as_rational(x)
    if not (0 < x <= 1):
        raise NotInRange(f"x = {x} is not in (0, 1]")
    qs: list[int] = []
    trace: list[ExpansionState] = []
    numerator_product = 1  # q_k ... q_1 (1 before the first step)
    beta = x  # divisor of the current step; first step divides 1 by x
    while len(qs) < max_terms:
        q_next = numerator_product // beta
        remainder = numerator_product - q_next * beta
        qs.append(int(q_next))
        numerator_product *= int(q_next)
        beta = remainder
        done = remainder == 0
        trace.append(ExpansionState(len(qs), tuple(qs), remainder, done))
        if done:
            break
    terminated = bool(trace) and trace[-1].terminated
    seq = OstroSequence(qs)
    if not terminated and strict:
        raise NonTerminatingBudget((seq, False, trace))
    return seq, terminated, trace


def is_canonical(prefix) -> bool:
    """True when the prefix is the expansion-terminating form of its sum.

    The last defining inequality must be strict: ``(1, 2)`` sums to 1/2 whose
    expansion is ``(2)``.
    """
    terms = list(prefix)
    if not terms:
        return False
    if len(terms) == 1:
        return terms[0] >= 1
    return terms[-1] > terms[-2] * (terms[-2] + 1)


# -- property suite ----------------------------------------------------------

PROPERTY_NAMES = {
    1: "q_n/q_(n+1) <= 1/(q_n+1)",
    2: "q_n/q_(n+1) <= 1/(n+1)  (ratio tends to 0)",
    3: "q_n >= n!",
    4: "q_(n+1) > q_n^2 and q_(n+1) > q_1^(2^n)",
    5: "q_(n+1) > q_2^(2^(n-1)) >= 2^(2^(n-1))  (n >= 2)",
    6: "r_n < 2/q_(n+1)",
    7: "products/next-term bounds: q_1...q_n/q_(n+1) bounded by q_1/(q_2+1+...), 1/(q_1+1+...), 2/7 (n>=3)",
    8: "a_n = 1/q_n > r_n",
}


@dataclass
class PropertyCheck:
    prop: int
    index: int
    status: str  # "pass" | "fail" | "undecided"
    detail: str = ""

    def to_json(self):
        return {"property": self.prop, "n": self.index, "status": self.status, "detail": self.detail}


@dataclass
class ValidationReport:
    depth: int
    checks: list = field(default_factory=list)

    def by_property(self) -> dict:
        out = {}
        for c in self.checks:
            out.setdefault(c.prop, []).append(c)
        return out

    def property_passes(self, prop: int) -> bool:
        return all(c.status != "fail" for c in self.checks if c.prop == prop)

    @property
    def all_pass(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if c.status == "fail"]

    def summary(self) -> dict:
        out = {}
        for prop in sorted(PROPERTY_NAMES):
            rows = [c for c in self.checks if c.prop == prop]
            out[str(prop)] = {
                "statement": PROPERTY_NAMES[prop],
                "pass": sum(c.status == "pass" for c in rows),
                "fail": sum(c.status == "fail" for c in rows),
                "undecided": sum(c.status == "undecided" for c in rows),
            }
        return out

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "all_pass": self.all_pass,
            "properties": self.summary(),
            "failures": [c.to_json() for c in self.failures],
        }


def _tail_upper(seq: OstroSequence, n: int, d: int) -> IntervalEnclosure | None:
    """Tightest certified enclosure of r_n from the first d terms, or None if n >= d."""
    if n >= d:
        return None
    return enclose_tail(seq, n, d - n - 1)


def validate(seq, depth: int | None = None) -> ValidationReport:
    """Check the elementary denominator properties at every decidable index.

    Raises ``InvalidSequence`` at the first index where the defining
    inequality fails.
    """
    if not isinstance(seq, OstroSequence):
        seq = OstroSequence(list(seq))  # raises InvalidSequence
    d = depth if depth is not None else len(seq)
    seq.materialize(d)
    if d < 2:
        raise ValueError("validation needs at least two terms")
    q = [None] + list(seq.terms(d))  # 1-indexed
    report = ValidationReport(depth=d)
    add = report.checks.append

    def mark(prop, n, ok, detail=""):
        add(PropertyCheck(prop, n, "pass" if ok else "fail", detail))

    factorial = 1
    for n in range(1, d + 1):
        factorial *= n
        mark(3, n, q[n] >= factorial)
        if n < d:
            # q_n/q_{n+1} <= 1/(q_n+1)  <=>  q_n (q_n+1) <= q_{n+1}
            mark(1, n, q[n] * (q[n] + 1) <= q[n + 1])
            mark(2, n, q[n] * (n + 1) <= q[n + 1])
            mark(4, n, q[n + 1] > q[n] ** 2 and q[n + 1] > q[1] ** (1 << n))
            if n >= 2:
                mark(5, n, q[n + 1] > q[2] ** (1 << (n - 1)) >= 2 ** (1 << (n - 1)))

    # product bounds
    prod = 1
    for n in range(1, d):
        prod *= q[n]
        ratio = Fraction(prod, q[n + 1])
        ok = True
        if n >= 2:
            denom = Fraction(q[2] + 1)
            partial = Fraction(1)
            for j in range(2, n):
                partial /= q[j]
                denom += partial
            ok &= ratio <= q[1] / denom
            ok &= ratio < Fraction(1, q[1] + 1)
        denom1 = Fraction(q[1] + 1)
        partial = Fraction(1)
        for j in range(1, n):
            partial /= q[j]
            denom1 += partial
        ok &= ratio <= 1 / denom1
        if n >= 3:
            ok &= ratio <= Fraction(2, 7)
        mark(7, n, ok)

    # tail properties: certified only where at least one further term bounds the tail
    for n in range(1, d + 1):
        enc = _tail_upper(seq, n, d) if n <= d - 2 else None
        if enc is None:
            add(PropertyCheck(6, n, "undecided", "not enough terms to bound the tail independently"))
        else:
            mark(6, n, enc.hi < Fraction(2, q[n + 1]))
        enc8 = _tail_upper(seq, n, d)
        if enc8 is None:
            add(PropertyCheck(8, n, "undecided", "tail not materialized"))
        elif enc8.hi < Fraction(1, q[n]):
            mark(8, n, True)
        elif enc8.lo >= Fraction(1, q[n]):
            mark(8, n, False)
        else:
            add(PropertyCheck(8, n, "undecided", "enclosure straddles 1/q_n"))
    return report
