"""Cylinder intervals of incomplete sums.

For a word ``c_1..c_m`` the cylinder interval is

    [s_m - sum_{even j>m} 1/q_j,  s_m + sum_{odd j>m} 1/q_j],
    s_m = sum_{k<=m} (-1)^(k-1) c_k / q_k.

Both tails are infinite, so endpoints are enclosures.  Every endpoint is
split at a common cut ``N``: an exact *core* (terms ``j <= N``) plus a
tail in ``[0, 2/q_{N+1})``.  Comparing two cylinders at the same cut lets
the tails cancel exactly, which is how nesting and lengths are certified.

Value order equals the order of the "shifted" word ``eta_k = c_k`` (odd k),
``1 - c_k`` (even k), because ``1/q_k`` exceeds the whole tail after it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .errors import BudgetExceeded, DepthOverflow, InsufficientDepth, Undecidable
from .numerics import IntervalEnclosure, as_rational, enclose_tail, rational_pair
from .sequences import OstroSequence, as_sequence

COVER_RANK_LIMIT = 20
DEFAULT_WIDTH = Fraction(1, 10**30)
REFINE_RETRIES = 6


def _word(bits) -> tuple[int, ...]:
    if isinstance(bits, str):
        bits = [int(c) for c in bits]
    out = tuple(int(b) for b in bits)
    if any(b not in (0, 1) for b in out):
        raise ValueError(f"word must be binary: {bits!r}")
    return out


def word_str(word) -> str:
    return "".join(str(b) for b in word)


def to_shifted(word) -> tuple[int, ...]:
    """Map a digit word to its value-ordered (shifted) form; the map is an involution."""
    return tuple(b if k % 2 == 1 else 1 - b for k, b in enumerate(word, start=1))


from_shifted = to_shifted


def partial_sum(seq, word) -> Fraction:
    """``s_m = sum (-1)^(k-1) c_k / q_k`` over the word."""
    seq = as_sequence(seq)
    total = Fraction(0)
    for k, c in enumerate(_word(word), start=1):
        if c:
            total += Fraction(1 if k % 2 else -1, seq.q(k))
    return total


def cut_for_width(seq: OstroSequence, m: int, width_target) -> int:
    """Smallest cut ``N >= m`` with ``2/q_{N+1} <= width_target``."""
    width_target = as_rational(width_target)
    if width_target <= 0:
        raise ValueError("width_target must be positive")
    n = m
    while True:
        try:
            q_next = seq.q(n + 1)
        except (InsufficientDepth, DepthOverflow) as exc:
            raise InsufficientDepth(
                f"cannot reach width {float(width_target):.3g} at rank {m}: sequence exhausted at {n}"
            ) from exc
        if Fraction(2, q_next) <= width_target:
            return n
        n += 1


@dataclass(frozen=True)
class Cylinder:
    seq: OstroSequence
    word: tuple
    cut: int
    left_core: Fraction
    right_core: Fraction
    tail_bound: Fraction  # each parity tail beyond the cut lies in [0, tail_bound)

    @property
    def rank(self) -> int:
        return len(self.word)

    @property
    def left(self) -> IntervalEnclosure:
        return IntervalEnclosure(self.left_core - self.tail_bound, self.left_core)

    @property
    def right(self) -> IntervalEnclosure:
        return IntervalEnclosure(self.right_core, self.right_core + self.tail_bound)

    @property
    def base_point(self) -> Fraction:
        return partial_sum(self.seq, self.word)

    @property
    def hull(self) -> IntervalEnclosure:
        """Certified superset of the cylinder interval."""
        return IntervalEnclosure(self.left.lo, self.right.hi)

    @property
    def core(self) -> IntervalEnclosure:
        """Certified subset of the cylinder interval."""
        return IntervalEnclosure(self.left.hi, self.right.lo)

    def contains(self, x) -> bool | None:
        """True/False when certified, None when ``x`` sits inside an endpoint enclosure."""
        x = as_rational(x)
        if self.core.contains(x):
            return True
        if not self.hull.contains(x):
            return False
        return None

    def to_json(self) -> dict:
        return {
            "word": word_str(self.word),
            "left": {"lo": rational_pair(self.left.lo), "hi": rational_pair(self.left.hi)},
            "right": {"lo": rational_pair(self.right.lo), "hi": rational_pair(self.right.hi)},
        }


def _at_cut(seq: OstroSequence, word: tuple, cut: int) -> Cylinder:
    m = len(word)
    s = partial_sum(seq, word)
    even = seq.parity_recip_sum(m, cut, 0)
    odd = seq.parity_recip_sum(m, cut, 1)
    return Cylinder(seq, word, cut, s - even, s + odd, Fraction(2, seq.q(cut + 1)))


def cylinder(seq, word=(), width_target=DEFAULT_WIDTH) -> Cylinder:
    """Cylinder of ``word`` with each endpoint enclosure no wider than ``width_target``."""
    seq = as_sequence(seq)
    word = _word(word)
    return _at_cut(seq, word, cut_for_width(seq, len(word), width_target))


def recut(cyl: Cylinder, cut: int) -> Cylinder:
    return _at_cut(cyl.seq, cyl.word, max(cut, cyl.rank))


def length(cyl_or_seq, rank: int | None = None, width_target=DEFAULT_WIDTH) -> IntervalEnclosure:
    """Enclosure of the cylinder length ``sum_{k>m} 1/q_k`` (independent of the word)."""
    if isinstance(cyl_or_seq, Cylinder):
        seq, m = cyl_or_seq.seq, cyl_or_seq.rank
        # right - left at a common cut: exact core difference plus both tails
        cyl = cyl_or_seq
        if Fraction(2, seq.q(cyl.cut + 1)) <= as_rational(width_target):
            return enclose_tail(seq, m, cyl.cut - m)
    else:
        seq, m = as_sequence(cyl_or_seq), int(rank)
    cut = cut_for_width(seq, m, width_target)
    return enclose_tail(seq, m, cut - m)


def lower_child_bit(k: int) -> int:
    """Digit at index ``k`` that gives the lower (left) child in value order."""
    return 0 if k % 2 == 1 else 1


def siblings_separated(lower: Cylinder, upper: Cylinder) -> bool:
    """Certified strict gap between two cylinders known to be ordered."""
    return lower.right.hi < upper.left.lo


def subdivide(cyl: Cylinder, retries: int = REFINE_RETRIES) -> tuple[Cylinder, Cylinder]:
    """Children for appended digits 0 and 1, refined until their gap is certified."""
    seq = cyl.seq
    k = cyl.rank + 1
    cut = max(cyl.cut, k)
    for _ in range(retries + 1):
        c0 = _at_cut(seq, cyl.word + (0,), cut)
        c1 = _at_cut(seq, cyl.word + (1,), cut)
        lo, hi = (c0, c1) if lower_child_bit(k) == 0 else (c1, c0)
        if siblings_separated(lo, hi):
            return c0, c1
        step = max(1, cut - k)
        try:
            seq.q(cut + step + 1)
        except (InsufficientDepth, DepthOverflow):
            break
        cut += step
    raise Undecidable(k, False, f"sibling enclosures at rank {k} did not separate")


def nested_in(child: Cylinder, parent: Cylinder) -> bool:
    """Certified ``child ⊆ parent``; tails beyond a common cut cancel exactly."""
    cut = max(child.cut, parent.cut)
    c, p = recut(child, cut), recut(parent, cut)
    return c.left_core >= p.left_core and c.right_core <= p.right_core


def cover_set(seq, rank: int, width_target=DEFAULT_WIDTH, limit: int = COVER_RANK_LIMIT) -> list[Cylinder]:
    """All ``2**rank`` cylinders of a rank, in lexicographic word order."""
    if rank < 0:
        raise ValueError("rank must be >= 0")
    if rank > limit:
        raise BudgetExceeded(f"rank {rank} exceeds cover limit {limit}")
    seq = as_sequence(seq)
    cut = cut_for_width(seq, rank, width_target)
    return [_at_cut(seq, w, cut) for w in itertools.product((0, 1), repeat=rank)]


def locate(seq, x, depth: int, retries: int = REFINE_RETRIES) -> tuple[int, ...]:
    """Digit word of length ``depth`` whose cylinder certifiably contains ``x``.

    Greedy in shifted coordinates ``y = x + sum_even 1/q``: the shifted digit
    at ``k`` is 1 iff the remainder is at least ``1/q_k``.  Raises
    ``Undecidable`` with ``certified_gap=True`` when ``x`` provably lies in a
    gap (outside the set), and ``certified_gap=False`` when the enclosures
    never separate.
    """
    seq = as_sequence(seq)
    x = as_rational(x)
    eta: list[int] = []
    chosen = Fraction(0)  # sum of 1/q_j over shifted digits equal to 1
    cut = depth + 1

    def remainder(cut):
        # y minus the chosen terms; the even tail beyond the cut is in [0, 2/q_{cut+1})
        core = x + seq.parity_recip_sum(0, cut, 0) - chosen
        return IntervalEnclosure(core, core + Fraction(2, seq.q(cut + 1)))

    def decide(k, cut):
        """One comparison step; returns a digit, 'in', or None when undecided."""
        y = remainder(cut)
        r_prev = enclose_tail(seq, k - 1, cut - k + 1)
        if y.hi < 0 or y.lo > r_prev.hi:
            raise Undecidable(k - 1, True)
        if k > depth:
            return "in" if (y.lo >= 0 and y.hi <= r_prev.lo) else None
        a_k = Fraction(1, seq.q(k))
        r_k = enclose_tail(seq, k, cut - k)
        if y.lo >= a_k:
            return 1
        if y.hi <= r_k.lo and y.lo >= 0:
            return 0
        if y.hi < a_k and y.lo > r_k.hi:
            raise Undecidable(k - 1, True)
        return None

    for k in range(1, depth + 2):
        for _ in range(retries + 1):
            cut = max(cut, k + 1)
            digit = decide(k, cut)
            if digit is not None:
                break
            step = max(1, cut - k)
            try:
                seq.q(cut + step + 1)
            except (InsufficientDepth, DepthOverflow):
                raise Undecidable(k - 1, False) from None
            cut += step
        else:
            raise Undecidable(k - 1, False)
        if digit == "in":
            break
        eta.append(digit)
        if digit == 1:
            chosen += Fraction(1, seq.q(k))
    return from_shifted(eta)
