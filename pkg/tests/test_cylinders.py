import itertools
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ostro.cylinders import (
    DEFAULT_WIDTH,
    cover_set,
    cylinder,
    length,
    locate,
    lower_child_bit,
    nested_in,
    partial_sum,
    siblings_separated,
    subdivide,
    to_shifted,
)
from ostro.errors import BudgetExceeded, InsufficientDepth, Undecidable
from ostro.sequences import GeneratorRule, OstroSequence

SYL = OstroSequence.from_rule(GeneratorRule.sylvester(1))


def _mp(x):
    return mpmath.mpf(x.numerator) / x.denominator


def _oracle_endpoints(seq, word, upto=14):
    """Cylinder endpoints from long partial sums in 300-digit arithmetic."""
    m = len(word)
    with mpmath.workdps(300):
        s = sum(mpmath.mpf((-1) ** (k - 1) * c) / seq.q(k) for k, c in enumerate(word, start=1))
        even = sum(mpmath.mpf(1) / seq.q(j) for j in range(m + 1, upto) if j % 2 == 0)
        odd = sum(mpmath.mpf(1) / seq.q(j) for j in range(m + 1, upto) if j % 2 == 1)
        return s - even, s + odd


def _assert_encloses(enc, value):
    with mpmath.workdps(300):
        assert _mp(enc.lo) <= value <= _mp(enc.hi)


def test_rank_zero_cylinder():
    c = cylinder(SYL, ())
    left, right = _oracle_endpoints(SYL, ())
    _assert_encloses(c.left, left)
    _assert_encloses(c.right, right)
    assert c.left.width <= DEFAULT_WIDTH and c.right.width <= DEFAULT_WIDTH
    # rough decimal values of the whole-set endpoints
    assert abs(float(c.left.mid) + 0.5240) < 1e-3
    assert abs(float(c.right.mid) - 1.1672) < 1e-4


def test_rank_one_zero_cylinder():
    c = cylinder(SYL, (0,))
    left, right = _oracle_endpoints(SYL, (0,))
    _assert_encloses(c.left, left)
    _assert_encloses(c.right, right)
    assert abs(float(c.right.mid) - 0.1672) < 1e-4
    assert c.left.intersects(cylinder(SYL, ()).left)


def test_finite_model_cylinder_is_degenerate_at_its_end():
    seq = OstroSequence([1, 2, 6])
    with pytest.raises(InsufficientDepth):
        cylinder(seq, (1, 0, 1))


@pytest.mark.parametrize("word", ["", "0", "1", "01", "110", "0101", "11111"])
def test_endpoints_match_oracle(word):
    c = cylinder(SYL, word)
    left, right = _oracle_endpoints(SYL, tuple(int(b) for b in word))
    _assert_encloses(c.left, left)
    _assert_encloses(c.right, right)


def test_subdivide_root():
    c0, c1 = subdivide(cylinder(SYL, ()))
    assert c0.word == (0,) and c1.word == (1,)
    assert lower_child_bit(1) == 0
    assert siblings_separated(c0, c1)
    assert c0.hull.certainly_below(c1.hull)
    assert nested_in(c0, cylinder(SYL, ())) and nested_in(c1, cylinder(SYL, ()))


def test_children_share_length_formula():
    parent = cylinder(SYL, "10")
    c0, c1 = subdivide(parent)
    expected = length(SYL, 3)
    for child in (c0, c1):
        got = child.right - child.left
        assert got.intersects(expected)
    # |child| = sum_{k>m+1} 1/q_k, enclosed by the length operation
    with mpmath.workdps(300):
        exact = sum(mpmath.mpf(1) / SYL.q(k) for k in range(4, 14))
        _assert_encloses(expected, exact)


def test_rank_three_pairwise_disjoint():
    cover = cover_set(SYL, 3)
    assert len(cover) == 8
    for a, b in itertools.combinations(cover, 2):
        assert not a.hull.intersects(b.hull)


def test_length_examples():
    enc = length(SYL, 3)
    assert Fraction(1, 42) + Fraction(1, 1806) <= enc.lo and enc.hi <= Fraction(1, 21)
    assert length(cylinder(SYL, "101")) == length(cylinder(SYL, "000"))
    whole = length(SYL, 0)
    with mpmath.workdps(300):
        _assert_encloses(whole, sum(mpmath.mpf(1) / SYL.q(k) for k in range(1, 14)))


def test_total_length_vanishes():
    totals = []
    for m in range(1, 11):
        enc = length(SYL, m)
        assert enc.hi <= Fraction(2, SYL.q(m + 1))
        totals.append(2**m * enc.hi)
    assert all(b < a for a, b in zip(totals[1:], totals[2:]))
    assert totals[-1] < Fraction(1, 10**200)


def test_cover_contains_all_rank_five_sums():
    cover = cover_set(SYL, 3)
    for word in itertools.product((0, 1), repeat=5):
        x = partial_sum(SYL, word)
        owners = [c for c in cover if c.contains(x)]
        assert len(owners) == 1 and owners[0].word == word[:3]


def test_cover_rank_zero_and_limit():
    assert len(cover_set(SYL, 0)) == 1
    with pytest.raises(BudgetExceeded):
        cover_set(SYL, 21)


def test_cover_is_lexicographic():
    words = [c.word for c in cover_set(SYL, 4)]
    assert words == sorted(words)


def test_locate_examples():
    assert locate(SYL, Fraction(2, 3), 3) == (1, 1, 1)
    n = 5
    x = partial_sum(SYL, (1,) * n)
    assert locate(SYL, x, 8) == (1,) * n + (0,) * 3


def test_locate_gap_point_reports_rank():
    with pytest.raises(Undecidable) as info:
        locate(SYL, Fraction(1, 1000), 6)
    assert info.value.certified_gap
    assert info.value.rank <= 6


def test_shifted_order_is_value_order():
    cover = cover_set(SYL, 5)
    by_value = sorted(cover, key=lambda c: c.hull.lo)
    assert [to_shifted(c.word) for c in by_value] == sorted(to_shifted(c.word) for c in cover)


def test_json_layout():
    data = cylinder(SYL, "101").to_json()
    assert data["word"] == "101"
    assert set(data["left"]) == {"lo", "hi"} and set(data["left"]["lo"]) == {"num", "den"}


words8 = st.lists(st.integers(0, 1), min_size=8, max_size=8).map(tuple)


@given(words8)
def test_point_recovery(word):
    x = partial_sum(SYL, word)
    assert cylinder(SYL, word).contains(x)
    assert locate(SYL, x, 8) == word


@given(st.lists(st.integers(0, 1), max_size=7).map(tuple), st.integers(0, 1))
def test_nesting_and_sibling_gap(word, bit):
    parent = cylinder(SYL, word)
    child = cylinder(SYL, word + (bit,))
    assert nested_in(child, parent)
    c0, c1 = subdivide(parent)
    k = len(word) + 1
    lo, hi = (c0, c1) if lower_child_bit(k) == 0 else (c1, c0)
    assert siblings_separated(lo, hi)
    assert lo.hull.certainly_below(hi.hull)
