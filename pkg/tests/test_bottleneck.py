import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_bottleneck, torus_energies
from revbar.bottleneck import (
    bottleneck_distance,
    exhaustive_interleaving,
    exhaustive_interleaving_threshold,
    interleaving_check,
    lower_bound_opt_matching,
    matching_feasible,
)
from revbar.persistence_core import Bar, Barcode, FinitePM

half_ints = st.integers(min_value=0, max_value=16).map(lambda v: v / 2)


@st.composite
def barcodes(draw, max_bars=6, degrees=(0, 1), infinite=True):
    out = []
    for deg in degrees:
        for _ in range(draw(st.integers(0, max_bars))):
            a = draw(half_ints)
            if infinite and draw(st.integers(0, 4)) == 0:
                out.append(Bar(a, None, deg))
            else:
                out.append(Bar(a, a + draw(st.integers(1, 12)) / 2, deg))
    return Barcode(out)


def test_identical_barcodes():
    B = Barcode([Bar(0, 4), Bar(1, None), Bar(2, 3, 1)])
    assert bottleneck_distance(B, B) == 0
    m = matching_feasible(B, B, 0)
    assert m is not None and not m.erased1 and not m.erased2


def test_two_single_bars():
    B1, B2 = Barcode([Bar(0, 4)]), Barcode([Bar(1, 4)])
    assert bottleneck_distance(B1, B2) == 1
    m = matching_feasible(B1, B2, 1)
    assert m.pairs == ((Bar(0, 4), Bar(1, 4)),)
    assert matching_feasible(B1, B2, 0.99) is None


def test_erase_only_option():
    m = matching_feasible(Barcode([Bar(0, 1)]), Barcode(), 0.5)
    assert m is not None and m.erased1 == (Bar(0, 1),)
    assert matching_feasible(Barcode([Bar(0, 1)]), Barcode(), 0.49) is None


def test_infinite_counts_differ():
    assert bottleneck_distance(Barcode([Bar(0, None)]), Barcode([Bar(0, 5)])) == math.inf
    assert bottleneck_distance(Barcode([Bar(0, None)]), Barcode([Bar(0, None, 1)])) == math.inf


def test_degrees_never_mix():
    B1 = Barcode([Bar(0, 2, 0)])
    B2 = Barcode([Bar(0, 2, 1)])
    assert bottleneck_distance(B1, B2) == 1


def test_matching_witness_is_admissible():
    B1 = Barcode([Bar(0, 4), Bar(1, 1.5), Bar(2, None)])
    B2 = Barcode([Bar(0.5, 4.5), Bar(2.5, None), Bar(3, 3.2)])
    d = bottleneck_distance(B1, B2)
    m = matching_feasible(B1, B2, d)
    assert m.cost() <= d
    assert Counter([p for p, _ in m.pairs] + list(m.erased1)) == Counter(B1.bars)
    assert Counter([q for _, q in m.pairs] + list(m.erased2)) == Counter(B2.bars)


@pytest.mark.parametrize("m2", [3.0, 4.0])
def test_torus_degree_one_barcodes(m2):
    def code(m):
        e_min, e_max = torus_energies(1.0, m)
        return Barcode([Bar(math.log(math.sqrt(2 * e_min)), None, 1), Bar(math.log(math.sqrt(2 * e_max)), None, 1)])

    B1, B2 = code(2.0), code(m2)
    assert bottleneck_distance(B1, B2) == pytest.approx(brute_bottleneck(B1, B2), abs=1e-12)
    # births shift by half the log ratio of energies; the larger shift wins
    expected = max(0.5 * math.log((1 + m2) / 3), 0.5 * math.log(m2 / 2))
    assert bottleneck_distance(B1, B2) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(barcodes(), barcodes())
def test_matches_brute_force(B1, B2):
    assert bottleneck_distance(B1, B2) == pytest.approx(brute_bottleneck(B1, B2), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(barcodes(max_bars=4), barcodes(max_bars=4))
def test_symmetric(B1, B2):
    assert bottleneck_distance(B1, B2) == bottleneck_distance(B2, B1)


@settings(max_examples=100, deadline=None)
@given(barcodes(max_bars=3, infinite=False), barcodes(max_bars=3, infinite=False), barcodes(max_bars=3, infinite=False))
def test_triangle_inequality(B1, B2, B3):
    assert bottleneck_distance(B1, B3) <= bottleneck_distance(B1, B2) + bottleneck_distance(B2, B3) + 1e-12


@settings(max_examples=100, deadline=None)
@given(barcodes(max_bars=4), barcodes(max_bars=4), st.floats(0, 5), st.floats(0, 2))
def test_feasibility_monotone(B1, B2, eps, extra):
    if matching_feasible(B1, B2, eps) is not None:
        assert matching_feasible(B1, B2, eps + extra) is not None


@pytest.mark.parametrize(
    "B1, B2, n, expected",
    [
        ([Bar(0, 10)], [Bar(3, 10)], 1, 1.5),
        ([Bar(0, 10), Bar(1, 10)], [Bar(0, 10), Bar(1, 10)], 2, 0.0),
        ([Bar(0, 10), Bar(2, 10)], [Bar(1, 10), Bar(5, 10)], 2, 1.5),
        ([Bar(0, 2)], [Bar(3, 10)], 1, None),
    ],
)
def test_opt_matching_examples(B1, B2, n, expected):
    assert lower_bound_opt_matching(Barcode(B1), Barcode(B2), n) == expected


def test_opt_matching_needs_enough_bars():
    with pytest.raises(ValueError):
        lower_bound_opt_matching(Barcode([Bar(0, 1)]), Barcode([Bar(0, 1)]), 2)


@settings(max_examples=200, deadline=None)
@given(barcodes(max_bars=5, degrees=(1,)), barcodes(max_bars=5, degrees=(1,)), st.integers(1, 3))
def test_opt_matching_is_a_lower_bound(B1, B2, n):
    if min(len(B1), len(B2)) < n:
        return
    bound = lower_bound_opt_matching(B1, B2, n, degree=1)
    if bound is not None:
        assert bound <= bottleneck_distance(B1, B2) + 1e-12


@pytest.mark.parametrize(
    "M1, M2, delta, expected",
    [
        ([Bar(0, 4)], [Bar(0, 4)], 0.0, True),
        ([Bar(0, 4)], [Bar(1, 4)], 1.0, True),
        ([Bar(0, 4)], [Bar(1, 4)], 0.5, False),
        ([Bar(0, 1)], [], 0.5, True),
        ([Bar(0, 1)], [], 0.25, False),
        ([Bar(0, None)], [Bar(2, None)], 2.0, True),
        ([Bar(0, None)], [Bar(2, None)], 1.9, False),
    ],
)
def test_interleaving_examples(M1, M2, delta, expected):
    assert exhaustive_interleaving(FinitePM(M1), FinitePM(M2), delta) is expected
    assert interleaving_check(FinitePM(M1), FinitePM(M2), delta) is expected


@settings(max_examples=40, deadline=None)
@given(barcodes(max_bars=2, degrees=(0,)), barcodes(max_bars=2, degrees=(0,)))
def test_exhaustive_threshold_is_bottleneck(B1, B2):
    M1, M2 = FinitePM(B1.bars), FinitePM(B2.bars)
    assert exhaustive_interleaving_threshold(M1, M2) == pytest.approx(bottleneck_distance(B1, B2), abs=1e-9)
