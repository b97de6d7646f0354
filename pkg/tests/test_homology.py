from collections import Counter
from fractions import Fraction as F

import pytest

from twobridge.homology import FilteredComplex, compute, hfk, peel_v, reduce, symmetry_centres
from twobridge.knot import InconsistencyError, TwoBridgeKnot
from twobridge.lens_d import d_branched_cover_multiset

from conftest import knot_data


def test_zero_differential_unchanged():
    cx = FilteredComplex([0, 0, 1], [0, 1, 0], [0, 1, 2], {})
    red = reduce(cx)
    assert red.survivors == [0, 1, 2] and red.arrows == {}


def test_cancellation_respects_filtration():
    # 0 -> 1 (drop 0), 0 -> 2 (drop 1), 3 -> 2 (drop 0)
    cx = FilteredComplex.from_pairs([0] * 4, [1, 1, 0, 0], [1, 0, 0, 1], [(0, 1), (0, 2), (3, 2)])
    assert reduce(cx, max_drop=0).survivors == []
    assert reduce(cx).survivors == []
    graded_only = FilteredComplex.from_pairs([0] * 3, [1, 1, 0], [1, 0, 0], [(0, 2)])
    assert reduce(graded_only, max_drop=0).survivors == [0, 1, 2]


def test_repeated_pairs_cancel():
    cx = FilteredComplex.from_pairs([0, 0], [0, 0], [1, 0], [(0, 1), (0, 1)])
    assert cx.arrows == {}


def test_check_reports_bad_arrows():
    with pytest.raises(InconsistencyError) as e:
        FilteredComplex([0, 1], [0, 0], [1, 0], {0: {1}}).check()
    assert e.value.check == "arrow-spinc"
    with pytest.raises(InconsistencyError) as e:
        FilteredComplex([0, 0], [0, 0], [2, 0], {0: {1}}).check()
    assert e.value.check == "arrow-maslov"
    with pytest.raises(InconsistencyError) as e:
        FilteredComplex([0, 0], [0, 1], [1, 0], {0: {1}}).check()
    assert e.value.check == "arrow-filtration"


def test_peel_v_single_pair():
    assert peel_v([(F(2), F(5)), (F(1), F(4))]) == [(F(2), F(5))]
    with pytest.raises(InconsistencyError):
        peel_v([(F(2), F(5)), (F(0), F(4))])


def test_symmetry_centres():
    assert symmetry_centres({0: 1, 1: 2, 2: 2}, 3) == [0]
    assert symmetry_centres({0: 0, 1: 0, 2: 0}, 3) == [0, 1, 2]


def test_trefoil_homology_rank():
    data = knot_data(3, 1)
    assert len(data.complex) == 18
    full = reduce(data.complex, filtered=False)
    assert len(full.survivors) == 6


def test_figure_eight_spin_d():
    assert knot_data(5, 2).table.d[0] == 0


@pytest.mark.parametrize("p,q", [(3, 1), (5, 2), (7, 3)])
def test_hfk_symmetric(p, q):
    A = Counter(a for _, a, _ in knot_data(p, q).hfk)
    assert A == Counter({-a: n for a, n in A.items()})


@pytest.mark.parametrize("p,q", [(3, 1), (5, 2), (7, 3), (11, 4)])
def test_oracle_and_fast_tables_agree(p, q):
    fast, slow = knot_data(p, q), knot_data(p, q, "oracle")
    assert fast.table.tau == slow.table.tau
    assert fast.table.d == slow.table.d


@pytest.mark.parametrize("p,q", [(3, 1), (9, 2), (13, 5)])
def test_survivors_match_recursion(p, q):
    t = knot_data(p, q).table
    assert Counter(t.d.values()) == d_branched_cover_multiset(TwoBridgeKnot(p, q))


@pytest.mark.parametrize("eps", [F(1, 21), F(1, 9), F(2, 15)])
def test_tables_independent_of_epsilon(eps):
    k = TwoBridgeKnot(7, 3)
    got = compute(k, epsilon=eps).table
    assert got.tau == knot_data(7, 3).table.tau and got.d == knot_data(7, 3).table.d


def test_epsilon_on_a_curve_rejected():
    from twobridge.grid import GridDiagram
    with pytest.raises(ValueError):
        GridDiagram(TwoBridgeKnot(7, 3), epsilon=F(1, 20))


def test_diagram_mismatch_rejected():
    from conftest import diagram
    with pytest.raises(ValueError):
        compute(TwoBridgeKnot(5, 2), diagram=diagram(7, 3))


def test_hfk_default_reduction_matches_pipeline():
    data = knot_data(5, 2)
    assert hfk(data.complex) == data.hfk
