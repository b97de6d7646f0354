import numpy as np
import pytest

from twobridge.grid import (Generator, GridDiagram, OracleGuardError, connecting_domains, differential,
                            domain_index, generators, oracle_connecting_domains, oracle_domain_table,
                            periodic_domain, rectangle_domain_table, spinc_label, squares_to_zero,
                            vertex_matrix)
from twobridge.knot import TwoBridgeKnot

from conftest import diagram


@pytest.mark.parametrize("p,q", [(3, 1), (3, 2), (7, 3)])
def test_counts(p, q):
    d = diagram(p, q)
    assert d.n_points == 4 * p
    # two alphas and two betas cut the torus into squares: 4p cells
    assert d.n_cells == 4 * p
    assert len(generators(d)) == 2 * p * p


def test_p3_label_zero_generators():
    d = diagram(3, 1)
    got = {g for g in d.generators if g.label(3) == 0}
    want = {Generator(False, 0, 0), Generator(True, 0, 0), Generator(False, 1, 2), Generator(True, 1, 2),
            Generator(False, 2, 1), Generator(True, 2, 1)}
    assert got == want


def test_labels_split_evenly():
    d = diagram(7, 3)
    counts = np.bincount([g.label(7) for g in d.generators])
    assert list(counts) == [14] * 7


@pytest.mark.parametrize("g,p,label", [(Generator(False, 1, 2), 3, 0), (Generator(True, 0, 1), 3, 1),
                                       (Generator(False, 4, 0), 7, 4)])
def test_spinc_label(g, p, label):
    assert spinc_label(g, p) == label


def test_epsilon_range_checked():
    with pytest.raises(ValueError):
        GridDiagram(TwoBridgeKnot(7, 3), epsilon=1)


@pytest.mark.parametrize("p,q", [(3, 1), (5, 2), (7, 3), (11, 4)])
@pytest.mark.parametrize("role", ["w", "z"])
def test_periodic_domain(p, q, role):
    d = diagram(p, q)
    P = np.array(periodic_domain(d, role).multiplicities)
    assert P.any() and P.min() < 0 < P.max()
    assert all(P[b.cell] == 0 for b in d.basepoints(role))
    assert not (vertex_matrix(d) @ P).any()
    # both annuli cover half the torus, so the signed area vanishes
    assert P.sum() == 0


def test_vertex_matrix_rank():
    d = diagram(7, 3)
    assert np.linalg.matrix_rank(vertex_matrix(d).astype(float)) == 4 * 7 - 3


def test_cross_label_pairs_have_no_domains():
    d = diagram(5, 2)
    g1, g2 = Generator(False, 0, 0), Generator(False, 0, 1)
    assert connecting_domains(d, g1, g2) == []
    assert oracle_connecting_domains(d, g1, g2) == []


def test_same_generator_rejected():
    d = diagram(3, 1)
    with pytest.raises(ValueError):
        connecting_domains(d, Generator(False, 0, 0), Generator(False, 0, 0))


def test_domains_have_index_one_and_avoid_basepoints():
    d = diagram(7, 3)
    for g1 in d.generators[:20]:
        for g2 in d.generators:
            if g1 != g2:
                for D in connecting_domains(d, g1, g2, "w"):
                    m = np.array(D.multiplicities)
                    assert m.min() >= 0
                    assert domain_index(d, m, g1, g2) == 1
                    assert all(m[b.cell] == 0 for b in d.basepoints("w"))


def test_single_and_double_domain_pairs_exist():
    # a pair joined by exactly one domain contributes an arrow, a pair
    # joined by two parallelograms cancels mod 2
    counts = {len(v) for v in rectangle_domain_table(diagram(7, 3), "w").values()}
    assert {1, 2} <= counts


def test_oracle_guard():
    with pytest.raises(OracleGuardError):
        oracle_domain_table(diagram(29, 11))


@pytest.mark.parametrize("p,q", [(3, 1), (3, 2), (5, 2), (7, 3)])
@pytest.mark.parametrize("role", ["w", "z"])
def test_three_methods_agree(p, q, role):
    d = diagram(p, q)
    rect = rectangle_domain_table(d, role)
    assert rect == oracle_domain_table(d, role)
    gens = d.generators
    scan = {}
    for a, g1 in enumerate(gens):
        for b, g2 in enumerate(gens):
            if a != b:
                found = connecting_domains(d, g1, g2, role)
                if found:
                    scan[(a, b)] = sorted(D.multiplicities for D in found)
    assert scan == rect
    assert differential(d, role, "rectangles") == differential(d, role, "scan") == differential(d, role, "oracle")


@pytest.mark.parametrize("p,q", [(3, 1), (5, 2), (9, 2), (13, 5)])
def test_differential_squares_to_zero(p, q):
    d = diagram(p, q)
    for role in ("w", "z"):
        arrows = differential(d, role)
        assert squares_to_zero(arrows)
        assert all(d.generators[s].label(p) == d.generators[t].label(p) for s, ts in arrows.items() for t in ts)


def test_squares_to_zero_detects_failure():
    assert not squares_to_zero({0: {1}, 1: {2}})
    assert squares_to_zero({0: {1, 2}, 1: {3}, 2: {3}})


def test_unknown_method():
    with pytest.raises(ValueError):
        differential(diagram(3, 1), "w", "bogus")
