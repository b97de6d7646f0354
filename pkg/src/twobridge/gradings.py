"""Maslov and Alexander gradings through the p-fold cover.

The p-fold cover of the small torus is R^2 modulo the lattice spanned by
(1, 0) and (0, p).  In (U, V) coordinates that lattice is (2pZ)^2, so the
cover is an ordinary 2p x 2p toroidal grid with alpha curves horizontal,
beta curves vertical, and the fundamental domain [0, 2p)^2 has a beta
lift on its left edge and an alpha lift on its bottom edge.  A point of
the small torus lifts to its p translates by the deck vector (-2r, 2), r = p - q.

On the cover the absolute grading of a generator x with marking set O is

    M(x) = I(x, x) + I(O, O) - I(x, O) - I(O, x) + 1

where I(A, B) counts pairs (a, b) with a strictly south-west of b.
Relative gradings downstairs are cover differences divided by p.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import floor, lcm

import numpy as np

from .grid import Generator, GridDiagram
from .knot import InconsistencyError


@dataclass(frozen=True)
class CoverLift:
    """Lifted generator points and lifted basepoints in [0, 2p)^2."""

    points: tuple
    basepoints: tuple


def _lift(p, q, u, v, shift=(0, 0)):
    su, sv = shift
    n = 2 * p
    return [((u - 2 * q * k - su) % n, (v + 2 * k - sv) % n) for k in range(p)]


def lift_generator(diagram: GridDiagram, g: Generator, role: str = "w", shift=(0, 0)) -> CoverLift:
    """Full preimage of a generator and of the role's basepoints.

    ``shift`` moves the fundamental domain by an integer vector, which
    keeps a beta lift on the left edge and an alpha lift on the bottom.
    """
    p, q = diagram.p, diagram.r
    pts = []
    for pid in diagram.generator_points(g):
        pts.extend(_lift(p, q, *diagram.point_uv(pid), shift))
    bps = []
    for b in diagram.basepoints(role):
        bps.extend(_lift(p, q, *b.uv, shift))
    return CoverLift(tuple(pts), tuple(bps))


def grading_I(A, B) -> int:
    """Number of pairs (a, b) in A x B with a strictly south-west of b."""
    if not len(A) or not len(B):
        return 0
    scale = lcm(*(Fraction(c).denominator for pt in list(A) + list(B) for c in pt))
    a = np.array([[int(Fraction(c) * scale) for c in pt] for pt in A], dtype=np.int64)
    b = np.array([[int(Fraction(c) * scale) for c in pt] for pt in B], dtype=np.int64)
    sw = (a[:, None, 0] < b[None, :, 0]) & (a[:, None, 1] < b[None, :, 1])
    return int(sw.sum())


def cover_maslov(diagram: GridDiagram, g: Generator, role: str = "w", shift=(0, 0)) -> int:
    """Absolute grading of the lifted generator on the cover grid."""
    lift = lift_generator(diagram, g, role, shift)
    x, O = lift.points, lift.basepoints
    return grading_I(x, x) + grading_I(O, O) - grading_I(x, O) - grading_I(O, x) + 1


def relative_maslov(diagram: GridDiagram, g1: Generator, g2: Generator, role: str = "w") -> Fraction:
    return Fraction(cover_maslov(diagram, g1, role) - cover_maslov(diagram, g2, role), diagram.p)


def _suffix_strict(grid):
    """S[u, v] = sum of grid[u', v'] over u' > u, v' > v."""
    s = grid[::-1, ::-1].cumsum(0).cumsum(1)[::-1, ::-1]
    out = np.zeros_like(s)
    out[:-1, :-1] = s[1:, 1:]
    return out


def _prefix_strict(grid):
    """P[u, v] = sum of grid[u', v'] over u' < u, v' < v."""
    s = grid.cumsum(0).cumsum(1)
    out = np.zeros_like(s)
    out[1:, 1:] = s[:-1, :-1]
    return out


def cover_maslov_table(diagram: GridDiagram, role: str = "w", shift=(0, 0)) -> np.ndarray:
    """cover_maslov for every generator (generator-index order), vectorized.

    Uses 2D prefix counts per lifted point, O(p^3) overall.
    """
    key = ("cover_table", role, tuple(shift))
    if key in diagram._cache:
        return diagram._cache[key]
    p, q = diagram.p, diagram.r
    n = 2 * p
    su, sv = shift
    k = np.arange(p)
    pu = np.array([diagram.point_uv(i)[0] for i in range(diagram.n_points)])
    pv = np.array([diagram.point_uv(i)[1] for i in range(diagram.n_points)])
    LU = (pu[:, None] - 2 * q * k[None, :] - su) % n
    LV = (pv[:, None] + 2 * k[None, :] - sv) % n

    # basepoints: exact for I(O, O); cells suffice against integer points
    bps = diagram.basepoints(role)
    Ofrac = [((b.uv[0] - 2 * q * kk - su) % n, (b.uv[1] + 2 * kk - sv) % n) for b in bps for kk in range(p)]
    I_OO = grading_I(Ofrac, Ofrac)
    ocell = np.zeros((n, n), dtype=np.int64)
    for u, v in Ofrac:
        ocell[floor(u), floor(v)] += 1
    # x strictly SW of O <=> cell(O) >= x componentwise
    o_ge = ocell[::-1, ::-1].cumsum(0).cumsum(1)[::-1, ::-1]
    o_lt = _prefix_strict(ocell)
    I_PO = o_ge[LU, LV].sum(1)
    I_OP = o_lt[LU, LV].sum(1)

    sw_self = (LU[:, :, None] < LU[:, None, :]) & (LV[:, :, None] < LV[:, None, :])
    I_PP = sw_self.sum((1, 2))

    gens = diagram.generators
    a_ids = np.array([diagram.generator_points(g)[0] for g in gens])
    b_ids = np.array([diagram.generator_points(g)[1] for g in gens])
    cross = np.zeros(len(gens), dtype=np.int64)
    for b in np.unique(b_ids):
        grid = np.zeros((n, n), dtype=np.int64)
        grid[LU[b], LV[b]] = 1
        S, P = _suffix_strict(grid), _prefix_strict(grid)
        sel = np.nonzero(b_ids == b)[0]
        a = a_ids[sel]
        cross[sel] = S[LU[a], LV[a]].sum(1) + P[LU[a], LV[a]].sum(1)
    table = I_PP[a_ids] + I_PP[b_ids] + cross + I_OO - I_PO[a_ids] - I_PO[b_ids] - I_OP[a_ids] - I_OP[b_ids] + 1
    diagram._cache[key] = table
    return table


def relative_table(diagram: GridDiagram, role: str = "w") -> list:
    """Relative gradings (Fractions) against the reference (x_0, y_0)."""
    t = cover_maslov_table(diagram, role)
    ref = int(t[diagram.generator_index(Generator(False, 0, 0))])
    return [Fraction(int(v) - ref, diagram.p) for v in t]


def pin_gradings(relative, top_survivors, recursion) -> tuple:
    """Shift relative gradings so the survivor multiset matches the d-multiset.

    ``top_survivors`` and ``recursion`` are multisets (iterables) of size p.
    Returns (pinned list, shift constant).
    """
    T = sorted(top_survivors)
    R = sorted(recursion)
    if len(T) != len(R) or not T:
        raise InconsistencyError("pin-size", f"{len(T)} survivors vs {len(R)} d-values")
    c = R[-1] - T[-1]
    if Counter(t + c for t in T) != Counter(R):
        raise InconsistencyError("pin-multiset", "shifted survivor gradings differ from the d-invariants")
    return [r + c for r in relative], c


def alexander_gradings(m_w, m_z) -> list:
    """A = (M_w - M_z)/2 - 1/2 for a grid of number two."""
    return [(a - b) / 2 - Fraction(1, 2) for a, b in zip(m_w, m_z)]
