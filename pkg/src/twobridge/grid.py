"""The twisted toroidal grid diagram of the lifted knot in -L(p, q).

Working coordinates
-------------------
The torus R^2/Z^2 carries alpha curves y = 0, 1/2 and beta curves
y = (p/q)x, y = (p/q)(x - 1/2).  Under ``(x, y) -> (U, V) = (2(qy - px), 2y)``
every curve becomes a grid line (alpha: V integer, beta: U integer) and
the torus becomes R^2 / L with L spanned by (2p, 0) and (-2r, 2), where
r = p - q.  Intersection points are the integer points of R^2 / L and
cells are unit squares.  Every class has a canonical representative with
V in {0, 1}, U in [0, 2p).

The map reverses the orientation of the (x, y) torus.  All combinatorics
(rectangles, cover gradings) use the (U, V) orientation; with it the
slope-p/q picture is a diagram for -L(p, q), the double branched cover
of K(p, q).  With the (x, y) orientation it would be L(p, q).

Alpha (y = 0) is V = 0, the other alpha is V = 1; beta is U even, the
other beta is U odd.  Everything below is exact integer / rational
arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import floor
from typing import NamedTuple, Optional

import numpy as np

from .intlin import IntegerSystem
from .knot import InconsistencyError, TwoBridgeKnot


def canon(p: int, r: int, u, v):
    """Canonical representative of (u, v) modulo L = <(2p, 0), (-2r, 2)>."""
    k = floor(v / 2)
    return (u + 2 * r * k) % (2 * p), v - 2 * k


class Generator(NamedTuple):
    """(x_i, y_j) when ``primed`` is False, (x_i', y_j') otherwise."""

    primed: bool
    i: int
    j: int

    def label(self, p: int) -> int:
        return spinc_label(self, p)

    def __str__(self):
        t = "'" if self.primed else ""
        return f"(x{self.i}{t},y{self.j}{t})"


def spinc_label(g: Generator, p: int) -> int:
    """The spin^c label (i + j) mod p; label 0 is the spin structure."""
    return (g.i + g.j) % p


class Basepoint(NamedTuple):
    name: str
    xy: tuple  # exact (x, y) on the unit torus
    uv: tuple  # canonical exact (U, V)
    cell: int


@dataclass(frozen=True)
class Domain:
    """A 2-chain on the cells, together with its end generators."""

    multiplicities: tuple
    source: Generator
    target: Generator

    def __getitem__(self, cell):
        return self.multiplicities[cell]


def default_epsilon(p: int, q: int) -> Fraction:
    """Basepoint offset 1/(2 max(p, q) + 1).

    Any eps in (0, min(1/p, 1/q)) gives the same complex; only the spin
    label moves, and ``spin_y_offset`` compensates.
    """
    return Fraction(1, 2 * max(p, q) + 1)


@dataclass(frozen=True)
class GridDiagram:
    knot: TwoBridgeKnot
    epsilon: Fraction = None
    y_offset: Optional[int] = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        p, q = self.knot.p, self.knot.q
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", default_epsilon(p, q))
        eps = Fraction(self.epsilon)
        object.__setattr__(self, "epsilon", eps)
        if not 0 < eps < min(Fraction(1, p), Fraction(1, q)):
            raise ValueError(f"epsilon {eps} must lie in (0, min(1/p, 1/q))")
        if self.y_offset is None:
            object.__setattr__(self, "y_offset", spin_y_offset(p, q, eps))
        if self.y_offset % 2:
            raise ValueError("y_offset must be even")
        self._corner_basepoints  # rejects an epsilon that lands on a curve

    # -- sizes ------------------------------------------------------------
    @property
    def p(self):
        return self.knot.p

    @property
    def q(self):
        return self.knot.q

    @property
    def r(self):
        """Lattice twist p - q of the working coordinates."""
        return self.knot.p - self.knot.q

    @property
    def n_points(self):
        return 4 * self.p

    @property
    def n_cells(self):
        return 4 * self.p

    # -- points -----------------------------------------------------------
    def point_id(self, u: int, v: int) -> int:
        u, v = canon(self.p, self.r, u, v)
        return v * 2 * self.p + u

    def point_uv(self, pid: int) -> tuple:
        return pid % (2 * self.p), pid // (2 * self.p)

    def point_xy(self, pid: int) -> tuple:
        """Exact coordinates of a point in [0, 1)^2."""
        u, v = self.point_uv(pid)
        y = Fraction(v, 2)
        x = (self.q * y - Fraction(u, 2)) / self.p
        return x % 1, y % 1

    def point_name(self, pid: int) -> str:
        p = self.p
        u, v = self.point_uv(pid)
        # labels run with increasing x, i.e. decreasing U
        if v == 0:
            m = (-u) % (2 * p)
            return f"x{m // 2}" + ("'" if m % 2 else "")
        m = (-u - self.y_offset) % (2 * p)
        return f"y{m // 2}" + ("" if m % 2 else "'")

    def x_point(self, i: int, primed: bool) -> int:
        return self.point_id(-(2 * (i % self.p) + int(primed)), 0)

    def y_point(self, j: int, primed: bool) -> int:
        return self.point_id(-(self.y_offset + 2 * (j % self.p) + int(not primed)), 1)

    @cached_property
    def labels(self) -> list:
        """Point names in id order: x_0, x_0', ... on alpha, y's on the other."""
        return [self.point_name(k) for k in range(self.n_points)]

    # -- cells ------------------------------------------------------------
    @cached_property
    def cell_order(self) -> np.ndarray:
        """Map canonical cell (lower-left corner point id) to cell index.

        Cells are sorted by the exact (y, x) coordinates of their
        lowest-leftmost vertex.
        """
        def corner(k):  # x decreases with U, so that vertex is (u + 1, v)
            u, v = self.point_uv(k)
            return self.point_xy(self.point_id(u + 1, v))[::-1]

        keys = sorted(range(self.n_points), key=corner)
        order = np.empty(self.n_points, dtype=np.int64)
        for idx, k in enumerate(keys):
            order[k] = idx
        return order

    def cell_id(self, u: int, v: int) -> int:
        """Index of the unit cell whose lower-left corner is (u, v)."""
        return int(self.cell_order[self.point_id(u, v)])

    @cached_property
    def cell_corner(self) -> np.ndarray:
        """Inverse of cell_order: cell index -> canonical (u, v)."""
        out = np.empty((self.n_cells, 2), dtype=np.int64)
        for k in range(self.n_points):
            out[self.cell_order[k]] = self.point_uv(k)
        return out

    def point_cells(self, pid: int) -> list:
        """The four cells meeting at an intersection point."""
        u, v = self.point_uv(pid)
        return [self.cell_id(u + a, v + b) for a in (-1, 0) for b in (-1, 0)]

    # -- basepoints -------------------------------------------------------
    def _basepoint(self, name, xy) -> Basepoint:
        p, q = self.p, self.q
        x, y = xy
        U, V = 2 * (q * y - p * x), 2 * y
        if U.denominator == 1 or V.denominator == 1:
            raise ValueError(f"epsilon {self.epsilon} puts basepoint {name} on a curve")
        cu, cv = canon(p, self.r, U, V)
        cell = self.cell_id(floor(cu), floor(cv))
        return Basepoint(name, (x % 1, y % 1), (cu, cv), cell)

    @cached_property
    def _corner_basepoints(self) -> list:
        e = self.epsilon
        half = Fraction(1, 2)
        spots = [(e, 1 - e), (half + e, 1 - e), (e, half - e), (half + e, half - e)]
        return [self._basepoint(f"b{k + 1}", xy) for k, xy in enumerate(spots)]

    def _annuli(self, bp: Basepoint) -> tuple:
        """(horizontal annulus, slanted annulus) containing a basepoint."""
        cu, cv = bp.uv
        return floor(cv) % 2, floor(cu) % 2

    @cached_property
    def w_basepoints(self) -> list:
        b = self._corner_basepoints
        h1, s1 = self._annuli(b[0])
        partner = [bp for bp in b[2:] if self._annuli(bp) == (1 - h1, 1 - s1)]
        if len(partner) != 1:
            raise InconsistencyError("basepoint-placement", "no valid w pairing")
        return [b[0]._replace(name="w1"), partner[0]._replace(name="w2")]

    @cached_property
    def z_basepoints(self) -> list:
        w_cells = {bp.cell for bp in self.w_basepoints}
        zs = [bp for bp in self._corner_basepoints if bp.cell not in w_cells]
        return [bp._replace(name=f"z{k + 1}") for k, bp in enumerate(zs)]

    def basepoints(self, role: str) -> list:
        if role == "w":
            return self.w_basepoints
        if role == "z":
            return self.z_basepoints
        raise ValueError(f"role must be 'w' or 'z', not {role!r}")

    # -- generators -------------------------------------------------------
    @cached_property
    def generators(self) -> list:
        p = self.p
        return [Generator(bool(k), i, j) for k in (0, 1) for i in range(p) for j in range(p)]

    def generator_index(self, g: Generator) -> int:
        p = self.p
        return int(g.primed) * p * p + (g.i % p) * p + (g.j % p)

    def generator_points(self, g: Generator) -> tuple:
        """(alpha point id, other-alpha point id)."""
        return self.x_point(g.i, g.primed), self.y_point(g.j, g.primed)

    @cached_property
    def _pair_to_generator(self) -> dict:
        return {self.generator_points(g): g for g in self.generators}

    def generator_at(self, a: int, b: int) -> Generator:
        """Generator occupying two points (any order)."""
        if self.point_uv(a)[1] == 1:
            a, b = b, a
        return self._pair_to_generator[(a, b)]


def spin_y_offset(p: int, q: int, epsilon=None) -> int:
    """Offset of y_0' along the second alpha curve (U coordinate, even).

    With the y-labels started here, label 0 is the self-conjugate spin^c
    structure.  Each beta-type line the basepoints cross on their way out
    of the corner cells (there are floor(2(p+q)eps) of them) moves the
    spin label by one, so the offset absorbs it.  The pipeline re-derives
    the spin label as the symmetry centre of the d-table and raises if
    the two disagree.
    """
    eps = default_epsilon(p, q) if epsilon is None else Fraction(epsilon)
    crossings = floor(2 * (p + q) * eps)
    return (-2 * q + 2 * crossings) % (2 * p)


def build_diagram(knot: TwoBridgeKnot, epsilon=None) -> GridDiagram:
    return GridDiagram(knot, epsilon)


class Rectangle(NamedTuple):
    """An empty rectangle in the (U, V) plane.

    Lower-left corner (u0, v0) is canonical; the source generator sits at
    the lower-left and upper-right corners, the target at the other two.
    ``n_w`` / ``n_z`` count basepoint lifts covered (with multiplicity).
    """

    u0: int
    v0: int
    width: int
    height: int
    source: int
    target: int
    n_w: int
    n_z: int


def _lift_hits(p, q, pu, pv, u0, v0, w, h, closed=True):
    """Number of lifts of the point/cell (pu, pv) in a rectangle.

    ``closed`` counts lattice points in [u0, u0+w] x [v0, v0+h]; otherwise
    cells in [u0, u0+w) x [v0, v0+h).
    """
    top = v0 + h if closed else v0 + h - 1
    right = w if closed else w - 1
    first = v0 + ((pv - v0) % 2)
    count = 0
    for V in range(first, top + 1, 2):
        k = (V - pv) // 2
        U = (pu - 2 * q * k) % (2 * p)
        off = (U - u0) % (2 * p)
        if off <= right:
            count += 1
            # a second lift in the same row only when right >= 2p
            count += max(0, (right - off) // (2 * p))
    return count


def enumerate_rectangles(diagram: GridDiagram) -> list:
    """All index-one positive domains, as empty rectangles in the cover.

    A rectangle is empty when the closed rectangle contains no lift of its
    four corner points other than the corners themselves.
    """
    cached = diagram._cache.get("rectangles")
    if cached is not None:
        return cached
    p, q = diagram.p, diagram.r
    w_cells = [(floor(b.uv[0]), floor(b.uv[1])) for b in diagram.w_basepoints]
    z_cells = [(floor(b.uv[0]), floor(b.uv[1])) for b in diagram.z_basepoints]
    out = []
    for v0 in (0, 1):
        for u0 in range(2 * p):
            h = 1
            while True:
                ul = canon(p, q, u0, v0 + h)
                # lifts of LL and UL only grow with the width
                wmax = 2 * p - 1
                found_any = False
                for w in range(1, wmax + 1, 2):
                    if (_lift_hits(p, q, u0, v0, u0, v0, w, h) > 1
                            or _lift_hits(p, q, *ul, u0, v0, w, h) > 1):
                        break
                    found_any = True
                    lr = canon(p, q, u0 + w, v0)
                    ur = canon(p, q, u0 + w, v0 + h)
                    if (_lift_hits(p, q, *lr, u0, v0, w, h) > 1
                            or _lift_hits(p, q, *ur, u0, v0, w, h) > 1):
                        continue
                    src = diagram.generator_index(diagram.generator_at(
                        diagram.point_id(u0, v0), diagram.point_id(*ur)))
                    tgt = diagram.generator_index(diagram.generator_at(
                        diagram.point_id(*ul), diagram.point_id(*lr)))
                    nw = sum(_lift_hits(p, q, cu, cv, u0, v0, w, h, closed=False) for cu, cv in w_cells)
                    nz = sum(_lift_hits(p, q, cu, cv, u0, v0, w, h, closed=False) for cu, cv in z_cells)
                    out.append(Rectangle(u0, v0, w, h, src, tgt, nw, nz))
                if not found_any:
                    break
                h += 2
    diagram._cache["rectangles"] = out
    return out


def generators(diagram: GridDiagram) -> list:
    """All 2p^2 generators, primed block after unprimed, each by (i, j)."""
    return list(diagram.generators)


# -- domains ----------------------------------------------------------------
#
# A 2-chain D on the 4p cells connects g1 to g2 exactly when, at every
# intersection point, n_NE + n_SW - n_NW - n_SE = [point in g1] - [point in g2].

def _corner_cells(diagram: GridDiagram) -> np.ndarray:
    """Array (4, points): NE, SW, NW, SE cell of every intersection point."""
    key = "corner_cells"
    if key not in diagram._cache:
        out = np.empty((4, diagram.n_points), dtype=np.int64)
        for pid in range(diagram.n_points):
            u, v = diagram.point_uv(pid)
            out[:, pid] = [diagram.cell_id(u, v), diagram.cell_id(u - 1, v - 1),
                           diagram.cell_id(u - 1, v), diagram.cell_id(u, v - 1)]
        diagram._cache[key] = out
    return diagram._cache[key]


def vertex_matrix(diagram: GridDiagram) -> np.ndarray:
    """Points x cells matrix of the corner condition."""
    ne, sw, nw, se = _corner_cells(diagram)
    M = np.zeros((diagram.n_points, diagram.n_cells), dtype=np.int64)
    rows = np.arange(diagram.n_points)
    for cells, sign in ((ne, 1), (sw, 1), (nw, -1), (se, -1)):
        np.add.at(M, (rows, cells), sign)
    return M


def corner_sums(diagram: GridDiagram, mults) -> np.ndarray:
    """Sum of the four corner multiplicities at each point (last axis = cells)."""
    m = np.asarray(mults)
    return m[..., _corner_cells(diagram)].sum(axis=-2)


def generator_point_array(diagram: GridDiagram) -> np.ndarray:
    """(generators, 2) array of point ids, in generator-index order."""
    key = "generator_points"
    if key not in diagram._cache:
        diagram._cache[key] = np.array([diagram.generator_points(g) for g in diagram.generators],
                                       dtype=np.int64).reshape(-1, 2)
    return diagram._cache[key]


def generator_vector(diagram: GridDiagram, g: Generator) -> np.ndarray:
    e = np.zeros(diagram.n_points, dtype=np.int64)
    for pid in diagram.generator_points(g):
        e[pid] += 1
    return e


def domain_index(diagram: GridDiagram, mults, g1: Generator, g2: Generator) -> Fraction:
    """n_g1(D) + n_g2(D); every cell is a square, so the Euler measure is 0."""
    cs = corner_sums(diagram, mults)
    pts = diagram.generator_points(g1) + diagram.generator_points(g2)
    return Fraction(int(sum(cs[pid] for pid in pts)), 4)


def _annulus_masks(diagram: GridDiagram):
    corners = diagram.cell_corner
    return corners[:, 1] % 2, corners[:, 0] % 2  # horizontal band, slanted band


def periodic_domain(diagram: GridDiagram, role: str = "w") -> Domain:
    """P0 = H - B for the horizontal and slanted annuli through the first basepoint."""
    bps = diagram.basepoints(role)
    h, s = diagram._annuli(bps[0])
    band, slant = _annulus_masks(diagram)
    P = (band == h).astype(np.int64) - (slant == s).astype(np.int64)
    if any(P[b.cell] for b in bps):
        raise InconsistencyError("periodic-domain", f"P0 meets a {role} basepoint")
    return Domain(tuple(int(x) for x in P), None, None)


def _base_domain(diagram: GridDiagram, g1: Generator, g2: Generator):
    """One integer solution of the corner condition, or None.

    Jumps across the two alpha curves are cumulative sums of the corner
    data; the rows are then filled along the orbits u -> u + 2r.
    """
    p, r = diagram.p, diagram.r
    n = 2 * p
    e = generator_vector(diagram, g1) - generator_vector(diagram, g2)
    e0, e1 = e[:n], e[n:]
    a = np.cumsum(e0)
    b = np.cumsum(e1)
    s0 = int(a[0::2].sum() + b[0::2].sum())
    s1 = int(a[1::2].sum() + b[1::2].sum())
    if s0 != s1 or s0 % p:
        return None
    b = b - s0 // p
    row0 = np.zeros(n, dtype=np.int64)
    for start in (0, 1):
        u = start
        for _ in range(p - 1):
            nxt = (u + 2 * r) % n
            row0[nxt] = row0[u] + a[nxt] + b[u]
            u = nxt
        if row0[start] != row0[u] + a[start] + b[u]:
            raise InconsistencyError("domain-closure", f"{g1} -> {g2}")
    row1 = row0 + b
    D = np.empty(diagram.n_cells, dtype=np.int64)
    D[diagram.cell_order[:n]] = row0
    D[diagram.cell_order[n:]] = row1
    return D


def _check_boundary(diagram, D, g1, g2):
    ne, sw, nw, se = _corner_cells(diagram)
    got = D[ne] + D[sw] - D[nw] - D[se]
    want = generator_vector(diagram, g1) - generator_vector(diagram, g2)
    if not np.array_equal(got, want):
        raise InconsistencyError("domain-boundary", f"{g1} -> {g2}")


def _k_range(base, P):
    """Integers k with base + k P >= 0 everywhere (P has mixed signs)."""
    pos, neg = P > 0, P < 0
    if not pos.any() or not neg.any():
        raise InconsistencyError("periodic-domain", "P0 is not of mixed sign")
    lo = int(np.max(-(base[pos] // P[pos])))
    hi = int(np.min(base[neg] // -P[neg]))
    if (base[P == 0] < 0).any():
        return lo, lo - 1
    return lo, hi


def connecting_domains(diagram: GridDiagram, g1: Generator, g2: Generator, role: str = "w") -> list:
    """Positive index-one domains from g1 to g2 missing both role basepoints.

    Solves for one base domain, normalizes it to vanish at the basepoints,
    and scans the rank-one family D0 + k P0 over nonnegative members.
    """
    if g1 == g2:
        raise ValueError("connecting domains need two distinct generators")
    p = diagram.p
    if g1.label(p) != g2.label(p):
        return []
    D = _base_domain(diagram, g1, g2)
    if D is None:
        return []
    bps = diagram.basepoints(role)
    c1, c2 = bps[0].cell, bps[1].cell
    h, _ = diagram._annuli(bps[0])
    band, _ = _annulus_masks(diagram)
    D = D - D[c2] + (D[c2] - D[c1]) * (band == h)
    P = np.array(periodic_domain(diagram, role).multiplicities)
    _check_boundary(diagram, D, g1, g2)
    lo, hi = _k_range(D, P)
    out = []
    for k in range(lo, hi + 1):
        Dk = D + k * P
        if domain_index(diagram, Dk, g1, g2) == 1:
            out.append(Domain(tuple(int(x) for x in Dk), g1, g2))
    return sorted(out, key=lambda d: d.multiplicities)


# -- oracle -----------------------------------------------------------------

ORACLE_LIMIT = 200


class OracleGuardError(ValueError):
    """The exhaustive oracle is restricted to 2pq <= 200."""


def _oracle_guard(diagram):
    if 2 * diagram.p * diagram.q > ORACLE_LIMIT:
        raise OracleGuardError(f"oracle needs 2pq <= {ORACLE_LIMIT}, got {2 * diagram.p * diagram.q}")


class _OracleSystem:
    """Generic integer data for the corner condition of one diagram and role.

    Solutions from g1 to g2 form x0 + K t (K the integer kernel, rank 3);
    the two basepoint conditions cut this to base + k P.  The index is
    affine in k, so index one fixes k unless P has index zero at the
    pair's corners, in which case the whole nonnegative range is scanned.
    Every candidate is then checked in full: integrality, the corner
    condition, nonnegativity, basepoint avoidance and index one.
    """

    def __init__(self, diagram: GridDiagram, role: str):
        self.system = IntegerSystem(vertex_matrix(diagram))
        if self.system.kernel.shape[1] != 3:
            raise InconsistencyError("periodic-rank", f"kernel rank {self.system.kernel.shape[1]}")
        # det times a rational solution for each unit right-hand side
        self.unit = self.system.scaled_solve(np.eye(diagram.n_points, dtype=np.int64))
        self.wcells = [b.cell for b in diagram.basepoints(role)]
        self.K = self.system.kernel
        self.sub = IntegerSystem(self.K[self.wcells])
        if self.sub.kernel.shape[1] != 1:
            raise InconsistencyError("periodic-rank", "basepoint conditions are degenerate")
        self.P = self.K @ self.sub.kernel[:, 0]
        if not (self.P > 0).any() or not (self.P < 0).any():
            raise InconsistencyError("periodic-domain", "oracle periodic domain is not of mixed sign")
        corners = _corner_cells(diagram)
        self.corners = corners
        self.cs_unit = self.unit[corners].sum(axis=0)  # (points, points)
        self.cs_K = self.K[corners].sum(axis=0)  # (points, 3)
        self.cs_P = self.P[corners].sum(axis=0)  # (points,)

    def _full(self, diagram, src, tgt):
        """Exact x0 + K t with t meeting the basepoint conditions, or a mask of failures."""
        det = self.system.det
        U = self.unit
        X = U[:, src[:, 0]] + U[:, src[:, 1]] - U[:, tgt[:, 0]] - U[:, tgt[:, 1]]
        ok = np.all(X % det == 0, axis=0)
        X = X // det
        m = len(src)
        B = np.zeros((diagram.n_points, m), dtype=np.int64)
        cols = np.arange(m)
        for pts, sign in ((src, 1), (tgt, -1)):
            np.add.at(B, (pts[:, 0], cols), sign)
            np.add.at(B, (pts[:, 1], cols), sign)
        ne, sw, nw, se = self.corners
        ok &= np.all(X[ne] + X[sw] - X[nw] - X[se] == B, axis=0)
        T, tok = self.sub.solve(-X[self.wcells])
        return X + self.K @ T, ok & tok

    def solve(self, diagram, sources, targets):
        """Domains for each (source, target) index pair, as sorted tuple lists."""
        det = self.system.det
        gp = generator_point_array(diagram)
        src, tgt = gp[np.asarray(sources)], gp[np.asarray(targets)]
        m = len(src)
        cols = np.arange(m)
        pts = np.concatenate([src, tgt], axis=1)  # (m, 4)
        sign = np.array([1, 1, -1, -1])

        # basepoint values and corner sums of x0, scaled by det
        Uw = self.unit[self.wcells]
        xw = (Uw[:, pts] * sign).sum(axis=2)  # (2, m)
        w_ok = np.all(xw % det == 0, axis=0)
        T = np.zeros((3, m), dtype=np.int64)
        if w_ok.any():
            Tw, tok = self.sub.solve(-(xw[:, w_ok] // det))
            T[:, w_ok] = Tw
            w_ok[np.flatnonzero(w_ok)[~tok]] = False
        cs_x = sum(sign[j] * self.cs_unit[pts, pts[:, [j]]].T for j in range(4))  # (4, m): at pair points
        cs_x = cs_x.sum(axis=0)
        ok = w_ok & (cs_x % det == 0)
        i0 = cs_x // det + (self.cs_K[pts].sum(axis=1) * T.T).sum(axis=1)
        iP = self.cs_P[pts].sum(axis=1)

        cand_k, cand_col = [], []
        pinned = np.flatnonzero(ok & (iP != 0))
        num = 4 - i0[pinned]
        exact = num % iP[pinned] == 0
        cand_col.extend(pinned[exact].tolist())
        cand_k.extend((num[exact] // iP[pinned][exact]).tolist())
        flat = np.flatnonzero(ok & (iP == 0) & (i0 == 4))
        found = [[] for _ in range(m)]
        if flat.size:
            base, fok = self._full(diagram, src[flat], tgt[flat])
            P = self.P[:, None]
            pos, neg, zero = self.P > 0, self.P < 0, self.P == 0
            lo = np.max(-(base[pos] // P[pos]), axis=0)
            hi = np.min(base[neg] // -P[neg], axis=0)
            fok &= ~np.any(base[zero] < 0, axis=0)
            for c, a, b in zip(flat[fok].tolist(), lo[fok].tolist(), hi[fok].tolist()):
                cand_col.extend([c] * max(0, b - a + 1))
                cand_k.extend(range(a, b + 1))
        if not cand_col:
            return found
        cc = np.array(cand_col)
        base, fok = self._full(diagram, src[cc], tgt[cc])
        D = base + np.array(cand_k) * self.P[:, None]
        keep = fok & np.all(D >= 0, axis=0) & ~np.any(D[self.wcells], axis=0)
        idx4 = D[self.corners].sum(axis=0)[pts[cc].T, np.arange(cc.size)].sum(axis=0)
        keep &= idx4 == 4
        for j in np.flatnonzero(keep):
            found[cc[j]].append(tuple(D[:, j].tolist()))
        return [sorted(f) if len(f) > 1 else f for f in found]


def _oracle(diagram: GridDiagram, role: str) -> _OracleSystem:
    key = ("oracle", role)
    if key not in diagram._cache:
        diagram._cache[key] = _OracleSystem(diagram, role)
    return diagram._cache[key]


def oracle_connecting_domains(diagram: GridDiagram, g1: Generator, g2: Generator, role: str = "w") -> list:
    """Same contract as connecting_domains, by generic integer linear algebra.

    The corner system is solved through a unimodular column reduction, the
    basepoint conditions through a second one; the remaining one-parameter
    family is box-scanned with slack 2 and every candidate re-filtered for
    positivity, basepoint avoidance and index one.
    """
    _oracle_guard(diagram)
    if g1 == g2:
        raise ValueError("connecting domains need two distinct generators")
    found = _oracle(diagram, role).solve(
        diagram, [diagram.generator_index(g1)], [diagram.generator_index(g2)])[0]
    return [Domain(m, g1, g2) for m in found]


def oracle_domain_table(diagram: GridDiagram, role: str = "w", chunk: int = 1 << 18) -> dict:
    """{(source index, target index): sorted multiplicity tuples} over all pairs."""
    _oracle_guard(diagram)
    key = ("oracle-table", role)
    if key in diagram._cache:
        return diagram._cache[key]
    orc = _oracle(diagram, role)
    p = diagram.p
    by_label = {}
    for idx, g in enumerate(diagram.generators):
        by_label.setdefault(g.label(p), []).append(idx)
    pairs = [(a, b) for s in sorted(by_label) for a in by_label[s] for b in by_label[s] if a != b]
    table = {}
    for start in range(0, len(pairs), chunk):
        block = pairs[start:start + chunk]
        src, tgt = zip(*block)
        for pair, found in zip(block, orc.solve(diagram, src, tgt)):
            if found:
                table[pair] = found
    diagram._cache[key] = table
    return table


def rectangle_domain(diagram: GridDiagram, rect: Rectangle) -> tuple:
    """Cell multiplicities of a rectangle pushed down to the small torus."""
    p, r = diagram.p, diagram.r
    n = 2 * p
    V = np.arange(rect.v0, rect.v0 + rect.height)
    k = V // 2
    cv = V - 2 * k
    start = (rect.u0 + 2 * r * k) % n
    diff = np.zeros((2, n + 1), dtype=np.int64)
    end = start + rect.width
    wrap = end > n
    np.add.at(diff, (cv, start), 1)
    np.add.at(diff, (cv[~wrap], end[~wrap]), -1)
    np.add.at(diff, (cv[wrap], np.full(wrap.sum(), n)), -1)
    np.add.at(diff, (cv[wrap], np.zeros(wrap.sum(), dtype=np.int64)), 1)
    np.add.at(diff, (cv[wrap], end[wrap] - n), -1)
    rows = np.cumsum(diff[:, :n], axis=1)
    D = np.empty(diagram.n_cells, dtype=np.int64)
    D[diagram.cell_order[:n]] = rows[0]
    D[diagram.cell_order[n:]] = rows[1]
    return tuple(int(x) for x in D)


def rectangle_domain_table(diagram: GridDiagram, role: str = "w") -> dict:
    """Fast-path analogue of oracle_domain_table, from the rectangles."""
    table = {}
    for rect in enumerate_rectangles(diagram):
        if (rect.n_w if role == "w" else rect.n_z) == 0:
            table.setdefault((rect.source, rect.target), []).append(rectangle_domain(diagram, rect))
    return {k: sorted(v) for k, v in table.items()}


def squares_to_zero(arrows: dict) -> bool:
    """True when an F2 differential {source: targets} squares to zero."""
    for ts in arrows.values():
        hits = {}
        for t in ts:
            for u in arrows.get(t, ()):
                hits[u] = hits.get(u, 0) ^ 1
        if any(hits.values()):
            return False
    return True


def differential(diagram: GridDiagram, role: str = "w", method: str = "rectangles") -> dict:
    """The F2 boundary map as {source index: frozenset of target indices}.

    ``method`` is "rectangles" (fast path), "scan" (connecting_domains on
    every same-label pair) or "oracle" (exhaustive, 2pq <= 200 only).
    """
    diagram.basepoints(role)
    if method == "rectangles":
        counts = {}
        for rect in enumerate_rectangles(diagram):
            if (rect.n_w if role == "w" else rect.n_z) == 0:
                key = (rect.source, rect.target)
                counts[key] = counts.get(key, 0) ^ 1
        pairs = [k for k, v in counts.items() if v]
    elif method == "oracle":
        pairs = [k for k, v in oracle_domain_table(diagram, role).items() if len(v) % 2]
    elif method == "scan":
        p = diagram.p
        gens = diagram.generators
        pairs = []
        for g1 in gens:
            for g2 in gens:
                if g1 != g2 and g1.label(p) == g2.label(p):
                    if len(connecting_domains(diagram, g1, g2, role)) % 2:
                        pairs.append((diagram.generator_index(g1), diagram.generator_index(g2)))
    else:
        raise ValueError(f"unknown method {method!r}")
    arrows = {}
    for s, t in sorted(pairs):
        arrows.setdefault(s, set()).add(t)
    arrows = {s: frozenset(ts) for s, ts in arrows.items()}
    if not squares_to_zero(arrows):
        raise InconsistencyError("d-squared", f"{role}-differential does not square to zero")
    return arrows
