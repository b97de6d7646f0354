"""Filtered cancellation over F2, HFK extraction, and the tau / d tables."""

from __future__ import annotations

import heapq
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .gradings import alexander_gradings, pin_gradings, relative_table
from .grid import GridDiagram, differential, squares_to_zero
from .knot import InconsistencyError, TwoBridgeKnot
from .lens_d import d_branched_cover_multiset


@dataclass
class FilteredComplex:
    """Generators decorated with (label, A, M) and sparse F2 arrows."""

    labels: list
    A: list
    M: list
    arrows: dict = field(default_factory=dict)  # source -> set of targets

    @classmethod
    def from_arrows(cls, labels, A, M, arrows):
        return cls(list(labels), list(A), list(M), {s: set(ts) for s, ts in arrows.items() if ts})

    @classmethod
    def from_pairs(cls, labels, A, M, pairs):
        """Build from (source, target) pairs; repeated pairs cancel mod 2."""
        parity = Counter(pairs)
        arrows = defaultdict(set)
        for (s, t), n in parity.items():
            if n % 2:
                arrows[s].add(t)
        return cls(list(labels), list(A), list(M), dict(arrows))

    def __len__(self):
        return len(self.labels)

    def arrow_list(self):
        return sorted((s, t) for s, ts in self.arrows.items() for t in ts)

    def check(self):
        """Raise if an arrow breaks label, Maslov, filtration, or d^2 = 0."""
        for s, t in self.arrow_list():
            if self.labels[s] != self.labels[t]:
                raise InconsistencyError("arrow-spinc", f"{s}->{t}")
            if self.M[s] - self.M[t] != 1:
                raise InconsistencyError("arrow-maslov", f"{s}->{t} drops M by {self.M[s] - self.M[t]}")
            if self.A[s] < self.A[t]:
                raise InconsistencyError("arrow-filtration", f"{s}->{t} raises A")
        if not squares_to_zero(self.arrows):
            raise InconsistencyError("d-squared", "differential does not square to zero")


@dataclass
class Reduced:
    survivors: list  # generator indices still alive
    arrows: dict  # remaining arrows among survivors


def reduce(cx: FilteredComplex, max_drop: Optional[int] = None, filtered: bool = True) -> Reduced:
    """Cancel arrows in order of increasing A-drop, then (source, target).

    ``max_drop`` stops after that drop level (0 gives the associated
    graded homology).  With ``filtered=False`` every arrow counts as drop 0,
    computing plain homology.
    """
    succ = defaultdict(set)
    pred = defaultdict(set)
    for s, ts in cx.arrows.items():
        for t in ts:
            succ[s].add(t)
            pred[t].add(s)
    alive = set(range(len(cx)))

    def drop(s, t):
        return cx.A[s] - cx.A[t] if filtered else 0

    heap = [(drop(s, t), s, t) for s in succ for t in succ[s]]
    heapq.heapify(heap)
    while heap:
        dd, x, y = heapq.heappop(heap)
        if max_drop is not None and dd > max_drop:
            break
        if x not in alive or y not in alive or y not in succ[x]:
            continue
        ins = [a for a in pred[y] if a != x]
        outs = [b for b in succ[x] if b != y]
        for a in ins:
            for b in outs:
                if b in succ[a]:
                    succ[a].discard(b)
                    pred[b].discard(a)
                else:
                    succ[a].add(b)
                    pred[b].add(a)
                    heapq.heappush(heap, (drop(a, b), a, b))
        for v in (x, y):
            for b in succ.pop(v, ()):
                pred[b].discard(v)
            for a in pred.pop(v, ()):
                succ[a].discard(v)
            alive.discard(v)
    left = {s: set(ts) for s, ts in succ.items() if ts and s in alive}
    return Reduced(sorted(alive), left)


def peel_v(bigradings) -> list:
    """Split off the two-dimensional factor V = <(0,0), (-1,-1)>.

    Repeatedly removes the maximal (A, M) together with (A-1, M-1).
    """
    rest = Counter(bigradings)
    out = []
    while rest:
        top = max(rest)
        partner = (top[0] - 1, top[1] - 1)
        if rest[partner] == 0 or (partner == top and rest[top] < 2):
            raise InconsistencyError("hfk-peel", f"no partner for {top}")
        for b in (top, partner):
            rest[b] -= 1
            if not rest[b]:
                del rest[b]
        out.append(top)
    return sorted(out)


def hfk(cx: FilteredComplex, reduced: Optional[Reduced] = None) -> list:
    """HFK-hat as sorted (label, A, M) triples, with the V factor removed."""
    if reduced is None:
        reduced = reduce(cx, max_drop=0)
    by_label = defaultdict(list)
    for g in reduced.survivors:
        by_label[cx.labels[g]].append((cx.A[g], cx.M[g]))
    out = []
    for s in sorted(by_label):
        out.extend((s, a, m) for a, m in peel_v(by_label[s]))
    return out


@dataclass
class SurvivorTable:
    """E-infinity survivors per label and the derived tau_s, d_s."""

    survivors: dict  # label -> sorted [(A, M), (A, M)]
    tau: dict
    d: dict


def survivor_table(cx: FilteredComplex, reduced: Reduced) -> SurvivorTable:
    by_label = defaultdict(list)
    for g in reduced.survivors:
        by_label[cx.labels[g]].append((cx.A[g], cx.M[g]))
    if reduced.arrows:
        raise InconsistencyError("reduction-incomplete", "arrows remain after full reduction")
    tau, d = {}, {}
    for s, pair in by_label.items():
        pair.sort()
        if len(pair) != 2:
            raise InconsistencyError("survivor-count", f"label {s} has {len(pair)} survivors")
        (a0, m0), (a1, m1) = pair
        if (a1 - a0, m1 - m0) != (1, 1):
            raise InconsistencyError("survivor-pattern", f"label {s}: {pair}")
        tau[s], d[s] = a1, m1
    return SurvivorTable(dict(sorted(by_label.items())), dict(sorted(tau.items())), dict(sorted(d.items())))


@dataclass
class KnotFloerData:
    """Everything the pipeline derives for one knot."""

    knot: TwoBridgeKnot
    complex: FilteredComplex
    table: SurvivorTable
    hfk: list  # (label, A, M), V peeled
    shifts: dict  # role -> pinning constant


def _pinned_maslov(diagram: GridDiagram, role: str, arrows: dict, recursion: list):
    rel = relative_table(diagram, role)
    labels = [g.label(diagram.p) for g in diagram.generators]
    cx = FilteredComplex.from_arrows(labels, [0] * len(labels), rel, arrows)
    red = reduce(cx, filtered=False)
    by_label = defaultdict(list)
    for g in red.survivors:
        by_label[labels[g]].append(rel[g])
    if sorted(by_label) != list(range(diagram.p)) or any(len(v) != 2 for v in by_label.values()):
        raise InconsistencyError("survivor-count", f"{role}-homology is not of rank 2 in every label")
    return pin_gradings(rel, [max(v) for v in by_label.values()], recursion)


def symmetry_centres(values: dict, p: int) -> list:
    """Labels c with values[c + t] == values[c - t] for all t."""
    return [c for c in range(p) if all(values[(c + t) % p] == values[(c - t) % p] for t in range(p))]


def compute(knot: TwoBridgeKnot, method: str = "rectangles", epsilon=None,
            diagram: Optional[GridDiagram] = None) -> KnotFloerData:
    """Full pipeline: diagram, both differentials, pinned gradings, reduction.

    ``method`` selects how the differential is counted (see
    ``grid.differential``).  A prebuilt ``diagram`` for the same knot may be
    passed to reuse its cached tables.  Every invariant along the way is
    checked and a failure raises InconsistencyError naming it.
    """
    if diagram is None:
        diagram = GridDiagram(knot, epsilon)
    elif (diagram.p, diagram.q) != (knot.p, knot.q):
        raise ValueError("diagram does not belong to this knot")
    recursion = list(d_branched_cover_multiset(knot).elements())
    arrows, maslov, shifts = {}, {}, {}
    for role in ("w", "z"):
        arrows[role] = differential(diagram, role, method)
        maslov[role], shifts[role] = _pinned_maslov(diagram, role, arrows[role], recursion)
    A = alexander_gradings(maslov["w"], maslov["z"])
    labels = [g.label(diagram.p) for g in diagram.generators]
    cx = FilteredComplex.from_arrows(labels, A, maslov["w"], arrows["w"])
    cx.check()
    table = survivor_table(cx, reduce(cx))
    if Counter(table.d.values()) != Counter(recursion):
        raise InconsistencyError("survivor-multiset", "d_s differ from the correction terms of -L(p,q)")
    centres = symmetry_centres(table.d, knot.p)
    if centres != [0]:
        raise InconsistencyError("spin-label", f"d-table is symmetric about {centres}, expected [0]")
    return KnotFloerData(knot, cx, table, hfk(cx), shifts)


def tau_and_d(knot: TwoBridgeKnot, method: str = "rectangles") -> SurvivorTable:
    return compute(knot, method).table
