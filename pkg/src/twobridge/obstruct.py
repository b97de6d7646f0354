"""Concordance-order tests built from tau and d tables.

Spin^c structures of the double cover are identified with Z_N (N the
determinant) with the spin structure at 0.  For a subgroup H we write
S_H(f) for the sum of f over H.  T_{p^k} and D_{p^k} are the minima of
|sum n_H S_H| over nonnegative, not all zero, n_H; with exact rational
sums the minimum is 0 as soon as one S_H vanishes or two have opposite
signs, and min |S_H| otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import gcd, prod
from typing import Iterable, Optional, Sequence, Union

from .knot import TwoBridgeKnot
from .lens_d import d_twist_closed


@dataclass(frozen=True)
class SpincFunction:
    """A function on Z_N (label 0 = spin), e.g. a tau or d table."""

    modulus: int
    values: dict
    kind: str = "tau"

    def __post_init__(self):
        if set(self.values) != set(range(self.modulus)):
            raise ValueError(f"values must be given on exactly 0..{self.modulus - 1}")
        if self.kind not in ("tau", "d"):
            raise ValueError("kind must be 'tau' or 'd'")
        object.__setattr__(self, "values", {s: Fraction(self.values[s]) for s in range(self.modulus)})

    def __call__(self, s: int) -> Fraction:
        return self.values[s % self.modulus]

    def __neg__(self) -> "SpincFunction":
        return SpincFunction(self.modulus, {s: -v for s, v in self.values.items()}, self.kind)


# -- group bookkeeping --------------------------------------------------------

Group = Union[int, Sequence[int]]


def _factors(group: Group) -> tuple:
    return (group,) if isinstance(group, int) else tuple(group)


def prime_factors(n: int) -> list:
    out, f = [], 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def multiplicity(p: int, n: int) -> int:
    """m with p^m exactly dividing n."""
    m = 0
    while n % p == 0:
        n //= p
        m += 1
    return m


def subgroup_elements_cyclic(N: int, m: int) -> frozenset:
    """The subgroup of order m in Z_N."""
    if m < 1 or N % m:
        raise ValueError(f"{m} does not divide {N}")
    step = N // m
    return frozenset(range(0, N, step))


def order_pk_subgroups(group: Group, p: int, k: int = 1) -> list:
    """All cyclic subgroups of order p^k, as sorted element lists.

    ``group`` is N for Z_N or a sequence of orders for a direct sum; the
    elements are then residues or tuples of residues.
    """
    orders = _factors(group)
    n = p ** k
    if any(o < 1 for o in orders) or k < 1:
        raise ValueError("orders and k must be positive")
    # elements of order exactly n: all components killed by n, not all by n/p
    comps = [[x for x in range(o) if (x * n) % o == 0] for o in orders]
    seen = set()
    out = []
    for g in product(*comps):
        if all((x * (n // p)) % o == 0 for x, o in zip(g, orders)):
            continue
        H = frozenset(tuple((c * x) % o for x, o in zip(g, orders)) for c in range(n))
        if H not in seen:
            seen.add(H)
            out.append(H)
    if isinstance(group, int):
        out = [frozenset(h[0] for h in H) for H in out]
    return [sorted(H) for H in sorted(out, key=sorted)]


def S_H(f: SpincFunction, H: Iterable[int]) -> Fraction:
    return sum((f(h) for h in H), Fraction(0))


def combination_min(sums: Sequence[Fraction]) -> Fraction:
    """min |sum n_H S_H| over nonnegative integers n_H, not all zero."""
    if not sums:
        return Fraction(0)
    if any(s == 0 for s in sums) or (min(sums) < 0 < max(sums)):
        return Fraction(0)
    return min(abs(s) for s in sums)


def obstruction_value(f: SpincFunction, p: int, k: int = 1) -> Fraction:
    """T_{p^k} (f a tau table) or D_{p^k} (f a d table)."""
    if p == 1:
        return abs(f(0))
    N = f.modulus
    if N % (p ** k):
        return Fraction(0)
    return combination_min([S_H(f, H) for H in order_pk_subgroups(N, p, k)])


def admissible_k(p: int, N: int) -> int:
    """Largest k allowed by the prime-power extension when p^m exactly divides N."""
    m = multiplicity(p, N)
    return (m + 1) // 2


@dataclass(frozen=True)
class MinmaxOutcome:
    p: int
    kind: str
    maximum: Fraction
    minimum: Fraction
    fails: bool
    reason: str = ""

    @property
    def value(self) -> Fraction:
        return self.maximum + self.minimum


def minmax_test(f: SpincFunction, p: int) -> MinmaxOutcome:
    """Extreme-value test on the order-p subgroup; needs p to divide N exactly once."""
    N = f.modulus
    if N % p or N % (p * p) == 0:
        raise ValueError(f"the {p}-part of Z_{N} is not Z_{p}")
    step = N // p
    vals = [f(a * step) for a in range(p)]  # a in Z_p
    M, m = max(vals), min(vals)
    if m != -M:
        return MinmaxOutcome(p, f.kind, M, m, True, "min != -max")
    if M > 0:
        delta_max = _delta(vals, M)
        if delta_max:
            delta_min = _delta(vals, -M)
            common = set(range(1, p))
            for d in delta_max:
                dinv = pow(d, -1, p)
                common &= {(dinv * e) % p for e in delta_min}
            if not common:
                return MinmaxOutcome(p, f.kind, M, m, True, "empty intersection")
    return MinmaxOutcome(p, f.kind, M, m, False)


def _delta(vals, target) -> set:
    p = len(vals)
    hits = [a for a in range(p) if vals[a] == target]
    return {(b - a) % p for a in hits for b in hits if a != b}


# -- verdicts -------------------------------------------------------------------

@dataclass(frozen=True)
class TestResult:
    kind: str  # "T", "D" or "minmax"
    p: int
    k: int
    value: Fraction
    fired: bool
    of: Optional[str] = None  # "tau" / "d" for minmax

    @property
    def name(self) -> str:
        if self.kind == "minmax":
            return f"minmax_{self.p}({self.of})"
        return f"{self.kind}_{self.p ** self.k}"


@dataclass
class ObstructionReport:
    knot: TwoBridgeKnot
    tau: dict
    d: dict
    tests: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "infinite-order" if any(t.fired for t in self.tests) else "inconclusive"

    @property
    def tests_fired(self) -> list:
        return [t.name for t in self.tests if t.fired]

    def value(self, kind: str, p: int, k: int = 1) -> Optional[Fraction]:
        for t in self.tests:
            if t.kind == kind and t.p == p and t.k == k:
                return t.value
        return None

    def minmax(self, p: int, of: str) -> Optional[TestResult]:
        for t in self.tests:
            if t.kind == "minmax" and t.p == p and t.of == of:
                return t
        return None


def verdict(knot: TwoBridgeKnot, tau_table: dict, d_table: dict) -> ObstructionReport:
    """Run every applicable test on both tables."""
    N = knot.p
    ftau = SpincFunction(N, tau_table, "tau")
    fd = SpincFunction(N, d_table, "d")
    report = ObstructionReport(knot, dict(ftau.values), dict(fd.values))
    for kind, f in (("T", ftau), ("D", fd)):
        v = obstruction_value(f, 1)
        report.tests.append(TestResult(kind, 1, 1, v, v != 0))
    for p in prime_factors(N):
        for k in range(1, admissible_k(p, N) + 1):
            for kind, f in (("T", ftau), ("D", fd)):
                v = obstruction_value(f, p, k)
                report.tests.append(TestResult(kind, p, k, v, v != 0))
        if multiplicity(p, N) == 1:
            for f in (ftau, fd):
                out = minmax_test(f, p)
                report.tests.append(TestResult("minmax", p, 1, out.value, out.fails, f.kind))
    return report


# -- twist knots ------------------------------------------------------------------

def twist_D(p: int, q: int) -> Fraction:
    """|D_q| of the twist knot K(p, 2) from the closed-form d-invariants."""
    h = (p - 1) // 2
    d = {k % p: d_twist_closed(p, k) for k in range(-h, h + 1)}
    f = SpincFunction(p, d, "d")
    return obstruction_value(f, q, 1)


def twist_family_independent(ps: Sequence[int]) -> bool:
    """Separating-prime criterion for twist knots K(p_i, 2).

    Each p_i needs a prime dividing it and no other p_j whose closed-form
    D value is nonzero.
    """
    ps = list(ps)
    for p in ps:
        if p < 3 or p % 2 == 0:
            raise ValueError(f"p={p} must be odd and at least 3")
    if not ps:
        return True
    for i, p in enumerate(ps):
        others = prod(ps[:i] + ps[i + 1:])
        witnesses = [q for q in prime_factors(p) if gcd(q, others) == 1]
        if not any(twist_D(p, q) != 0 for q in witnesses):
            return False
    return True
