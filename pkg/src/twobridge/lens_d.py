"""Correction terms of lens spaces.

``d_lens`` is the standard correction-term recursion

    d(L(1, 0), 0) = 0
    d(L(p, q), i) = ((2i + 1 - p - q)^2 / (pq) - 1) / 4 - d(L(q, r), i mod q)

with r = p mod q.  The twist-knot closed forms below are used as an
independent check on it.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from functools import lru_cache
from math import gcd

from .knot import TwoBridgeKnot


@lru_cache(maxsize=None)
def _d_lens(p: int, q: int, i: int) -> Fraction:
    if p == 1:
        return Fraction(0)
    head = Fraction((2 * i + 1 - p - q) ** 2, p * q) - 1
    return head / 4 - _d_lens(q, p % q, i % q)


def d_lens(p: int, q: int, i: int) -> Fraction:
    """d(L(p, q), i) for 0 <= i < p, in the recursion's own indexing."""
    if p < 1 or q < 0 or gcd(p, q) != 1 or (p > 1 and q == 0):
        raise ValueError(f"L({p},{q}) needs coprime p >= 1, 0 <= q")
    if not 0 <= i < p:
        raise ValueError(f"index {i} out of range for p={p}")
    return _d_lens(p, q % p if p > 1 else 0, i)


def lens_spin_index(p: int, q: int) -> int:
    """The self-conjugate index of L(p, q) (p odd): 2i = q - 1 mod p.

    The recursion is symmetric under i -> p + q - 1 - i.
    """
    return ((q - 1) * pow(2, -1, p)) % p


def d_table(knot: TwoBridgeKnot) -> dict[int, Fraction]:
    """Correction terms of -L(p, q) keyed by subgroup offset from spin.

    Key ``s`` means recursion index ``spin + s``; the key set is Z/p with
    0 the spin structure, so subgroup sums are label-convention free.
    """
    p, q = knot.p, knot.q
    i0 = lens_spin_index(p, q)
    return {s: -d_lens(p, q, (i0 + s) % p) for s in range(p)}


def d_branched_cover_multiset(knot: TwoBridgeKnot) -> Counter:
    """The p correction terms of the double branched cover -L(p, q)."""
    return Counter(-d_lens(knot.p, knot.q, i) for i in range(knot.p))


def d_twist_closed(p: int, k: int) -> Fraction:
    """Closed form for d of the cover of the twist knot K(p, 2); k = 0 is spin."""
    if p < 3 or p % 2 == 0:
        raise ValueError("p must be odd and >= 3")
    if abs(k) > (p - 1) // 2:
        raise ValueError(f"|k| = {abs(k)} exceeds (p-1)/2")
    corr = Fraction(1, 4) if ((p + 1) // 2 + k) % 2 == 0 else Fraction(-1, 4)
    return Fraction(1, 4) - Fraction(k * k, 2 * p) + corr


def twist_closed_multiset(p: int) -> Counter:
    h = (p - 1) // 2
    return Counter(d_twist_closed(p, k) for k in range(-h, h + 1))


def D_twist_closed(q: int, s: int) -> Fraction:
    """|D_q| of K(qs, 2) for an odd prime q with qs = 1 mod 4 (defined up to sign)."""
    if q < 3 or q % 2 == 0 or any(q % f == 0 for f in range(3, int(q ** 0.5) + 1, 2)):
        raise ValueError(f"q={q} must be an odd prime")
    if s < 1 or (q * s) % 4 != 1:
        raise ValueError(f"p = q*s = {q * s} must be 1 mod 4")
    val = Fraction(q - 1, 4) * (1 - Fraction(s * (q + 1), 6))
    if ((q - 1) // 2) % 2 == 1:
        val += Fraction(1, 2)
    return abs(val)
