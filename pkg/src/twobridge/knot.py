"""Two-bridge knots K(p, q) and the errors raised by the pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Optional


class InvalidKnotError(ValueError):
    """Raised when (p, q) does not name a two-bridge knot."""


class InconsistencyError(RuntimeError):
    """An internal invariant failed; ``check`` names the failed invariant."""

    def __init__(self, check: str, detail: str = ""):
        self.check = check
        msg = check if not detail else f"{check}: {detail}"
        super().__init__(msg)


@dataclass(frozen=True)
class TwoBridgeKnot:
    """The knot K(p, q) whose double branched cover is -L(p, q).

    ``p`` is odd (it is the determinant), ``0 < q < p`` and gcd(p, q) = 1.
    """

    p: int
    q: int
    name: Optional[str] = None

    def __post_init__(self):
        p, q = self.p, self.q
        if not isinstance(p, int) or not isinstance(q, int):
            raise InvalidKnotError("p and q must be integers")
        problems = []
        if p < 3:
            problems.append(f"p={p} must be at least 3")
        if p % 2 == 0:
            problems.append(f"p={p} must be odd")
        if not 0 < q < p:
            problems.append(f"q={q} must satisfy 0 < q < p")
        if gcd(p, q) != 1:
            problems.append(f"gcd(p, q) = {gcd(p, q)} must be 1")
        if problems:
            raise InvalidKnotError("; ".join(problems))

    @property
    def determinant(self) -> int:
        return self.p

    def mirror(self) -> "TwoBridgeKnot":
        """K(p, p - q); its double cover is L(p, q) with reversed orientation."""
        return TwoBridgeKnot(self.p, self.p - self.q)

    def __str__(self):
        tag = f"{self.p}/{self.q}"
        return f"{self.name} ({tag})" if self.name else tag
