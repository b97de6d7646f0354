"""Concordance order of 2-bridge knots from tau and d of the lifted knot.

The double branched cover of the 2-bridge knot K(p, q) is -L(p, q).  This
package builds the twisted toroidal grid diagram of the lift of K(p, q),
computes its filtered knot Floer complex over F2, reads tau_s and d_s off
the surviving generators, and evaluates subgroup-sum and extreme-value
tests that obstruct finite concordance order.
"""

from .grid import GridDiagram, connecting_domains, differential, oracle_connecting_domains
from .homology import compute, tau_and_d
from .knot import InconsistencyError, InvalidKnotError, TwoBridgeKnot
from .lens_d import d_branched_cover_multiset, d_lens, d_table
from .obstruct import (SpincFunction, minmax_test, obstruction_value, twist_family_independent,
                       verdict)

__all__ = [
    "GridDiagram", "connecting_domains", "differential", "oracle_connecting_domains",
    "compute", "tau_and_d", "InconsistencyError", "InvalidKnotError", "TwoBridgeKnot",
    "d_branched_cover_multiset", "d_lens", "d_table", "SpincFunction", "minmax_test",
    "obstruction_value", "twist_family_independent", "verdict",
]
__version__ = "0.1.0"
