"""Exact integer linear systems by unimodular column reduction.

``IntegerSystem(M)`` brings M to lower column-echelon form H = M V with V
unimodular.  Solutions of M x = b are then x = V y with H y = b solved by
forward substitution, and the trailing columns of V span the integer
kernel.  Used by the domain oracle, so it makes no use of the diagram's
geometry.
"""

from __future__ import annotations

import numpy as np

_LIMIT = 2 ** 40


class IntegerSystem:
    def __init__(self, M):
        H = np.array(M, dtype=np.int64)
        m, n = H.shape
        V = np.eye(n, dtype=np.int64)
        pivots = []
        c = 0
        for i in range(m):
            if c == n:
                break
            while True:
                row = H[i, c:]
                nz = np.flatnonzero(row)
                if nz.size == 0:
                    break
                k = c + nz[np.argmin(np.abs(row[nz]))]
                if k != c:
                    H[:, [c, k]] = H[:, [k, c]]
                    V[:, [c, k]] = V[:, [k, c]]
                rest = c + 1 + np.flatnonzero(H[i, c + 1:])
                if rest.size == 0:
                    if H[i, c] < 0:
                        H[:, c] *= -1
                        V[:, c] *= -1
                    pivots.append((i, c))
                    c += 1
                    break
                f = H[i, rest] // H[i, c]
                H[:, rest] -= np.outer(H[:, c], f)
                V[:, rest] -= np.outer(V[:, c], f)
            if np.abs(H).max(initial=0) > _LIMIT or np.abs(V).max(initial=0) > _LIMIT:
                raise OverflowError("integer reduction exceeded the int64 safety bound")
        self.M = np.array(M, dtype=np.int64)
        self.H, self.V = H, V
        self.pivots = pivots
        self.rank = len(pivots)
        self.det = int(np.prod([H[i, c] for i, c in pivots], dtype=object)) if pivots else 1

    @property
    def kernel(self) -> np.ndarray:
        """Columns form a basis of the integer kernel."""
        return self.V[:, self.rank:]

    def scaled_solve(self, B) -> np.ndarray:
        """det * (a rational solution) of M x = B, column by column.

        Only pivot rows are used, so the result is an exact integer matrix
        whose columns solve the system whenever B is consistent.
        """
        B = np.atleast_2d(np.asarray(B, dtype=np.int64).T).T
        y = np.zeros((self.rank, B.shape[1]), dtype=np.int64)
        for c, (i, _) in enumerate(self.pivots):
            rhs = self.det * B[i] - self.H[i, :c] @ y[:c]
            piv = self.H[i, c]
            if np.any(rhs % piv):
                raise ArithmeticError("scaled forward substitution is not exact")
            y[c] = rhs // piv
        return self.V[:, :self.rank] @ y

    def solve(self, B):
        """Integer solutions of M x = B per column, with a validity mask."""
        X = self.scaled_solve(B)
        ok = np.all(X % self.det == 0, axis=0)
        X = X // self.det
        B = np.atleast_2d(np.asarray(B, dtype=np.int64).T).T
        ok &= np.all(self.M @ X == B, axis=0)
        return X, ok
