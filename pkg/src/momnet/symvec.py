"""Upper-triangular vectorization of symmetric matrices.

A symmetric k x k matrix has k2 + k free entries (k2 = C(k, 2)).  We fix
one bijection between those matrices and vectors of length k2 + k: stack
the upper-triangular entries (diagonal included) in lexicographic order
over index pairs (i, j) with i <= j.  Off-diagonal entries appear once,
so the vectorization of u u^T carries the monomial u_i u_j exactly once
per unordered pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SymVecConvention:
    """Index bookkeeping for the symmetric vectorization at a fixed k."""

    k: int
    _rows: np.ndarray = field(init=False, repr=False, compare=False)
    _cols: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        rows, cols = np.triu_indices(self.k)
        object.__setattr__(self, "_rows", rows)
        object.__setattr__(self, "_cols", cols)

    @property
    def size(self) -> int:
        """k2 + k, the length of the vectorized form."""
        return self.k * (self.k + 1) // 2

    @property
    def k2(self) -> int:
        return self.k * (self.k - 1) // 2

    def pairs(self):
        """Index pairs (i, j), i <= j, in position order."""
        return list(zip(self._rows.tolist(), self._cols.tolist()))

    def position(self, i: int, j: int) -> int:
        """Vector position of the (i, j) entry, i <= j."""
        if not 0 <= i <= j < self.k:
            raise ValueError(f"bad pair ({i}, {j}) for k={self.k}")
        # offset of row i in the stacked upper triangle, then j - i
        return i * self.k - i * (i - 1) // 2 + (j - i)

    def vec(self, B: np.ndarray) -> np.ndarray:
        """Stack the upper triangle of a symmetric matrix."""
        B = np.asarray(B)
        if B.shape != (self.k, self.k):
            raise ValueError(f"expected ({self.k}, {self.k}) matrix")
        return B[self._rows, self._cols].copy()

    def mat(self, b: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`vec`: mirror off-diagonals without halving."""
        b = np.asarray(b)
        if b.shape != (self.size,):
            raise ValueError(f"expected vector of length {self.size}")
        M = np.zeros((self.k, self.k), dtype=b.dtype)
        M[self._rows, self._cols] = b
        M[self._cols, self._rows] = b
        return M

    def vec_outer(self, u: np.ndarray) -> np.ndarray:
        """vec*(u u^T): entry at pair (i, j) is u_i * u_j."""
        u = np.asarray(u)
        if u.shape != (self.k,):
            raise ValueError(f"expected vector of length {self.k}")
        return u[self._rows] * u[self._cols]
