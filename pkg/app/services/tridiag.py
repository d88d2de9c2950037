"""Tridiagonal solves and the mixed Neumann-Dirichlet operator on the cell mesh."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from ..errors import ConsistencyError
from .grid import Grid1D


def solve_tridiagonal(
    lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray
) -> np.ndarray:
    """
    Solve M x = rhs for tridiagonal M.

    Row i reads lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1];
    lower[0] and upper[-1] are ignored.
    """
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    try:
        x = solve_banded((1, 1), ab, rhs, check_finite=False)
    except (LinAlgError, ValueError) as exc:
        raise ConsistencyError(f"singular tridiagonal system: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise ConsistencyError("tridiagonal solve produced non-finite values")
    return x


@dataclass(frozen=True)
class MixedOperator:
    """Bands of -Laplacian with v'(0) = 0 and v(L) = b, plus the boundary load."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    load: np.ndarray

    def apply(self, v: np.ndarray) -> np.ndarray:
        """A v - load, i.e. -v'' including the boundary ghost values."""
        out = self.diag * v
        out[1:] += self.lower[1:] * v[:-1]
        out[:-1] += self.upper[:-1] * v[1:]
        return out - self.load


def neumann_dirichlet_operator(grid: Grid1D, b: float) -> MixedOperator:
    """Mirror ghost at x = 0, ghost 2b - v_{n-1} at x = L."""
    n = grid.n
    inv = 1.0 / grid.dx ** 2
    lower = np.full(n, -inv)
    upper = np.full(n, -inv)
    diag = np.full(n, 2.0 * inv)
    lower[0] = 0.0
    upper[-1] = 0.0
    diag[0] = inv
    diag[-1] = 3.0 * inv
    load = np.zeros(n)
    load[-1] = 2.0 * b * inv
    return MixedOperator(lower, diag, upper, load)
