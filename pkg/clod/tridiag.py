"""
Batched tridiagonal solver (Thomas algorithm)
"""

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from clod.errors import SingularSystemError

__all__ = ["TridiagonalSystem", "thomas_solve", "thomas_solve_lines"]

PIVOT_FLOOR = 1e-300


@dataclass(frozen=True)
class TridiagonalSystem:
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if len(self.rhs) != n:
            raise ValueError("rhs must have the same length as diag")
        if len(self.lower) != max(n - 1, 0) or len(self.upper) != max(n - 1, 0):
            raise ValueError("lower and upper must have length N-1")

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[1:] += self.lower * x[:-1]
        y[:-1] += self.upper * x[1:]
        return y


def thomas_solve(sys: TridiagonalSystem) -> np.ndarray:
    '''Solves A x = r for a single tridiagonal system.

    Parameters:
        sys (TridiagonalSystem) : lower (N-1), diag (N), upper (N-1), rhs (N)

    Returns:
        x (ndarray) : solution; the inputs are left untouched
    '''
    n = len(sys.diag)
    lower = np.zeros((1, n))
    upper = np.zeros((1, n))
    lower[0, 1:] = sys.lower
    upper[0, :-1] = sys.upper
    return thomas_solve_lines(
        lower, np.asarray(sys.diag, dtype=float)[None, :], upper,
        np.asarray(sys.rhs, dtype=float)[None, :],
    )[0]


def thomas_solve_lines(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    '''Solves many independent tridiagonal systems, one per row.

    All arguments are (L, N) arrays. Row ``q`` of ``lower`` holds the
    sub-diagonal with ``lower[q, 0]`` unused; ``upper[q, N-1]`` is unused.

    Raises:
        SingularSystemError : a pivot fell below 1e-300 in magnitude
    '''
    if lower.ndim != 2 or diag.shape != lower.shape or upper.shape != lower.shape:
        raise ValueError("lower, diag and upper must be (L, N) arrays of one shape")
    if rhs.shape != diag.shape:
        raise ValueError("rhs must match the coefficient shape")
    out = np.empty(diag.shape)
    if out.size == 0:
        return out
    status = np.full(diag.shape[0], -1, dtype=np.int64)
    _thomas_lines(
        np.ascontiguousarray(lower, dtype=np.float64),
        np.ascontiguousarray(diag, dtype=np.float64),
        np.ascontiguousarray(upper, dtype=np.float64),
        np.ascontiguousarray(rhs, dtype=np.float64),
        out, status,
    )
    bad = np.nonzero(status >= 0)[0]
    if bad.size:
        raise SingularSystemError(int(bad[0]))
    return out


@njit(parallel=True, cache=True)
def _thomas_lines(a, b, c, d, x, status):
    n_lines, n = b.shape
    for q in prange(n_lines):
        cp = np.empty(n)
        pivot = b[q, 0]
        if abs(pivot) < PIVOT_FLOOR:
            status[q] = 0
            continue
        cp[0] = c[q, 0] / pivot
        x[q, 0] = d[q, 0] / pivot
        failed = False
        for i in range(1, n):
            pivot = b[q, i] - a[q, i] * cp[i - 1]
            if abs(pivot) < PIVOT_FLOOR:
                status[q] = i
                failed = True
                break
            cp[i] = c[q, i] / pivot
            x[q, i] = (d[q, i] - a[q, i] * x[q, i - 1]) / pivot
        if failed:
            continue
        for i in range(n - 2, -1, -1):
            x[q, i] -= cp[i] * x[q, i + 1]
