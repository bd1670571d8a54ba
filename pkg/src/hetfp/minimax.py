"""Exact values of finite zero-sum matrix games.

The row player maximizes and the column player minimizes throughout.
minimax_value solves the shifted linear program with a dense-tableau
simplex using Bland's rule; support_enumeration solves small games by
checking square supports and serves as an independent cross-check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-9

# Pivot admission threshold for the tableau; unrelated to the duality-gap
# tolerance reported to callers.
_PIVOT_TOL = 1e-10
_MAX_PIVOTS = 10000


class SolverError(RuntimeError):
    """Raised when a matrix game cannot be solved to tolerance."""

    def __init__(self, message: str, matrix=None):
        super().__init__(message)
        self.matrix = None if matrix is None else np.array(matrix, dtype=np.float64)


@dataclass(frozen=True)
class MinimaxSolution:
    """Value and a pair of optimal mixed strategies for one matrix game.

    gap is the duality certificate max_i (M y)_i - min_j (x^T M)_j, which is
    nonnegative and bounded by the solve tolerance.
    """

    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray
    gap: float


def _check_matrix(matrix) -> np.ndarray:
    M = np.asarray(matrix, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise ValueError(f"matrix must be 2-d and nonempty, got shape {M.shape}")
    if not np.isfinite(M).all():
        raise ValueError("matrix contains non-finite entries")
    return M


def _certificate_gap(M: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    return float((M @ y).max() - (x @ M).min())


def _clean_strategy(p: np.ndarray) -> np.ndarray:
    p = np.maximum(p, 0.0)
    total = p.sum()
    if total <= 0.0:
        raise SolverError("degenerate strategy with zero mass")
    return p / total


def minimax_value(matrix, tol: float = DEFAULT_TOL) -> MinimaxSolution:
    """Solve max_x min_y x^T M y by linear programming.

    The matrix is shifted to have all entries >= 1, then
    max { 1^T w : M' w <= 1, w >= 0 } is solved by primal simplex with
    Bland's smallest-index rule, which cannot cycle.  The column strategy
    is the rescaled primal solution, the row strategy the rescaled duals
    read off the slack reduced costs, and the game value is recovered by
    undoing the shift.
    """
    M = _check_matrix(matrix)
    m, n = M.shape
    shift = 1.0 - float(M.min())
    Mp = M + shift

    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = Mp
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = 1.0
    T[m, :n] = -1.0
    basis = list(range(n, n + m))

    for _ in range(_MAX_PIVOTS):
        enter = -1
        for j in range(n + m):
            if T[m, j] < -_PIVOT_TOL:
                enter = j
                break
        if enter < 0:
            break
        leave = -1
        best_ratio = np.inf
        for i in range(m):
            if T[i, enter] > _PIVOT_TOL:
                ratio = T[i, -1] / T[i, enter]
                if leave < 0:
                    best_ratio = ratio
                    leave = i
                    continue
                band = 1e-12 * max(1.0, abs(best_ratio))
                if ratio < best_ratio - band:
                    best_ratio = ratio
                    leave = i
                elif ratio <= best_ratio + band and basis[i] < basis[leave]:
                    # ratio tie: Bland picks the smallest basic index
                    best_ratio = min(best_ratio, ratio)
                    leave = i
        if leave < 0:
            raise SolverError("objective unbounded; constraint matrix is invalid", M)
        piv = T[leave, enter]
        T[leave, :] /= piv
        for i in range(m + 1):
            if i != leave and T[i, enter] != 0.0:
                T[i, :] -= T[i, enter] * T[leave, :]
        basis[leave] = enter
    else:
        raise SolverError(f"simplex did not terminate within {_MAX_PIVOTS} pivots", M)

    w = np.zeros(n)
    for i, b in enumerate(basis):
        if b < n:
            w[b] = T[i, -1]
    u = T[m, n : n + m].copy()
    w_total = w.sum()
    u_total = u.sum()
    if w_total <= 0.0 or u_total <= 0.0:
        raise SolverError("simplex returned a zero-mass solution", M)

    col = _clean_strategy(w)
    row = _clean_strategy(u)
    value = 1.0 / w_total - shift
    gap = _certificate_gap(M, row, col)
    if not gap <= tol:
        raise SolverError(f"duality gap {gap:.3e} exceeds tolerance {tol:.3e}", M)
    return MinimaxSolution(value=value, row_strategy=row, col_strategy=col, gap=gap)


def support_enumeration(matrix, tol: float = DEFAULT_TOL) -> MinimaxSolution:
    """Solve a matrix game no larger than 5x5 by enumerating square supports.

    For each equal-size support pair the two indifference systems are
    solved, then the candidate is kept only if it passes the saddle-point
    inequalities against every pure action.  Extreme optimal strategies of
    a matrix game live on square submatrices, so equal sizes suffice.
    Supports are scanned in lexicographic order and the first valid pair is
    returned, which makes the function deterministic.
    """
    M = _check_matrix(matrix)
    m, n = M.shape
    if m > 5 or n > 5:
        raise ValueError(f"support enumeration is limited to 5x5, got {M.shape}")
    feas_tol = 1e-9
    saddle_tol = max(tol, 1e-9)

    for k in range(1, min(m, n) + 1):
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.combinations(range(n), k):
                A = np.zeros((k + 1, k + 1))
                b = np.zeros(k + 1)
                for jj, j in enumerate(cols):
                    A[jj, :k] = M[list(rows), j]
                    A[jj, k] = -1.0
                A[k, :k] = 1.0
                b[k] = 1.0
                B = np.zeros((k + 1, k + 1))
                for ii, i in enumerate(rows):
                    B[ii, :k] = M[i, list(cols)]
                    B[ii, k] = -1.0
                B[k, :k] = 1.0
                try:
                    xv = np.linalg.solve(A, b)
                    yv = np.linalg.solve(B, b)
                except np.linalg.LinAlgError:
                    continue
                x_sub, v_row = xv[:k], xv[k]
                y_sub, v_col = yv[:k], yv[k]
                if abs(v_row - v_col) > saddle_tol:
                    continue
                if (x_sub < -feas_tol).any() or (y_sub < -feas_tol).any():
                    continue
                value = 0.5 * (v_row + v_col)
                x = np.zeros(m)
                x[list(rows)] = x_sub
                y = np.zeros(n)
                y[list(cols)] = y_sub
                x = _clean_strategy(x)
                y = _clean_strategy(y)
                if (M @ y).max() > value + saddle_tol:
                    continue
                if (x @ M).min() < value - saddle_tol:
                    continue
                return MinimaxSolution(
                    value=float(value),
                    row_strategy=x,
                    col_strategy=y,
                    gap=_certificate_gap(M, x, y),
                )
    raise SolverError("no square support passed the saddle test", M)


def expected_payoff(matrix, row_strategy, col_strategy) -> float:
    """Bilinear payoff x^T M y to the row player."""
    M = _check_matrix(matrix)
    x = np.asarray(row_strategy, dtype=np.float64)
    y = np.asarray(col_strategy, dtype=np.float64)
    if x.shape != (M.shape[0],) or y.shape != (M.shape[1],):
        raise ValueError(
            f"strategy shapes {x.shape}, {y.shape} do not match matrix {M.shape}"
        )
    return float(x @ M @ y)
