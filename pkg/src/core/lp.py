"""
Linear programming layer.

Small problems run through a self-contained dense two-phase tableau simplex with
Bland's rule, so pivots and optimal vertices are reproducible. Grid-scale problems
(hundreds of points, tens of thousands of constraint rows) go to the HiGHS dual simplex
shipped with scipy.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from src.core.config import settings
from src.core.errors import LpInfeasibleError, LpUnboundedError, NumericalError

logger = logging.getLogger(__name__)

Bound = tuple[float | None, float | None]


@dataclass(frozen=True)
class LinearProgram:
    """minimize ``c @ x`` subject to ``a_ub @ x <= b_ub``, ``a_eq @ x == b_eq`` and bounds.

    Matrices may be dense arrays or scipy.sparse matrices. ``bounds=None`` means every
    variable is nonnegative.
    """

    c: np.ndarray
    a_ub: Any = None
    b_ub: np.ndarray | None = None
    a_eq: Any = None
    b_eq: np.ndarray | None = None
    bounds: Sequence[Bound] | None = None

    @property
    def n_vars(self) -> int:
        return int(np.asarray(self.c).shape[0])

    @property
    def n_ub(self) -> int:
        return 0 if self.a_ub is None else int(self.a_ub.shape[0])

    @property
    def n_eq(self) -> int:
        return 0 if self.a_eq is None else int(self.a_eq.shape[0])

    def variable_bounds(self) -> list[Bound]:
        if self.bounds is None:
            return [(0.0, None)] * self.n_vars
        if len(self.bounds) != self.n_vars:
            raise ValueError("bounds length does not match the number of variables")
        return list(self.bounds)


@dataclass(frozen=True)
class LpSolution:
    x: np.ndarray
    objective: float
    backend: str
    iterations: int


def _dense(matrix: Any, n_cols: int) -> np.ndarray:
    if matrix is None:
        return np.zeros((0, n_cols))
    if sparse.issparse(matrix):
        return matrix.toarray().astype(float)
    return np.asarray(matrix, dtype=float).reshape(-1, n_cols)


def _is_finite(value: float | None) -> bool:
    return value is not None and bool(np.isfinite(value))


def _standard_form(problem: LinearProgram):
    """Rewrite as ``min c_s @ s`` with ``A s = b``, ``s >= 0``.

    Returns the standard-form data plus the affine map ``x = offset + T @ s[:k]``.
    """
    n = problem.n_vars
    offset = np.zeros(n)
    entries: list[tuple[int, int, float]] = []
    upper_rows: list[tuple[int, float]] = []
    k = 0
    for j, (lo, hi) in enumerate(problem.variable_bounds()):
        if _is_finite(lo):
            offset[j] = lo
            entries.append((j, k, 1.0))
            if _is_finite(hi):
                upper_rows.append((k, float(hi) - float(lo)))
            k += 1
        elif _is_finite(hi):
            offset[j] = hi
            entries.append((j, k, -1.0))
            k += 1
        else:
            entries.append((j, k, 1.0))
            entries.append((j, k + 1, -1.0))
            k += 2
    transform = np.zeros((n, k))
    for j, col, val in entries:
        transform[j, col] = val

    a_ub = _dense(problem.a_ub, n)
    b_ub = np.zeros(0) if problem.b_ub is None else np.asarray(problem.b_ub, dtype=float)
    a_eq = _dense(problem.a_eq, n)
    b_eq = np.zeros(0) if problem.b_eq is None else np.asarray(problem.b_eq, dtype=float)

    ub_rows = a_ub @ transform
    ub_rhs = b_ub - a_ub @ offset
    if upper_rows:
        extra = np.zeros((len(upper_rows), k))
        for r, (col, cap) in enumerate(upper_rows):
            extra[r, col] = 1.0
        ub_rows = np.vstack([ub_rows, extra])
        ub_rhs = np.concatenate([ub_rhs, [cap for _, cap in upper_rows]])
    eq_rows = a_eq @ transform
    eq_rhs = b_eq - a_eq @ offset

    m_ub = ub_rows.shape[0]
    m_eq = eq_rows.shape[0]
    a_std = np.zeros((m_ub + m_eq, k + m_ub))
    a_std[:m_ub, :k] = ub_rows
    a_std[:m_ub, k:] = np.eye(m_ub)
    a_std[m_ub:, :k] = eq_rows
    b_std = np.concatenate([ub_rhs, eq_rhs])
    c = np.asarray(problem.c, dtype=float)
    c_std = np.concatenate([c @ transform, np.zeros(m_ub)])
    return a_std, b_std, c_std, transform, offset, k, float(c @ offset)


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    tableau[:, col] = 0.0
    tableau[row, col] = 1.0


def _run_bland(tableau: np.ndarray, basis: np.ndarray, n_cols: int, tol: float, limit: int) -> int:
    m = tableau.shape[0] - 1
    for iteration in range(limit):
        entering = np.flatnonzero(tableau[m, :n_cols] < -tol)
        if entering.size == 0:
            return iteration
        col = int(entering[0])
        column = tableau[:m, col]
        rows = np.flatnonzero(column > tol)
        if rows.size == 0:
            raise LpUnboundedError("objective unbounded below", {"column": col})
        ratios = tableau[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        row = int(ties[np.argmin(basis[ties])])
        _pivot(tableau, row, col)
        basis[row] = col
    raise NumericalError("simplex iteration limit reached", {"limit": limit})


def _dense_simplex(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, int]:
    tol = settings.simplex_pivot_tolerance
    limit = settings.simplex_max_iterations
    m, n = a.shape
    flip = np.where(b < 0, -1.0, 1.0)
    a = a * flip[:, None]
    b = b * flip

    tableau = np.zeros((m + 1, n + m + 1))
    tableau[:m, :n] = a
    tableau[:m, n : n + m] = np.eye(m)
    tableau[:m, -1] = b
    tableau[m, :n] = -a.sum(axis=0)
    tableau[m, -1] = -b.sum()
    basis = np.arange(n, n + m)

    iterations = _run_bland(tableau, basis, n + m, tol, limit)
    scale = 1.0 + (np.abs(b).max() if m else 0.0)
    if -tableau[m, -1] > settings.lp_feasibility_tolerance * scale:
        raise LpInfeasibleError(
            "phase one ended with positive artificial mass",
            {"artificial_mass": float(-tableau[m, -1])},
        )

    # drive artificial variables out of the basis; drop redundant rows
    redundant = []
    for row in range(m):
        if basis[row] < n:
            continue
        candidates = np.flatnonzero(np.abs(tableau[row, :n]) > tol)
        if candidates.size == 0:
            redundant.append(row)
            continue
        col = int(candidates[0])
        _pivot(tableau, row, col)
        basis[row] = col
    if redundant:
        tableau = np.delete(tableau, redundant, axis=0)
        basis = np.delete(basis, redundant)

    tableau = np.hstack([tableau[:, :n], tableau[:, -1:]])
    tableau[-1, :] = 0.0
    tableau[-1, :n] = c
    for row, var in enumerate(basis):
        tableau[-1] -= c[var] * tableau[row]
    iterations += _run_bland(tableau, basis, n, tol, limit)

    x = np.zeros(n)
    x[basis] = np.maximum(tableau[:-1, -1], 0.0)
    return x, iterations


def _solve_simplex(problem: LinearProgram) -> LpSolution:
    a, b, c, transform, offset, k, constant = _standard_form(problem)
    s, iterations = _dense_simplex(a, b, c)
    x = offset + transform @ s[:k]
    return LpSolution(
        x=x,
        objective=float(np.asarray(problem.c, dtype=float) @ x),
        backend="simplex",
        iterations=iterations,
    )


def _solve_highs(problem: LinearProgram) -> LpSolution:
    tol = settings.lp_feasibility_tolerance
    result = linprog(
        np.asarray(problem.c, dtype=float),
        A_ub=problem.a_ub,
        b_ub=problem.b_ub,
        A_eq=problem.a_eq,
        b_eq=problem.b_eq,
        bounds=problem.variable_bounds(),
        method="highs-ds",
        options={"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol},
    )
    diagnostics = {"status": int(result.status), "message": str(result.message)}
    if result.status == 2:
        raise LpInfeasibleError("HiGHS reports an infeasible problem", diagnostics)
    if result.status == 3:
        raise LpUnboundedError("HiGHS reports an unbounded problem", diagnostics)
    if result.status != 0:
        raise NumericalError("HiGHS did not converge", diagnostics)
    return LpSolution(
        x=np.asarray(result.x, dtype=float),
        objective=float(result.fun),
        backend="highs",
        iterations=int(getattr(result, "nit", 0) or 0),
    )


def tableau_cells(problem: LinearProgram) -> int:
    """Size of the dense phase-one tableau the simplex backend would allocate."""
    bounds = problem.variable_bounds()
    n_std = sum(1 if (_is_finite(lo) or _is_finite(hi)) else 2 for lo, hi in bounds)
    upper = sum(1 for lo, hi in bounds if _is_finite(lo) and _is_finite(hi))
    m_ub = problem.n_ub + upper
    rows = m_ub + problem.n_eq
    return (rows + 1) * (n_std + m_ub + rows + 1)


def solve_lp(problem: LinearProgram, backend: str | None = None) -> LpSolution:
    """Solve ``problem`` with the requested backend (``auto`` picks by tableau size)."""
    backend = backend or settings.lp_backend
    if backend == "auto":
        backend = "simplex" if tableau_cells(problem) <= settings.simplex_max_cells else "highs"
    logger.debug(
        f"LP {problem.n_vars} vars, {problem.n_ub} ub rows, {problem.n_eq} eq rows -> {backend}"
    )
    if backend == "simplex":
        return _solve_simplex(problem)
    if backend == "highs":
        return _solve_highs(problem)
    raise ValueError(f"unknown LP backend {backend!r}")
