"""Two-phase primal simplex for equality-constrained, nonnegative LPs.

Solves ``maximize c @ x  s.t.  A @ x == b, x >= 0`` on a dense tableau with
Bland's rule for both the entering and the leaving variable, so degenerate
problems (the norm for homogeneous feasibility systems) cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit"
    x: np.ndarray | None
    objective: float | None
    iterations: int
    phase1_objective: float


def _pivot(t: np.ndarray, row: int, col: int) -> None:
    t[row] /= t[row, col]
    col_vals = t[:, col].copy()
    col_vals[row] = 0.0
    t -= np.outer(col_vals, t[row])


def _run(t, basis, cost, allowed, tol, max_iter):
    """Minimise ``cost @ x`` over the current tableau. Returns (status, iterations)."""
    it = 0
    while it < max_iter:
        reduced = cost - cost[basis] @ t[:, :-1]
        candidates = np.flatnonzero((reduced < -tol) & allowed)
        if candidates.size == 0:
            return "optimal", it
        col = int(candidates[0])
        column = t[:, col]
        rows = np.flatnonzero(column > tol)
        if rows.size == 0:
            return "unbounded", it
        ratios = t[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(t, row, col)
        basis[row] = col
        it += 1
    return "iteration_limit", it


def solve_lp(a, b, c=None, tol: float = 1e-10, feas_tol: float = 1e-9, max_iter: int = 50_000) -> LPResult:
    a = np.array(a, dtype=float, ndmin=2)
    b = np.array(b, dtype=float).ravel()
    m, n = a.shape
    if b.shape[0] != m:
        raise ValueError("b length does not match number of constraint rows")
    c = np.zeros(n) if c is None else np.asarray(c, dtype=float)

    sign = np.where(b < 0, -1.0, 1.0)
    a = a * sign[:, None]
    b = b * sign

    # Phase 1: artificial identity block, minimise their sum.
    t = np.hstack([a, np.eye(m), b[:, None]])
    basis = list(range(n, n + m))
    cost1 = np.concatenate([np.zeros(n), np.ones(m)])
    allowed = np.ones(n + m, dtype=bool)
    status, it1 = _run(t, basis, cost1, allowed, tol, max_iter)
    phase1 = float(cost1[basis] @ t[:, -1])
    if status != "optimal":
        return LPResult(status, None, None, it1, phase1)
    if phase1 > feas_tol:
        return LPResult("infeasible", None, None, it1, phase1)

    # Drive remaining (zero-level) artificials out of the basis; drop redundant rows.
    keep_rows = []
    for r in range(m):
        if basis[r] < n:
            keep_rows.append(r)
            continue
        nz = np.flatnonzero(np.abs(t[r, :n]) > tol)
        if nz.size:
            _pivot(t, r, int(nz[0]))
            basis[r] = int(nz[0])
            keep_rows.append(r)
    t = t[keep_rows]
    basis = [basis[r] for r in keep_rows]

    # Phase 2 on the original columns only.
    cost2 = np.concatenate([-c, np.zeros(m)])
    allowed = np.concatenate([np.ones(n, dtype=bool), np.zeros(m, dtype=bool)])
    status, it2 = _run(t, basis, cost2, allowed, tol, max_iter - it1)
    x = np.zeros(n + m)
    x[basis] = t[:, -1]
    x = x[:n]
    if status != "optimal":
        return LPResult(status, x if status == "unbounded" else None, None, it1 + it2, phase1)
    return LPResult("optimal", x, float(c @ x), it1 + it2, phase1)
