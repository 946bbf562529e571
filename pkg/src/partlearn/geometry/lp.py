"""Small dense linear programming: two-phase simplex, Chebyshev centers.

The instances solved here are tiny (tens of rows), so a textbook tableau
simplex with Bland's rule is plenty.  Everything is double precision with a
fixed feasibility tolerance.
"""

from __future__ import annotations

import numpy as np

from ..predicates import ETA
from .polytope import HPolytope

_LP_TOL = 1e-9


class LPError(Exception):
    pass


class LPInfeasible(LPError):
    pass


class LPUnbounded(LPError):
    pass


def _pivot(T: np.ndarray, r: int, c: int) -> None:
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _simplex_phase(T: np.ndarray, basis: list, ncols: int, tol: float) -> None:
    """Run simplex iterations on tableau T until optimal (Bland's rule)."""
    max_iter = 2000 + 50 * T.shape[0] * ncols
    for _ in range(max_iter):
        # entering variable: smallest index with negative reduced cost
        enter = -1
        for j in range(ncols):
            if T[0, j] < -tol:
                enter = j
                break
        if enter < 0:
            return
        # ratio test, Bland tie-break on variable index
        leave = -1
        best = np.inf
        for i in range(1, T.shape[0]):
            a = T[i, enter]
            if a > tol:
                ratio = T[i, -1] / a
                if ratio < best - tol or (abs(ratio - best) <= tol and (leave < 0 or basis[i - 1] < basis[leave - 1])):
                    best = ratio
                    leave = i
        if leave < 0:
            # last resort before declaring unbounded: accept a tiny pivot
            # (degenerate tableaus from near-parallel rows shave entries
            # down to rounding noise)
            col = T[1:, enter]
            i = int(np.argmax(col))
            if col[i] > 1e-12:
                leave = i + 1
            else:
                raise LPUnbounded("unbounded linear program")
        _pivot(T, leave, enter)
        basis[leave - 1] = enter
    raise LPError("simplex iteration cap exceeded")


def solve_lp_standard(c: np.ndarray, A: np.ndarray, b: np.ndarray):
    """Minimize c @ x subject to A x = b, x >= 0.  Returns (value, x).

    Two-phase tableau simplex; raises LPInfeasible / LPUnbounded.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float)).copy()
    c = np.atleast_1d(np.asarray(c, dtype=float))
    nrow, ncol = A.shape
    A = A.copy()
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # phase 1: artificial variables
    T = np.zeros((nrow + 1, ncol + nrow + 1))
    T[1:, :ncol] = A
    T[1:, ncol:ncol + nrow] = np.eye(nrow)
    T[1:, -1] = b
    T[0, :ncol] = -A.sum(axis=0)
    T[0, -1] = -b.sum()
    basis = list(range(ncol, ncol + nrow))
    _simplex_phase(T, basis, ncol + nrow, _LP_TOL)
    if T[0, -1] < -1e-7:
        raise LPInfeasible("infeasible linear program")
    # drive leftover artificials out of the basis where possible
    for i, bi in enumerate(basis):
        if bi >= ncol:
            row = i + 1
            for j in range(ncol):
                if abs(T[row, j]) > 1e-7:
                    _pivot(T, row, j)
                    basis[i] = j
                    break

    # phase 2
    T2 = np.zeros((nrow + 1, ncol + 1))
    T2[1:, :ncol] = T[1:, :ncol]
    T2[1:, -1] = T[1:, -1]
    T2[0, :ncol] = c
    for i, bi in enumerate(basis):
        if bi < ncol:
            T2[0] -= T2[0, bi] * T2[i + 1]
    _simplex_phase(T2, basis, ncol, _LP_TOL)
    x = np.zeros(ncol)
    for i, bi in enumerate(basis):
        if bi < ncol:
            x[bi] = T2[i + 1, -1]
    return float(c @ x), x


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, n_free=None):
    """Minimize c @ x with A_ub x <= b_ub, A_eq x = b_eq, x free.

    Free variables are split internally.  Returns (value, x).
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    n = c.size
    rows = []
    rhs = []
    slacks = 0
    if A_ub is not None and len(np.atleast_2d(A_ub)):
        A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
        b_ub = np.atleast_1d(np.asarray(b_ub, dtype=float))
        slacks = A_ub.shape[0]
    if A_eq is not None and len(np.atleast_2d(A_eq)) == 0:
        A_eq = None
    neq = 0
    if A_eq is not None:
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
        b_eq = np.atleast_1d(np.asarray(b_eq, dtype=float))
        neq = A_eq.shape[0]

    ncol = 2 * n + slacks
    Afull = np.zeros((slacks + neq, ncol))
    bfull = np.zeros(slacks + neq)
    if slacks:
        Afull[:slacks, :n] = A_ub
        Afull[:slacks, n:2 * n] = -A_ub
        Afull[:slacks, 2 * n:2 * n + slacks] = np.eye(slacks)
        bfull[:slacks] = b_ub
    if neq:
        Afull[slacks:, :n] = A_eq
        Afull[slacks:, n:2 * n] = -A_eq
        bfull[slacks:] = b_eq
    cfull = np.concatenate([c, -c, np.zeros(slacks)])
    val, xfull = solve_lp_standard(cfull, Afull, bfull)
    x = xfull[:n] - xfull[n:2 * n]
    return float(c @ x), x


def _merge_parallel_rows(normals: np.ndarray, offsets: np.ndarray, tol: float = 1e-7):
    """Collapse rows whose unit normals agree to within tol, keeping the
    largest offset (the binding one for >= constraints)."""
    keep_n, keep_b = [], []
    for a, b in zip(normals, offsets):
        for i, a2 in enumerate(keep_n):
            if np.abs(a - a2).max() <= tol:
                keep_b[i] = max(keep_b[i], b)
                break
        else:
            keep_n.append(a)
            keep_b.append(b)
    return np.array(keep_n), np.array(keep_b)


def chebyshev(p: HPolytope):
    """Thickness and a deepest point of an H-polytope.

    Maximizes r subject to ``normal . x >= offset + r`` over all rows (the
    largest inscribed l2 ball).  Lower-dimensional or empty sets report
    radius 0; a set whose inscribed radius is unbounded raises ValueError.
    """
    m = p.dim
    # merge near-parallel rows, keeping the tighter offset; simplicial facet
    # forms repeat coplanar planes with tiny numeric spread, which makes the
    # tableau degenerate
    normals, offsets = _merge_parallel_rows(p.normals, p.offsets)
    # variables (x, r); maximize r  ->  minimize -r
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-normals, np.ones((len(normals), 1))])
    b_ub = -offsets
    try:
        _, sol = solve_lp(c, A_ub=A_ub, b_ub=b_ub)
    except LPUnbounded:
        raise ValueError("unbounded region")
    except LPInfeasible:
        return 0.0, None
    r = float(sol[-1])
    if r < 0:
        # infeasible within tolerance: empty set
        return 0.0, None
    center = sol[:m]
    return max(r, 0.0), center


def l1_distance_to_hull(x: np.ndarray, vertices: np.ndarray):
    """l1 distance from x to conv(vertices), via a small LP.

    Minimizes ||x - V^T lam||_1 over convex weights lam.  Returns
    (distance, witness point).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    v, m = V.shape
    if v == 0:
        return np.inf, None
    if m == 0:
        return 0.0, x.copy()
    # variables: lam (v) >= 0, t (m) >= 0
    # constraints:  V^T lam - t <= x ;  -V^T lam - t <= -x ;  sum lam = 1
    n = v + m
    c = np.concatenate([np.zeros(v), np.ones(m)])
    A_ub = np.zeros((2 * m, n))
    A_ub[:m, :v] = V.T
    A_ub[:m, v:] = -np.eye(m)
    A_ub[m:, :v] = -V.T
    A_ub[m:, v:] = -np.eye(m)
    b_ub = np.concatenate([x, -x])
    A_eq = np.zeros((1, n))
    A_eq[0, :v] = 1.0
    # nonnegativity folded in as inequality rows
    A_nn = -np.eye(n)
    b_nn = np.zeros(n)
    val, sol = solve_lp(c, A_ub=np.vstack([A_ub, A_nn]), b_ub=np.concatenate([b_ub, b_nn]),
                        A_eq=A_eq, b_eq=np.array([1.0]))
    lam = np.clip(sol[:v], 0.0, None)
    s = lam.sum()
    lam = lam / s if s > ETA else np.full(v, 1.0 / v)
    witness = V.T @ lam
    return max(float(val), 0.0), witness
