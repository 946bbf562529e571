"""Convex hulls and nearest-point computations on V-polytopes.

Projection onto a vertex hull uses pairwise (away-step) conditional-gradient
descent, which is dimension agnostic and converges linearly; hulls of at
most three vertices use exact point/segment/triangle formulas instead.
Canonicalization keeps a vertex iff its distance to the hull of the others
exceeds the predicate tolerance; full-dimensional point sets take a Qhull
fast path that yields the same vertex set.
"""

from __future__ import annotations

import numpy as np

from ..predicates import ETA, as_point
from .polytope import VPolytope, empty_polytope

try:  # scipy is an optional accelerator here; all paths have fallbacks
    from scipy.spatial import ConvexHull as _QHull
    from scipy.spatial import QhullError as _QhullError
except ImportError:  # pragma: no cover
    try:
        from scipy.spatial import ConvexHull as _QHull
        from scipy.spatial.qhull import QhullError as _QhullError
    except ImportError:
        _QHull = None
        _QhullError = Exception

_FW_MAX_ITER = 400


def _project_segment(x: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    dd = float(d @ d)
    if dd <= ETA * ETA:
        return a
    t = float((x - a) @ d) / dd
    return a + min(max(t, 0.0), 1.0) * d


def _project_triangle(x: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    # Ericson-style point/triangle projection, valid in any ambient dimension.
    ab, ac, ap = b - a, c - a, x - a
    d1, d2 = float(ab @ ap), float(ac @ ap)
    if d1 <= 0 and d2 <= 0:
        return a
    bp = x - b
    d3, d4 = float(ab @ bp), float(ac @ bp)
    if d3 >= 0 and d4 <= d3:
        return b
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        denom = d1 - d3
        return a + (d1 / denom) * ab if denom > 0 else a
    cp = x - c
    d5, d6 = float(ab @ cp), float(ac @ cp)
    if d6 >= 0 and d5 <= d6:
        return c
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        denom = d2 - d6
        return a + (d2 / denom) * ac if denom > 0 else a
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        denom = (d4 - d3) + (d5 - d6)
        return b + ((d4 - d3) / denom) * (c - b) if denom > 0 else b
    # interior: solve the 2x2 normal equations on the triangle plane
    g = np.array([[ab @ ab, ab @ ac], [ab @ ac, ac @ ac]], dtype=float)
    rhs = np.array([d1, d2])
    try:
        uv = np.linalg.solve(g, rhs)
        u, v = float(uv[0]), float(uv[1])
        if u >= -ETA and v >= -ETA and u + v <= 1 + ETA:
            return a + u * ab + v * ac
    except np.linalg.LinAlgError:
        pass
    return a


def project_onto_hull_batch(V: np.ndarray, X: np.ndarray, tol: float = 1e-9,
                            max_iter: int = _FW_MAX_ITER) -> np.ndarray:
    """Nearest points in conv(V) to each row of X via pairwise Frank-Wolfe.

    Vectorized over query points; stops per point when the duality gap
    certifies the distance estimate (always an upper bound) is within the
    absolute tolerance tol of the true distance.
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    v, m = V.shape
    n = X.shape[0]
    if v == 0:
        raise ValueError("empty hull")
    if m == 0 or v == 1:
        return np.repeat(V[:1], n, axis=0)
    if v == 2:
        return np.vstack([_project_segment(x, V[0], V[1]) for x in X])
    if v == 3:
        return np.vstack([_project_triangle(x, V[0], V[1], V[2]) for x in X])

    # start from the nearest vertex per query
    d2 = ((X[:, None, :] - V[None, :, :]) ** 2).sum(axis=2) if v * n * m <= 4e7 else None
    if d2 is None:
        start = np.empty(n, dtype=int)
        for i in range(n):
            start[i] = int(np.argmin(((X[i] - V) ** 2).sum(axis=1)))
    else:
        start = np.argmin(d2, axis=1)
    lam = np.zeros((n, v))
    lam[np.arange(n), start] = 1.0
    Z = V[start].copy()
    active = np.arange(n)
    # dist error <= sqrt(2 * gap); the floor keeps the target reachable in
    # double precision (stalled points return sound upper estimates)
    gap_stop = max(0.5 * tol * tol, 1e-17)
    for _ in range(max_iter):
        if active.size == 0:
            break
        G = Z[active] - X[active]                     # gradient/2
        scores = G @ V.T                              # (na, v)
        s_idx = np.argmin(scores, axis=1)
        gap = (G * Z[active]).sum(axis=1) - scores[np.arange(active.size), s_idx]
        done = gap <= gap_stop
        if np.any(done):
            keep = ~done
            active = active[keep]
            if active.size == 0:
                break
            G = G[keep]
            scores = scores[keep]
            s_idx = s_idx[keep]
        masked = np.where(lam[active] > 1e-14, scores, -np.inf)
        a_idx = np.argmax(masked, axis=1)
        D = V[s_idx] - V[a_idx]
        dd = (D * D).sum(axis=1)
        stalled = dd <= 1e-30
        if stalled.any():
            # toward-vertex and away-vertex coincide: already optimal here
            active = active[~stalled]
            if active.size == 0:
                break
            D, dd = D[~stalled], dd[~stalled]
            G, s_idx, a_idx = G[~stalled], s_idx[~stalled], a_idx[~stalled]
        step = -(G * D).sum(axis=1) / dd
        amax = lam[active, a_idx]
        step = np.clip(step, 0.0, amax)
        lam[active, s_idx] += step
        lam[active, a_idx] -= step
        Z[active] += step[:, None] * D
    return Z


def _segment_dist_batch(X: np.ndarray, A: np.ndarray, B: np.ndarray,
                        return_points: bool = False):
    """(N, E) distances from each point to each segment."""
    D = B - A
    dd = (D * D).sum(axis=1)
    dd = np.where(dd < 1e-30, 1.0, dd)
    AP = X[:, None, :] - A[None, :, :]
    t = np.clip((AP * D[None, :, :]).sum(axis=2) / dd[None, :], 0.0, 1.0)
    P = A[None, :, :] + t[:, :, None] * D[None, :, :]
    dist = np.linalg.norm(X[:, None, :] - P, axis=2)
    if return_points:
        return dist, P
    return dist


def _triangle_dist_batch(X: np.ndarray, tris: np.ndarray,
                         return_points: bool = False):
    """(N, T) distances from each point to each triangle (any ambient dim).

    Vectorized Voronoi-region point/triangle classification.
    """
    A, B, C = tris[:, 0, :], tris[:, 1, :], tris[:, 2, :]
    ab, ac, bc = B - A, C - A, C - B
    AP = X[:, None, :] - A[None, :, :]
    BP = X[:, None, :] - B[None, :, :]
    CP = X[:, None, :] - C[None, :, :]
    d1 = (AP * ab[None]).sum(2)
    d2 = (AP * ac[None]).sum(2)
    d3 = (BP * ab[None]).sum(2)
    d4 = (BP * ac[None]).sum(2)
    d5 = (CP * ab[None]).sum(2)
    d6 = (CP * ac[None]).sum(2)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    with np.errstate(divide="ignore", invalid="ignore"):
        t_ab = np.clip(d1 / np.where(np.abs(d1 - d3) < 1e-30, 1.0, d1 - d3), 0.0, 1.0)
        t_ac = np.clip(d2 / np.where(np.abs(d2 - d6) < 1e-30, 1.0, d2 - d6), 0.0, 1.0)
        den_bc = (d4 - d3) + (d5 - d6)
        t_bc = np.clip((d4 - d3) / np.where(np.abs(den_bc) < 1e-30, 1.0, den_bc), 0.0, 1.0)
        den = va + vb + vc
        den = np.where(np.abs(den) < 1e-30, 1.0, den)
        v_in = vb / den
        w_in = vc / den

    P = A[None] + v_in[:, :, None] * ab[None] + w_in[:, :, None] * ac[None]
    r6 = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
    P = np.where(r6[:, :, None], B[None] + t_bc[:, :, None] * bc[None], P)
    r5 = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    P = np.where(r5[:, :, None], A[None] + t_ac[:, :, None] * ac[None], P)
    r4 = (d6 >= 0) & (d5 <= d6)
    P = np.where(r4[:, :, None], C[None] * np.ones_like(P), P)
    r3 = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    P = np.where(r3[:, :, None], A[None] + t_ab[:, :, None] * ab[None], P)
    r2 = (d3 >= 0) & (d4 <= d3)
    P = np.where(r2[:, :, None], B[None] * np.ones_like(P), P)
    r1 = (d1 <= 0) & (d2 <= 0)
    P = np.where(r1[:, :, None], A[None] * np.ones_like(P), P)
    dist = np.linalg.norm(X[:, None, :] - P, axis=2)
    if return_points:
        return dist, P
    return dist


def distance_to_hull(x, p, norm: str = "l2"):
    """Distance from a point to conv(vertices of p) with a witness point.

    Returns (dist, witness); the empty polytope gives (inf, None).
    """
    if isinstance(p, VPolytope):
        V = p.vertices
    else:
        V = np.atleast_2d(np.asarray(p, dtype=float))
    x = as_point(x)
    if V.shape[0] == 0:
        return np.inf, None
    if V.shape[1] != x.size:
        raise ValueError("dimension mismatch")
    if x.size == 0:
        return 0.0, x.copy()
    if norm == "l1":
        from .lp import l1_distance_to_hull
        return l1_distance_to_hull(x, V)
    if norm != "l2":
        raise ValueError("norm must be 'l2' or 'l1'")
    if V.shape[0] <= 3:
        z = project_onto_hull_batch(V, x[None, :])[0]
        return float(np.linalg.norm(x - z)), z
    d, W = PointHull(V).project(x[None, :])
    return float(d[0]), W[0]


def _canonical_by_distance(pts: np.ndarray) -> np.ndarray:
    """Keep each point iff it is > ETA from the hull of the others."""
    keep = list(range(pts.shape[0]))
    i = 0
    while i < len(keep) and len(keep) > 1:
        idx = keep[i]
        others = pts[[j for j in keep if j != idx]]
        d, _ = distance_to_hull(pts[idx], VPolytope(others))
        if d <= ETA:
            keep.pop(i)
        else:
            i += 1
    return pts[keep]


def convex_hull(points) -> VPolytope:
    """Canonical vertex list of the hull of a point set; idempotent.

    Interior and duplicate points are removed.  Full-dimensional sets in
    dimension >= 2 go through Qhull; degenerate sets fall back to the
    distance rule.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1) if pts.size else pts.reshape(0, 0)
    if pts.shape[0] == 0:
        return empty_polytope(pts.shape[1] if pts.ndim == 2 else 0)
    m = pts.shape[1]
    # drop exact duplicates early
    pts = np.unique(np.round(pts / ETA) * ETA, axis=0) if pts.shape[0] > 1 else pts
    if m == 0 or pts.shape[0] == 1:
        return VPolytope(pts[:1])
    if m == 1:
        lo, hi = float(pts.min()), float(pts.max())
        if hi - lo <= ETA:
            return VPolytope(np.array([[lo]]))
        return VPolytope(np.array([[lo], [hi]]))
    if _QHull is not None and pts.shape[0] > m + 1:
        try:
            hull = _QHull(pts)
            return VPolytope(pts[np.sort(hull.vertices)])
        except (_QhullError, ValueError):
            pass  # degenerate: fall through to the distance rule
    return VPolytope(_canonical_by_distance(pts))


class PointHull:
    """Distance queries against the hull of a point set, with cheap bounds.

    Precomputes a facet form via Qhull when the set is full-dimensional, and
    factors out coordinates that are constant across the set (cross-section
    nets are flat in their section coordinate).  Distances are l2.
    """

    def __init__(self, points: np.ndarray):
        P = np.atleast_2d(np.asarray(points, dtype=float))
        if P.ndim != 2:
            P = P.reshape(len(P), -1)
        self.points = P
        self.m = P.shape[1]
        self.is_empty = P.shape[0] == 0
        self._const_axes = np.zeros(0, dtype=int)
        self._const_vals = np.zeros(0)
        self._var_axes = np.arange(self.m)
        self._sub = None          # reduced point set on varying axes
        self._facets = None       # (A, b) with A x <= b on varying axes
        if self.is_empty:
            return
        span = P.max(axis=0) - P.min(axis=0)
        const = span <= ETA
        if const.any() and self.m > 0:
            self._const_axes = np.where(const)[0]
            self._const_vals = P[0, self._const_axes]
            self._var_axes = np.where(~const)[0]
        self._sub = P[:, self._var_axes]
        self._upper_pts = P
        k = self._sub.shape[1]
        self._surface = None      # boundary simplices on varying axes
        if _QHull is not None and k >= 2 and P.shape[0] >= k + 1:
            try:
                hull = _QHull(self._sub)
                eq = hull.equations  # A x + b <= 0 with unit A rows
                self._facets = (eq[:, :-1], -eq[:, -1])
                if k <= 3:
                    self._surface = self._sub[hull.simplices]
                self._sub = self._sub[np.sort(hull.vertices)]
            except (_QhullError, ValueError):
                self._facets = None
        elif k == 1:
            lo, hi = float(self._sub.min()), float(self._sub.max())
            self._facets = (np.array([[1.0], [-1.0]]), np.array([hi, -lo]))
            self._sub = np.array([[lo], [hi]])
        # densify the upper-bound sample with pair midpoints so cells deep
        # inside the hull prune without exact projections
        v = self.points.shape[0]
        if 1 < v <= 40 and self.m:
            ii, jj = np.triu_indices(v, k=1)
            mids = 0.5 * (self.points[ii] + self.points[jj])
            self._upper_pts = np.vstack([self.points, mids])

    def _split(self, X: np.ndarray):
        Xv = X[:, self._var_axes]
        if self._const_axes.size:
            axial2 = ((X[:, self._const_axes] - self._const_vals) ** 2).sum(axis=1)
        else:
            axial2 = np.zeros(X.shape[0])
        return Xv, axial2

    def upper_bounds(self, X: np.ndarray) -> np.ndarray:
        """Distance to the nearest sampled hull point (>= true hull distance)."""
        if self.is_empty:
            return np.full(X.shape[0], np.inf)
        X = np.atleast_2d(X)
        pts = self._upper_pts
        out = np.empty(X.shape[0])
        chunk = max(1, int(4e6 // max(1, pts.shape[0])))
        for s in range(0, X.shape[0], chunk):
            blk = X[s:s + chunk]
            d2 = ((blk[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
            out[s:s + chunk] = np.sqrt(d2.min(axis=1))
        return out

    def contains_boxes(self, los: np.ndarray, his: np.ndarray) -> np.ndarray:
        """Mask of axis-aligned boxes wholly inside the hull.

        Uses the facet form on the varying axes; boxes must be flat to
        within tolerance on the hull's constant axes to qualify.  Returns
        all-False when no facet form is available (a sound under-report).
        """
        n = los.shape[0]
        out = np.zeros(n, dtype=bool)
        if self.is_empty or self._facets is None:
            return out
        ok = np.ones(n, dtype=bool)
        if self._const_axes.size:
            flat = (np.abs(los[:, self._const_axes] - self._const_vals) <= ETA) & \
                   (np.abs(his[:, self._const_axes] - self._const_vals) <= ETA)
            ok &= flat.all(axis=1)
            if not ok.any():
                return out
        A, b = self._facets
        Ap = np.clip(A, 0.0, None)
        Am = np.clip(A, None, 0.0)
        worst = los[:, self._var_axes] @ Am.T + his[:, self._var_axes] @ Ap.T - b
        out = ok & (worst <= ETA).all(axis=1)
        return out

    def lower_bounds(self, X: np.ndarray) -> np.ndarray:
        """Sound lower bound on hull distance (0 when inside or unknown)."""
        if self.is_empty:
            return np.full(X.shape[0], np.inf)
        X = np.atleast_2d(X)
        Xv, axial2 = self._split(X)
        if self._facets is not None and Xv.shape[1] > 0:
            A, b = self._facets
            viol = Xv @ A.T - b
            trans = np.clip(viol.max(axis=1), 0.0, None)
        else:
            trans = np.zeros(X.shape[0])
        return np.sqrt(trans ** 2 + axial2)

    def _surface_dist(self, pts: np.ndarray) -> np.ndarray:
        """Exact distance to the boundary simplices, chunked for memory."""
        n_simp = self._surface.shape[0]
        k = self._surface.shape[1]
        out = np.empty(pts.shape[0])
        chunk = max(1, int(2e6 // max(1, n_simp)))
        for s in range(0, pts.shape[0], chunk):
            blk = pts[s:s + chunk]
            if k == 2:
                d = _segment_dist_batch(blk, self._surface[:, 0, :], self._surface[:, 1, :])
            else:
                d = _triangle_dist_batch(blk, self._surface)
            out[s:s + chunk] = d.min(axis=1)
        return out

    def project(self, X: np.ndarray, tol: float = 1e-9):
        """(distances, nearest points) for a query block."""
        X = np.atleast_2d(X)
        n, m = X.shape
        if self.is_empty:
            return np.full(n, np.inf), None
        Xv, axial2 = self._split(X)
        W = np.tile(self.points[0], (n, 1))
        if Xv.shape[1] == 0:
            return np.sqrt(axial2), W
        if self._facets is not None:
            A, b = self._facets
            inside = (Xv @ A.T - b).max(axis=1) <= ETA
        else:
            inside = np.zeros(n, dtype=bool)
        Wv = Xv.copy()
        todo = ~inside
        if todo.any():
            sub = Xv[todo]
            if self._surface is not None and self._surface.shape[1] <= 3:
                if self._surface.shape[1] == 2:
                    d, P = _segment_dist_batch(sub, self._surface[:, 0, :],
                                               self._surface[:, 1, :], return_points=True)
                else:
                    d, P = _triangle_dist_batch(sub, self._surface, return_points=True)
                pick = np.argmin(d, axis=1)
                Wv[todo] = P[np.arange(len(sub)), pick]
            else:
                Wv[todo] = project_onto_hull_batch(self._sub, sub, tol=tol)
        trans2 = ((Xv - Wv) ** 2).sum(axis=1)
        W[:, self._var_axes] = Wv
        if self._const_axes.size:
            W[:, self._const_axes] = self._const_vals
        return np.sqrt(trans2 + axial2), W

    def distances(self, X: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Hull distances to absolute tolerance tol (upper estimates).

        Exact (to rounding) whenever a boundary decomposition is available,
        which covers every hull of effective dimension at most three.
        """
        if self.is_empty:
            return np.full(np.atleast_2d(X).shape[0], np.inf)
        X = np.atleast_2d(X)
        Xv, axial2 = self._split(X)
        if Xv.shape[1] == 0:
            return np.sqrt(axial2)
        if Xv.shape[1] == 1:
            lo, hi = float(self._sub.min()), float(self._sub.max())
            t = np.clip(np.maximum(lo - Xv[:, 0], Xv[:, 0] - hi), 0.0, None)
            return np.sqrt(t * t + axial2)
        if self._facets is not None:
            A, b = self._facets
            inside = (Xv @ A.T - b).max(axis=1) <= ETA
        else:
            inside = np.zeros(X.shape[0], dtype=bool)
        trans2 = np.zeros(X.shape[0])
        todo = ~inside
        if todo.any():
            if self._surface is not None:
                d = self._surface_dist(Xv[todo])
                trans2[todo] = d * d
            else:
                Z = project_onto_hull_batch(self._sub, Xv[todo], tol=tol)
                trans2[todo] = ((Xv[todo] - Z) ** 2).sum(axis=1)
        return np.sqrt(trans2 + axial2)
