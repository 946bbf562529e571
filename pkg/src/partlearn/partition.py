"""Ground-truth polytope partitions and membership oracles with accounting.

An upper-envelope partition is a matrix/vector pair (A, b); the cell of
label i is where row i attains the maximum of A y + b over the corner
simplex.  Oracles answer membership queries, log every call, and enforce an
optional budget.  Explicit cell geometry (vertex enumeration) is available
at desk scale for verification.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import VPolytope, chebyshev, convex_hull, corner_simplex_hpolytope, empty_polytope
from .geometry.polytope import HPolytope
from .predicates import ETA, as_point, in_corner_simplex


class QueryBudgetError(RuntimeError):
    """Raised when an oracle call would exceed its query budget."""


@dataclass
class UEPP:
    """Upper-envelope polytope partition of the corner m-simplex.

    ``A`` is (n, m), ``b`` is (n,).  Label i owns the region where
    (A y + b)_i is maximal.
    """

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if self.A.shape[0] != self.b.shape[0]:
            raise ValueError("A rows and b length differ")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ValueError("non-finite entries")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[1]

    def label_set(self, y, tol: float = ETA) -> set:
        """All labels attaining the envelope max at y (within tol), 1-based."""
        y = as_point(y)
        if y.size != self.m:
            raise ValueError("dimension mismatch")
        if not in_corner_simplex(y, tol=max(tol, ETA)):
            raise ValueError("query point outside the simplex")
        vals = self.A @ y + self.b
        top = vals.max()
        return {i + 1 for i in range(self.n) if vals[i] >= top - tol}

    def section(self, x: float) -> "UEPP":
        """The induced partition of the x-section, mapped to the lower simplex."""
        return UEPP((1.0 - x) * self.A[:, 1:], self.A[:, 0] * x + self.b)

    def restrict(self, face_map_inv) -> "UEPP":
        """The induced partition on a face, through the face's inverse map."""
        return UEPP(self.A @ face_map_inv.matrix, self.A @ face_map_inv.shift + self.b)

    def to_json(self) -> str:
        return json.dumps({"m": self.m, "n": self.n, "A": self.A.tolist(), "b": self.b.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "UEPP":
        d = json.loads(text)
        u = cls(np.array(d["A"], dtype=float), np.array(d["b"], dtype=float))
        if u.m != d["m"] or u.n != d["n"]:
            raise ValueError("inconsistent UEPP JSON")
        return u


def uepp_label_set(u: UEPP, y, tol: float = ETA) -> set:
    return u.label_set(y, tol=tol)


@dataclass
class PartitionGroundTruth:
    """Explicit cells of a partition: list of (label, VPolytope)."""

    m: int
    cells: list  # [(label, VPolytope)]
    source: UEPP | None = None

    @property
    def n(self) -> int:
        return max(lbl for lbl, _ in self.cells)

    def label_set(self, y, tol: float = 1e-7) -> set:
        from .geometry import distance_to_hull
        y = as_point(y)
        out = set()
        for lbl, cell in self.cells:
            if cell.is_empty:
                continue
            d, _ = distance_to_hull(y, cell)
            if d <= tol:
                out.add(lbl)
        if not out:
            raise ValueError("point not covered by any cell")
        return out


def uepp_cells(u: UEPP, max_m: int = 4, max_n: int = 8) -> PartitionGroundTruth:
    """Explicit cell polytopes of a UEPP via vertex enumeration.

    Each cell is the intersection of its envelope-dominance halfspaces with
    the simplex; vertices come from m-subsets of the rows.  Exponential in
    m, capped for desk scale.
    """
    if u.m > max_m or u.n > max_n:
        raise ValueError("instance beyond the vertex-enumeration cap")
    if u.m == 0:
        return PartitionGroundTruth(0, [(lbl, VPolytope(np.zeros((1, 0)))) for lbl in u.label_set(np.zeros(0))], u)
    simplex = corner_simplex_hpolytope(u.m)
    cells = []
    for i in range(u.n):
        rows_a = [simplex.normals]
        rows_b = [simplex.offsets]
        for j in range(u.n):
            if j == i:
                continue
            diff = u.A[i] - u.A[j]
            off = u.b[j] - u.b[i]
            nrm = np.linalg.norm(diff)
            if nrm < ETA:
                if off > ETA:
                    # row j strictly dominates row i everywhere: empty cell
                    rows_a.append(np.ones((1, u.m)))
                    rows_b.append(np.array([np.inf]))
                continue
            rows_a.append((diff / nrm)[None, :])
            rows_b.append(np.array([off / nrm]))
        Arows = np.vstack(rows_a)
        brows = np.concatenate(rows_b)
        if np.any(np.isinf(brows)):
            cells.append((i + 1, empty_polytope(u.m)))
            continue
        verts = _enumerate_vertices(Arows, brows, u.m)
        cells.append((i + 1, convex_hull(verts) if len(verts) else empty_polytope(u.m)))
    return PartitionGroundTruth(u.m, cells, u)


def _enumerate_vertices(A: np.ndarray, b: np.ndarray, m: int, tol: float = 1e-9) -> np.ndarray:
    out = []
    nr = A.shape[0]
    for combo in itertools.combinations(range(nr), m):
        M = A[list(combo)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, b[list(combo)])
        if np.all(A @ x >= b - 1e-7):
            out.append(x)
    if not out:
        return np.zeros((0, m))
    pts = np.array(out)
    # dedupe within tolerance
    keep = []
    for p in pts:
        if not any(np.linalg.norm(p - q) <= 1e-7 for q in keep):
            keep.append(p)
    return np.array(keep)


def cell_hpolytope(u: UEPP, i: int):
    """H-form of cell i (1-based) with simplex rows marked as boundary.

    Returns (HPolytope, boundary_row_indices).
    """
    simplex = corner_simplex_hpolytope(u.m)
    rows_a = [simplex.normals]
    rows_b = [simplex.offsets]
    for j in range(u.n):
        if j == i - 1:
            continue
        diff = u.A[i - 1] - u.A[j]
        nrm = np.linalg.norm(diff)
        if nrm < ETA:
            continue
        rows_a.append((diff / nrm)[None, :])
        rows_b.append(np.array([(u.b[j] - u.b[i - 1]) / nrm]))
    h = HPolytope(np.vstack(rows_a), np.concatenate(rows_b))
    return h, set(range(simplex.nrows))


@dataclass
class QueryLog:
    """Monotone query counter with optional transcript and budget."""

    budget: int | None = None
    record: bool = True
    count: int = 0
    transcript: list = field(default_factory=list)

    def charge(self, point, label=None) -> None:
        if self.budget is not None and self.count >= self.budget:
            raise QueryBudgetError("query budget exhausted")
        self.count += 1
        if self.record:
            self.transcript.append((tuple(np.asarray(point, dtype=float).ravel()), label))

    def amend_last_label(self, label) -> None:
        if self.record and self.transcript:
            pt, _ = self.transcript[-1]
            self.transcript[-1] = (pt, label)

    def to_json_lines(self) -> str:
        return "\n".join(
            json.dumps({"index": i, "point": list(pt), "label": lbl})
            for i, (pt, lbl) in enumerate(self.transcript)
        )


POLICIES = ("seeded", "roundrobin", "maxindex", "antilearner")


class Oracle:
    """Membership oracle over a partition, with tie policy and accounting.

    kind 'lexicographic' answers the minimum label at the point; kind
    'adversarial' picks among the tied labels according to ``policy``.
    Points outside the simplex (beyond tolerance) are refused.
    """

    def __init__(self, ground_truth, kind: str = "lexicographic", policy: str = "seeded",
                 seed: int = 0, budget: int | None = None, record: bool = True,
                 tie_tol: float = ETA):
        if kind not in ("lexicographic", "adversarial"):
            raise ValueError("kind must be 'lexicographic' or 'adversarial'")
        if policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        self.ground_truth = ground_truth
        self.kind = kind
        self.policy = policy
        self.seed = seed
        self.tie_tol = tie_tol
        self.log = QueryLog(budget=budget, record=record)
        self._rng = np.random.default_rng(seed)
        self._tie_memo = {}
        self._rr = 0
        self._answered = {}  # label -> list of points (adversary's own record)

    def clone(self) -> "Oracle":
        """Fresh oracle over the same truth: same policy/seed, empty log."""
        return Oracle(self.ground_truth, self.kind, self.policy, self.seed,
                      self.log.budget, self.log.record, self.tie_tol)

    def label_set(self, y) -> set:
        return self.ground_truth.label_set(y, self.tie_tol) if isinstance(self.ground_truth, UEPP) \
            else self.ground_truth.label_set(y)

    def __call__(self, y) -> int:
        y = as_point(y)
        self.log.charge(y)
        labels = self.label_set(y)
        if self.kind == "lexicographic" or len(labels) == 1:
            ans = min(labels)
        else:
            ans = self._pick(y, labels)
        self.log.amend_last_label(ans)
        self._answered.setdefault(ans, []).append(y)
        return ans

    def _pick(self, y, labels: set) -> int:
        ordered = sorted(labels)
        if self.policy == "maxindex":
            return ordered[-1]
        if self.policy == "roundrobin":
            self._rr += 1
            return ordered[self._rr % len(ordered)]
        if self.policy == "seeded":
            key = frozenset(ordered)
            if key not in self._tie_memo:
                self._tie_memo[key] = ordered[int(self._rng.integers(len(ordered)))]
            return self._tie_memo[key]
        # antilearner: answer the label whose revealed hull grows least, i.e.
        # whose existing answer set is nearest the query; unseen labels grow
        # a fresh zero-volume hull and are preferred (largest index first).
        best, best_d = None, None
        for lbl in reversed(ordered):
            pts = self._answered.get(lbl)
            d = 0.0 if not pts else float(min(np.linalg.norm(y - p) for p in pts))
            if best_d is None or d < best_d - ETA:
                best, best_d = lbl, d
        return best


def make_oracle(gt, kind: str = "lexicographic", policy: str = "seeded", seed: int = 0,
                budget: int | None = None, record: bool = True) -> Oracle:
    return Oracle(gt, kind=kind, policy=policy, seed=seed, budget=budget, record=record)


def random_uepp(m: int, n: int, seed: int = 0, duplicate_rows: int = 0,
                empty_cells: int = 0, scale: float = 1.0) -> UEPP:
    """Reproducible random instance; options inject degeneracies.

    ``duplicate_rows`` copies that many rows onto fresh labels (coinciding
    cells); ``empty_cells`` appends rows that never attain the maximum.
    """
    if m < 1 or n < 1:
        raise ValueError("m, n >= 1")
    rng = np.random.default_rng(seed)
    base = n - duplicate_rows - empty_cells
    if base < 1:
        raise ValueError("too many degenerate rows requested")
    A = rng.normal(size=(base, m)) * scale
    b = rng.normal(size=base) * 0.3 * scale
    rows = [(A, b)]
    for _ in range(duplicate_rows):
        src = int(rng.integers(base))
        rows.append((A[src:src + 1].copy(), b[src:src + 1].copy()))
    for _ in range(empty_cells):
        src = int(rng.integers(base))
        rows.append((A[src:src + 1].copy(), b[src:src + 1] - 3.0 * scale - 1.0))
    Afull = np.vstack([r[0] for r in rows])
    bfull = np.concatenate([np.atleast_1d(r[1]) for r in rows])
    perm = rng.permutation(n)
    return UEPP(Afull[perm], bfull[perm])


def _section_thickness(h: HPolytope, x: float) -> float:
    """Thickness of the x-section of an H-polytope, in its own hyperplane."""
    a_trans = h.normals[:, 1:]
    resid = h.offsets - h.normals[:, 0] * x
    norms = np.linalg.norm(a_trans, axis=1)
    fixed = norms < ETA
    if np.any(resid[fixed] > ETA):
        return 0.0
    keep = ~fixed
    if h.dim == 1:
        return 0.0
    sub = HPolytope(a_trans[keep], resid[keep])
    try:
        r, _ = chebyshev(sub)
    except ValueError:
        return 0.0
    return r


def alpha_critical(u: UEPP, i: int, alpha: float, tol: float = 1e-9):
    """The first coordinates where cell i's section thickness crosses alpha.

    Section thickness is concave along the axis, so the super-level set is
    an interval; endpoints are found by bisection around the concave peak.
    Returns None when the cell never reaches thickness alpha.
    """
    h, _ = cell_hpolytope(u, i)

    def tau(x):
        return _section_thickness(h, x)

    # ternary search for the peak of the concave section-thickness
    lo, hi = 0.0, 1.0
    for _ in range(80):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if tau(m1) < tau(m2):
            lo = m1
        else:
            hi = m2
    peak = 0.5 * (lo + hi)
    if tau(peak) < alpha:
        return None

    def bisect(a, b, want_left):
        # invariant: tau crosses alpha between a and b
        for _ in range(60):
            mid = 0.5 * (a + b)
            if (tau(mid) >= alpha) == want_left:
                b = mid
            else:
                a = mid
            if b - a <= tol:
                break
        return 0.5 * (a + b)

    l = bisect(0.0, peak, want_left=True) if tau(0.0) < alpha else 0.0
    r = bisect(peak, 1.0, want_left=False) if tau(1.0) < alpha else 1.0
    return l, r


def critical_coordinates(u: UEPP, alpha: float, tol: float = 1e-9) -> list:
    """Sorted first coordinates of all cell vertices plus alpha-crossings.

    Cardinality is at most C(n+m, m) + 2n.
    """
    if alpha <= 0:
        raise ValueError("alpha > 0 required")
    gt = uepp_cells(u)
    coords = []
    for _, cell in gt.cells:
        if not cell.is_empty:
            coords.extend(float(v) for v in cell.vertices[:, 0])
    for i in range(1, u.n + 1):
        lr = alpha_critical(u, i, alpha)
        if lr is not None:
            coords.extend(lr)
    coords.sort()
    out = []
    for c in coords:
        if not out or c - out[-1] > tol:
            out.append(c)
    return out
