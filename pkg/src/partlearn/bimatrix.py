"""Bimatrix games: best-response oracles, the reduction to labellings, and
approximate well-supported equilibria.

Best-response regions of each player form upper-envelope partitions of the
opponent's mixed-strategy simplex, so learning them is a labelling problem
over reduced coordinates (first strategy's probability implicit).  The
solver learns both partitions through adversarial best-response queries
only, then grid-searches for a profile whose supports sit inside slack
Voronoi best-response sets; payoff access is gated by an audit so the query
path provably never touches utilities.
"""

from __future__ import annotations

import json
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .cdgbs import GbsConfig, cd_gbs_adversarial
from .coverage import simplex_lattice
from .crgbs import CrConfig, cr_gbs
from .geometry import corner_simplex_vertices
from .labelling import EmpiricalLabelling
from .partition import UEPP, Oracle, QueryLog
from .predicates import ETA, as_point

SUPPORT_MASS = 1e-9


class PayoffAuditError(RuntimeError):
    """Payoff entries were read outside an allowed context."""


class PayoffAudit:
    """Gate for payoff access: open it for oracle construction or
    verification, and count any read attempted while closed."""

    def __init__(self):
        self._open = []
        self.purposes = []
        self.violations = 0

    @contextmanager
    def allowed(self, purpose: str):
        self._open.append(purpose)
        self.purposes.append(purpose)
        try:
            yield
        finally:
            self._open.pop()

    def require(self):
        if not self._open:
            self.violations += 1
            raise PayoffAuditError("payoff access outside oracle construction or verification")

    @property
    def clean(self) -> bool:
        return self.violations == 0


@dataclass
class BimatrixGame:
    """Row/column payoff matrices with entries in [0, 1]."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if self.A.shape != self.B.shape:
            raise ValueError("payoff matrices must have equal shape")
        for M in (self.A, self.B):
            if M.min() < -ETA or M.max() > 1.0 + ETA:
                raise ValueError("payoffs must lie in [0, 1]")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def to_json(self) -> str:
        return json.dumps({"A": self.A.tolist(), "B": self.B.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "BimatrixGame":
        d = json.loads(text)
        return cls(np.array(d["A"], dtype=float), np.array(d["B"], dtype=float))


class GuardedGame:
    """A game whose payoff matrices can only be read through an audit."""

    def __init__(self, game: BimatrixGame, audit: PayoffAudit | None = None):
        self._game = game
        self.audit = audit or PayoffAudit()
        self.m = game.m
        self.n = game.n

    def payoffs(self):
        self.audit.require()
        return self._game.A, self._game.B


def expand(mix, size: int) -> np.ndarray:
    """Reduced coordinates -> full distribution (first strategy implicit)."""
    mix = as_point(mix)
    if mix.size != size - 1:
        raise ValueError("dimension mismatch")
    first = 1.0 - mix.sum()
    if first < -1e-7 or np.any(mix < -1e-7):
        raise ValueError("not a distribution")
    return np.concatenate([[max(first, 0.0)], mix])


def reduce_mix(dist) -> np.ndarray:
    dist = as_point(dist)
    return dist[1:].copy()


def utilities(g: BimatrixGame, u, v):
    """(row, column) expected utilities at the reduced-coordinate profile."""
    ue = expand(u, g.m)
    ve = expand(v, g.n)
    return float(ue @ g.A @ ve), float(ue @ g.B @ ve)


def pure_utilities(g: BimatrixGame, side: str, opponent_mix) -> np.ndarray:
    """Expected utility of each pure strategy against the opponent's mix."""
    if side == "row":
        return g.A @ expand(opponent_mix, g.n)
    if side == "column":
        return g.B.T @ expand(opponent_mix, g.m)
    raise ValueError("side must be 'row' or 'column'")


def best_value(g: BimatrixGame, side: str, opponent_mix) -> float:
    return float(pure_utilities(g, side, opponent_mix).max())


def br_partition(g: BimatrixGame, side: str) -> UEPP:
    """Best-response regions of one player as an upper-envelope partition
    of the opponent's reduced mixed-strategy simplex (labels = strategies)."""
    if side == "row":
        # m labels over column mixes in the (n-1)-simplex
        base = g.A[:, 0]
        return UEPP(g.A[:, 1:] - base[:, None], base)
    if side == "column":
        base = g.B[0, :]
        return UEPP(g.B[1:, :].T - base[:, None], base)
    raise ValueError("side must be 'row' or 'column'")


class StrongBrOracle:
    """Returns the full argmax set of pure best responses; one query each."""

    def __init__(self, uepp: UEPP, budget=None, record: bool = True, tie_tol: float = ETA):
        self.uepp = uepp
        self.tie_tol = tie_tol
        self.log = QueryLog(budget=budget, record=record)

    def __call__(self, mix) -> set:
        mix = as_point(mix)
        self.log.charge(mix)
        labels = self.uepp.label_set(mix, self.tie_tol)
        self.log.amend_last_label(tuple(sorted(labels)))
        return labels


def br_oracle(game, side: str, kind: str = "adversarial", policy: str = "seeded",
              seed: int = 0, budget=None, record: bool = True):
    """Best-response query oracle for one player.

    ``game`` may be a BimatrixGame or a GuardedGame; construction reads the
    payoffs once (inside an allowed audit context) and the returned oracle
    never touches them again.
    """
    if isinstance(game, GuardedGame):
        with game.audit.allowed("oracle"):
            A, B = game.payoffs()
            raw = BimatrixGame(A, B)
    else:
        raw = game
    part = br_partition(raw, side)
    if kind == "strong":
        return StrongBrOracle(part, budget=budget, record=record)
    return Oracle(part, kind=kind, policy=policy, seed=seed, budget=budget, record=record)


def lower_bound_game(x: float, y: float) -> BimatrixGame:
    """The binary-action family whose unique equilibrium is (y, x)."""
    if not (0.0 < x < 1.0 and 0.0 < y < 1.0):
        raise ValueError("x, y must lie strictly inside (0, 1)")
    A = np.array([[x, x], [0.0, 1.0]])
    B = np.array([[0.0, y], [1.0, y]])
    return BimatrixGame(A, B)


@dataclass
class WsneCertificate:
    u: np.ndarray                 # reduced row mix
    v: np.ndarray                 # reduced column mix
    eps: float
    row_support: list
    col_support: list
    row_regrets: dict | None = None
    col_regrets: dict | None = None
    valid: bool | None = None
    queries_row: int = 0
    queries_col: int = 0
    grid_resolution: float | None = None
    wall_ms: float = 0.0

    def to_json(self) -> str:
        return json.dumps({
            "u": list(map(float, self.u)),
            "v": list(map(float, self.v)),
            "eps": self.eps,
            "row_support": self.row_support,
            "col_support": self.col_support,
            "row_regrets": self.row_regrets,
            "col_regrets": self.col_regrets,
            "valid": self.valid,
            "queries_row": self.queries_row,
            "queries_col": self.queries_col,
            "grid_resolution": self.grid_resolution,
        })


def support_of(dist: np.ndarray, theta: float = SUPPORT_MASS) -> list:
    """1-based indices of strategies with mass above theta."""
    return [i + 1 for i, p in enumerate(dist) if p > theta]


def verify_wsne(g: BimatrixGame, u, v, eps: float) -> WsneCertificate:
    """Check the well-supported condition with full payoff knowledge."""
    ue = expand(u, g.m)
    ve = expand(v, g.n)
    if abs(ue.sum() - 1.0) > 1e-6 or abs(ve.sum() - 1.0) > 1e-6:
        raise ValueError("profile entries do not sum to one")
    row_paying = g.A @ ve
    col_paying = g.B.T @ ue
    rs, cs = support_of(ue), support_of(ve)
    row_regrets = {i: float(row_paying.max() - row_paying[i - 1]) for i in rs}
    col_regrets = {j: float(col_paying.max() - col_paying[j - 1]) for j in cs}
    ok = all(r <= eps + ETA for r in row_regrets.values()) and \
        all(r <= eps + ETA for r in col_regrets.values())
    return WsneCertificate(as_point(u), as_point(v), eps, rs, cs,
                           row_regrets, col_regrets, bool(ok))


@dataclass
class SolveConfig:
    grid_resolution: float | None = None   # default eps / 8
    voronoi_slack: float | None = None     # default eps / 8
    support_mass: float = SUPPORT_MASS
    refine_rounds: int = 3
    seed: int = 0
    lattice_cap: int = 8_000_000


@dataclass
class BrOracles:
    """Best-response oracles plus the dimensions the solver may know."""

    row: object
    column: object
    m: int
    n: int
    audit: PayoffAudit | None = None


def make_br_oracles(game: BimatrixGame, kind: str = "adversarial", policy: str = "seeded",
                    seed: int = 0, budget=None, record: bool = False) -> BrOracles:
    guarded = GuardedGame(game)
    row = br_oracle(guarded, "row", kind=kind, policy=policy, seed=seed,
                    budget=budget, record=record)
    col = br_oracle(guarded, "column", kind=kind, policy=policy, seed=seed + 1,
                    budget=budget, record=record)
    return BrOracles(row, col, game.m, game.n, guarded.audit)


def _single_label_labelling(dim: int, n_labels: int) -> EmpiricalLabelling:
    lab = EmpiricalLabelling(dim, n_labels)
    lab.add_block(corner_simplex_vertices(dim), 1)
    return lab


def _learn_partition(oracle, dim: int, labels: int, eps: float, seed: int) -> EmpiricalLabelling:
    """Adversarial labelling of a best-response partition at accuracy eps.

    The face route pays off when faces are low-dimensional and its
    sub-accuracy stays desk scale; otherwise the dimension recursion is the
    workable path.
    """
    if labels == 1:
        return _single_label_labelling(dim, labels)
    k = math.comb(labels, 2)
    from .crgbs import cr_sub_eps
    if dim > k and (k == 1 or cr_sub_eps(dim, labels, eps) >= 1e-3):
        return cr_gbs(CrConfig(dim, labels, eps, oracle_kind="adversarial", seed=seed), oracle)
    return cd_gbs_adversarial(GbsConfig(dim, labels, eps, oracle_kind="adversarial", seed=seed), oracle)


def voronoi_label_masks(lab: EmpiricalLabelling, pts: np.ndarray, sigma: float) -> np.ndarray:
    """Bitmask per point of classes whose hull distance is within sigma of
    the minimum.  Bit (label-1) is set for every raw label in the class.

    Exact distances are only computed inside the band where they can affect
    the verdict; everywhere else cheap facet/sample bounds decide.
    """
    n_pts = pts.shape[0]
    roots = [r for r in lab.class_roots() if not lab.hull(r).is_empty]
    hulls = [lab.point_hull(r) for r in roots]
    tol = max(1e-9, sigma * 1e-3)
    lbs = np.stack([h.lower_bounds(pts) for h in hulls])
    dmin_ub = np.full(n_pts, np.inf)
    for idx, h in enumerate(hulls):
        inside = lbs[idx] <= 0.0
        if h._facets is not None and inside.any():
            dmin_ub[inside] = 0.0
    loose = dmin_ub > 0.0
    if loose.any():
        sub = pts[loose]
        best = dmin_ub[loose]
        for h in hulls:
            best = np.minimum(best, h.upper_bounds(sub))
        dmin_ub[loose] = best
    dists = np.full((len(roots), n_pts), np.inf)
    for idx, h in enumerate(hulls):
        cand = lbs[idx] <= dmin_ub + sigma + ETA
        if cand.any():
            dists[idx, cand] = h.distances(pts[cand], tol=tol)
    dmin = dists.min(axis=0)
    masks = np.zeros(n_pts, dtype=np.int64)
    for idx, root in enumerate(roots):
        members = [l for l in range(1, lab.n + 1) if lab.find(l) == root]
        bits = 0
        for l in members:
            bits |= 1 << (l - 1)
        sel = dists[idx] <= dmin + sigma + ETA
        masks[sel] |= bits
    return masks


def _support_masks(lattice: np.ndarray, size: int, theta: float) -> np.ndarray:
    """Support bitmask of each lattice point's expanded distribution."""
    first = 1.0 - lattice.sum(axis=1)
    masks = (np.where(first > theta, 1, 0)).astype(np.int64)
    for j in range(lattice.shape[1]):
        masks |= np.where(lattice[:, j] > theta, 1 << (j + 1), 0).astype(np.int64)
    return masks


def solve_wsne(oracles: BrOracles, eps: float, cfg: SolveConfig | None = None) -> WsneCertificate:
    """Compute an eps-WSNE from best-response queries alone.

    Learns both best-response partitions adversarially, then scans a
    deterministic product lattice for a profile whose supports lie inside
    slack Voronoi best-response sets; the lattice refines (up to the
    configured rounds) if no profile is accepted.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    cfg = cfg or SolveConfig()
    start = time.perf_counter()
    m, n = oracles.m, oracles.n
    dim_u, dim_v = m - 1, n - 1
    eps_r = eps / (2.0 * math.sqrt(max(n - 1, 1)))
    eps_c = eps / (2.0 * math.sqrt(max(m - 1, 1)))
    q0r, q0c = oracles.row.log.count, oracles.column.log.count
    # row best-response partition lives over column mixes, and vice versa
    row_lab = _learn_partition(oracles.row, dim_v, m, eps_r / 2.0, cfg.seed)
    col_lab = _learn_partition(oracles.column, dim_u, n, eps_c / 2.0, cfg.seed + 17)

    delta = cfg.grid_resolution if cfg.grid_resolution is not None else eps / 8.0
    sigma = cfg.voronoi_slack if cfg.voronoi_slack is not None else eps / 8.0
    theta = cfg.support_mass

    for _round in range(cfg.refine_rounds):
        try:
            u_grid = simplex_lattice(dim_u, delta, cfg.lattice_cap) if dim_u else np.zeros((1, 0))
            v_grid = simplex_lattice(dim_v, delta, cfg.lattice_cap) if dim_v else np.zeros((1, 0))
        except ValueError:
            break
        supp_u = _support_masks(u_grid, m, theta)
        supp_v = _support_masks(v_grid, n, theta)
        vor_col = voronoi_label_masks(col_lab, u_grid, sigma)   # column BRs to u
        vor_row = voronoi_label_masks(row_lab, v_grid, sigma)   # row BRs to v
        # group u candidates by (support, column-BR set); keep first of each
        sig_first = {}
        for i in range(u_grid.shape[0]):
            key = (int(supp_u[i]), int(vor_col[i]))
            if key not in sig_first:
                sig_first[key] = i
        signatures = sorted(sig_first.items(), key=lambda kv: kv[1])
        for j in range(v_grid.shape[0]):
            rv, sv = int(vor_row[j]), int(supp_v[j])
            for (su, cu), i in signatures:
                if su & ~rv == 0 and sv & ~cu == 0:
                    cert = WsneCertificate(
                        u_grid[i].copy(), v_grid[j].copy(), eps,
                        _mask_to_list(su), _mask_to_list(sv),
                        queries_row=oracles.row.log.count - q0r,
                        queries_col=oracles.column.log.count - q0c,
                        grid_resolution=delta,
                        wall_ms=(time.perf_counter() - start) * 1e3)
                    return cert
        delta /= 2.0
    raise RuntimeError(f"fixed point not found at resolution {delta:g}")


def _mask_to_list(mask: int) -> list:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out
