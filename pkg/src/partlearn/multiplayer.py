"""n-player k-action games: l1 net lattices, brute-force labelling through
best-response queries, and Voronoi equilibrium search.

Beyond two players best-response regions stop being convex, so empirical
regions are kept as raw point sets with l1 nearest-point distances instead
of hulls; querying every point of an l1 net of each opponent profile space
still yields close labellings, and the same Voronoi fixed-point search as
the bimatrix case produces approximate well-supported equilibria.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass

import numpy as np

from .bimatrix import PayoffAudit, SUPPORT_MASS, _mask_to_list
from .coverage import simplex_lattice
from .partition import QueryLog
from .predicates import ETA, as_point


@dataclass
class NormalFormGame:
    """Utilities indexed by (player, pure profile), values in [0, 1]."""

    n: int
    k: int
    utilities: np.ndarray   # shape (n,) + (k,) * n

    def __post_init__(self):
        self.utilities = np.asarray(self.utilities, dtype=float)
        want = (self.n,) + (self.k,) * self.n
        if self.utilities.shape != want:
            raise ValueError(f"utility tensor must have shape {want}")
        if self.utilities.min() < -ETA or self.utilities.max() > 1.0 + ETA:
            raise ValueError("utilities must lie in [0, 1]")

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "k": self.k,
                           "u": self.utilities.ravel().tolist()})

    @classmethod
    def from_json(cls, text: str) -> "NormalFormGame":
        d = json.loads(text)
        u = np.array(d["u"], dtype=float).reshape((d["n"],) + (d["k"],) * d["n"])
        return cls(d["n"], d["k"], u)


def random_game(n: int, k: int, seed: int = 0) -> NormalFormGame:
    rng = np.random.default_rng(seed)
    return NormalFormGame(n, k, rng.random((n,) + (k,) * n))


def jordan_game() -> NormalFormGame:
    """Three-player cyclic matching game whose unique equilibrium is the
    uniform profile: player 1 matches player 2, 2 matches 3, 3 mismatches 1."""
    u = np.zeros((3, 2, 2, 2))
    for a1, a2, a3 in itertools.product(range(2), repeat=3):
        u[0, a1, a2, a3] = 1.0 if a1 == a2 else 0.0
        u[1, a1, a2, a3] = 1.0 if a2 == a3 else 0.0
        u[2, a1, a2, a3] = 1.0 if a3 != a1 else 0.0
    return NormalFormGame(3, 2, u)


def dominant_game(n: int = 3, k: int = 2) -> NormalFormGame:
    """Every player's first action strictly dominates."""
    u = np.zeros((n,) + (k,) * n)
    for idx in itertools.product(range(k), repeat=n):
        for i in range(n):
            u[(i,) + idx] = 1.0 if idx[i] == 0 else 0.25
    return NormalFormGame(n, k, u)


def expand_profile(x_reduced, k: int) -> np.ndarray:
    x = as_point(x_reduced)
    first = 1.0 - x.sum()
    if first < -1e-7 or np.any(x < -1e-7):
        raise ValueError("not a distribution")
    return np.concatenate([[max(first, 0.0)], x])


def expected_utility(g: NormalFormGame, i: int, r: int, x_minus_i) -> float:
    """Player i's expected utility for pure action r (1-based) against the
    reduced mixed profiles of the other players."""
    if not 1 <= i <= g.n or not 1 <= r <= g.k:
        raise IndexError("player or action out of range")
    others = list(x_minus_i)
    if len(others) != g.n - 1:
        raise ValueError("need one mixed strategy per other player")
    tensor = np.take(g.utilities[i - 1], r - 1, axis=i - 1)
    for j, mix in enumerate(others):
        tensor = np.tensordot(expand_profile(mix, g.k), tensor, axes=(0, 0))
    return float(tensor)


def pure_values(g: NormalFormGame, i: int, x_minus_i) -> np.ndarray:
    return np.array([expected_utility(g, i, r, x_minus_i) for r in range(1, g.k + 1)])


class MultiBrOracle:
    """Best-response oracle of one player over the others' joint mixes.

    The joint mix is the concatenation of the other players' reduced
    strategies in player order.
    """

    def __init__(self, g: NormalFormGame, i: int, kind: str = "adversarial",
                 policy: str = "seeded", seed: int = 0, budget=None,
                 record: bool = True, audit: PayoffAudit | None = None):
        self.g = g
        self.i = i
        self.kind = kind
        self.policy = policy
        self.log = QueryLog(budget=budget, record=record)
        self._rng = np.random.default_rng(seed)
        self._memo = {}
        self._rr = 0
        self.audit = audit

    def _strong(self, x_minus_i) -> set:
        if self.audit is not None:
            self.audit.require()
        vals = pure_values(self.g, self.i, x_minus_i)
        top = vals.max()
        return {r + 1 for r in range(self.g.k) if vals[r] >= top - ETA}

    def split(self, joint) -> list:
        joint = as_point(joint)
        d = self.g.k - 1
        if joint.size != d * (self.g.n - 1):
            raise ValueError("joint mix has wrong dimension")
        return [joint[j * d:(j + 1) * d] for j in range(self.g.n - 1)]

    def __call__(self, joint) -> int:
        joint = as_point(joint)
        self.log.charge(joint)
        if self.audit is not None:
            with self.audit.allowed("oracle"):
                labels = self._strong(self.split(joint))
        else:
            labels = self._strong(self.split(joint))
        ordered = sorted(labels)
        if self.kind == "lexicographic" or len(ordered) == 1:
            ans = ordered[0]
        elif self.policy == "maxindex":
            ans = ordered[-1]
        elif self.policy == "roundrobin":
            self._rr += 1
            ans = ordered[self._rr % len(ordered)]
        else:
            key = frozenset(ordered)
            if key not in self._memo:
                self._memo[key] = ordered[int(self._rng.integers(len(ordered)))]
            ans = self._memo[key]
        self.log.amend_last_label(ans)
        return ans

    def strong_set(self, joint) -> set:
        self.log.charge(as_point(joint))
        return self._strong(self.split(joint))


def make_multi_oracles(g: NormalFormGame, kind: str = "adversarial", policy: str = "seeded",
                       seed: int = 0, budget=None, record: bool = False):
    audit = PayoffAudit()
    return [MultiBrOracle(g, i, kind, policy, seed + i, budget, record, audit)
            for i in range(1, g.n + 1)], audit


@dataclass
class NetSpec:
    """Product l1 net over the joint mixed strategies of n-1 players."""

    n: int
    k: int
    eps: float
    eps_prime: float
    spacing: float
    single: np.ndarray          # lattice of one (k-1)-simplex
    points: np.ndarray          # product lattice, concatenated coordinates

    @property
    def single_count(self) -> int:
        return self.single.shape[0]

    @property
    def count(self) -> int:
        return self.points.shape[0]


def simplex_net(d: int, eps: float) -> np.ndarray:
    """The l1 eps-net lattice (2 eps / d) Z^d intersected with the corner
    d-simplex; stars and bars gives C(floor(d / (2 eps)) + d, d) points."""
    if d == 0:
        return np.zeros((1, 0))
    spacing = 2.0 * eps / d
    if spacing >= 1.0:
        spacing = 1.0
    return simplex_lattice(d, spacing)


def build_net(n: int, k: int, eps: float, max_points: int = 2_000_000) -> NetSpec:
    """l1 eps-net of the joint mixed strategies of n-1 players with k actions."""
    if n < 2 or k < 2 or eps <= 0:
        raise ValueError("need n >= 2, k >= 2, eps > 0")
    d = k - 1
    eps_prime = eps / (n - 1)
    spacing = min(2.0 * eps_prime / d, 1.0)
    single = simplex_lattice(d, spacing)
    count = single.shape[0] ** (n - 1)
    if count > max_points:
        raise ValueError("net size beyond the configured cap")
    blocks = [single] * (n - 1)
    prod = blocks[0]
    for b in blocks[1:]:
        left = np.repeat(prod, b.shape[0], axis=0)
        right = np.tile(b, (prod.shape[0], 1))
        prod = np.hstack([left, right])
    return NetSpec(n, k, eps, eps_prime, spacing, single, prod)


class PointLabelling:
    """Per-action point sets over a joint-mix space, with l1 distances."""

    def __init__(self, dim: int, k: int):
        self.dim = dim
        self.k = k
        self.points = {r: [] for r in range(1, k + 1)}

    def add(self, x, r: int) -> None:
        self.points[r].append(np.asarray(x, dtype=float))

    def arrays(self) -> dict:
        return {r: (np.vstack(v) if v else np.zeros((0, self.dim)))
                for r, v in self.points.items()}

    def l1_distances(self, X: np.ndarray) -> np.ndarray:
        """(k, N) l1 distance from each query row to each action's set."""
        X = np.atleast_2d(X)
        out = np.full((self.k, X.shape[0]), np.inf)
        for r, blocks in self.points.items():
            if not blocks:
                continue
            P = np.vstack(blocks)
            chunk = max(1, int(2e6 // max(1, P.shape[0])))
            for s in range(0, X.shape[0], chunk):
                d = np.abs(X[s:s + chunk, None, :] - P[None, :, :]).sum(axis=2)
                out[r - 1, s:s + chunk] = d.min(axis=1)
        return out

    def to_json(self) -> str:
        return json.dumps({"dim": self.dim, "k": self.k,
                           "points": {str(r): np.vstack(v).tolist() if v else []
                                      for r, v in self.points.items()}})


def learn_multiplayer_labellings(oracles, eps: float, max_points: int = 2_000_000):
    """Query every point of an (eps/2)-net of each player's opponent space."""
    if not oracles:
        raise ValueError("no oracles")
    g = oracles[0].g
    net = build_net(g.n, g.k, eps / 2.0, max_points=max_points)
    labs = []
    for orc in oracles:
        lab = PointLabelling((g.k - 1) * (g.n - 1), g.k)
        for x in net.points:
            lab.add(x, orc(x))
        labs.append(lab)
    return labs, net


def is_l1_close(lab: PointLabelling, eps: float, samples: int = 10_000, seed: int = 0) -> bool:
    """Monte-Carlo check that the labelled points form an l1 eps-net of the
    joint space (a product of corner (k-1)-simplices)."""
    d = lab.dim
    if d == 0:
        return any(len(v) for v in lab.points.values())
    rng = np.random.default_rng(seed)
    bs = lab.k - 1
    X = np.empty((samples, d))
    for b in range(d // bs):
        w = rng.dirichlet(np.ones(bs + 1), size=samples)
        X[:, b * bs:(b + 1) * bs] = w[:, :bs]
    dists = lab.l1_distances(X)
    return bool(dists.min(axis=0).max() <= eps + 1e-9)


@dataclass
class MultiWsneCertificate:
    profile: list               # reduced mixes per player
    eps: float
    supports: list              # 1-based actions per player
    regrets: list | None = None
    valid: bool | None = None
    queries: int = 0
    grid_resolution: float | None = None
    wall_ms: float = 0.0

    def to_json(self) -> str:
        return json.dumps({
            "profile": [list(map(float, x)) for x in self.profile],
            "eps": self.eps,
            "supports": self.supports,
            "regrets": self.regrets,
            "valid": self.valid,
            "queries": self.queries,
            "grid_resolution": self.grid_resolution,
        })


def verify_wsne_multiplayer(g: NormalFormGame, profile, eps: float) -> MultiWsneCertificate:
    """Supported regrets of every player at a reduced-coordinate profile."""
    profile = [as_point(x) for x in profile]
    if len(profile) != g.n:
        raise ValueError("profile must list one mix per player")
    supports, regrets = [], []
    ok = True
    for i in range(1, g.n + 1):
        dist = expand_profile(profile[i - 1], g.k)
        others = [profile[j - 1] for j in range(1, g.n + 1) if j != i]
        vals = pure_values(g, i, others)
        best = vals.max()
        supp = [r + 1 for r in range(g.k) if dist[r] > SUPPORT_MASS]
        regs = {r: float(best - vals[r - 1]) for r in supp}
        supports.append(supp)
        regrets.append(regs)
        ok = ok and all(v <= eps + ETA for v in regs.values())
    return MultiWsneCertificate(profile, eps, supports, regrets, bool(ok))


@dataclass
class MultiSolveConfig:
    grid_resolution: float | None = None    # default eps / 8 (l1)
    voronoi_slack: float | None = None      # default eps / 8
    refine_rounds: int = 3
    lattice_cap: int = 400_000


def solve_wsne_multiplayer(labellings, g_for_verification: NormalFormGame, eps: float,
                           cfg: MultiSolveConfig | None = None,
                           queries: int = 0) -> MultiWsneCertificate:
    """Grid search for a profile supported by slack l1-Voronoi best responses.

    ``labellings`` must be (eps/2)-close in l1 (as produced by
    learn_multiplayer_labellings); the verification game is consulted only
    to fill the certificate's regrets afterwards.
    """
    cfg = cfg or MultiSolveConfig()
    start = time.perf_counter()
    g = g_for_verification
    n, k = g.n, g.k
    d = k - 1
    delta = cfg.grid_resolution if cfg.grid_resolution is not None else eps / 8.0
    sigma = cfg.voronoi_slack if cfg.voronoi_slack is not None else eps / 8.0

    for _round in range(cfg.refine_rounds):
        spacing = min(2.0 * delta / max(d, 1), 1.0)
        grid = simplex_lattice(d, spacing) if d else np.zeros((1, 0))
        gn = grid.shape[0]
        if gn ** n > cfg.lattice_cap:
            raise RuntimeError("profile lattice beyond cap; refine manually")
        supp_masks = np.zeros(gn, dtype=np.int64)
        first = 1.0 - grid.sum(axis=1)
        supp_masks |= np.where(first > SUPPORT_MASS, 1, 0).astype(np.int64)
        for j in range(d):
            supp_masks |= np.where(grid[:, j] > SUPPORT_MASS, 1 << (j + 1), 0).astype(np.int64)

        # Voronoi masks per player over the joint grids of the others
        joint_index = list(itertools.product(range(gn), repeat=n - 1))
        joints = np.array([np.concatenate([grid[t] for t in tup]) for tup in joint_index]) \
            if n > 1 else np.zeros((1, 0))
        vor = []
        for i in range(1, n + 1):
            dists = labellings[i - 1].l1_distances(joints)
            dmin = dists.min(axis=0)
            masks = np.zeros(joints.shape[0], dtype=np.int64)
            for r in range(1, k + 1):
                masks |= np.where(dists[r - 1] <= dmin + sigma + ETA, 1 << (r - 1), 0).astype(np.int64)
            vor.append({tup: int(masks[z]) for z, tup in enumerate(joint_index)})

        for prof in itertools.product(range(gn), repeat=n):
            good = True
            for i in range(n):
                others = tuple(prof[j] for j in range(n) if j != i)
                if int(supp_masks[prof[i]]) & ~vor[i][others]:
                    good = False
                    break
            if good:
                profile = [grid[prof[i]].copy() for i in range(n)]
                cert = MultiWsneCertificate(
                    profile, eps,
                    [_mask_to_list(int(supp_masks[prof[i]])) for i in range(n)],
                    queries=queries, grid_resolution=delta,
                    wall_ms=(time.perf_counter() - start) * 1e3)
                return cert
        delta /= 2.0
    raise RuntimeError(f"fixed point not found at resolution {delta:g}")
