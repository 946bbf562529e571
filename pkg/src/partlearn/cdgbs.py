"""Constant-dimension generalised binary search over dyadic levels.

The lexicographic variant descends dyadic intervals, recursing into a
cross-section at the midpoint of every interval whose slab is not yet
covered, and finally repairs the neighbourhoods of recursion coordinates
whose sub-runs were flagged (the degenerate-section escape hatch).  The
adversarial variant is the same search plus a merge loop driven by interior
conflicts between class hulls; on upper-envelope partitions every
cross-section is non-degenerate, which is what makes that safe.

Interval coverage inside the search is judged against the nearest labelled
cross-sections bracketing the interval (the quantity the covered-interval
counting argument is about); the public slice test on a labelling keeps the
plain endpoint semantics.
"""

from __future__ import annotations

import math
import time
from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass, field

import numpy as np

from .coverage import SimplexSlab, slab_certificate_2d, verify_eps_net
from .geometry import PointHull, convex_hull
from .labelling import EmpiricalLabelling, interior_conflict, is_slice_covered
from .predicates import ETA


def sub_eps(eps: float, m: int, n: int, t: float) -> float:
    """Accuracy handed to the cross-section recursion at coordinate t."""
    return eps * eps / (85.0 * (1.0 - t) * n * m ** 2.5)


def uncovered_cap(m: int, n: int) -> int:
    return 2 * (math.comb(n + m, m) + 2 * n)


def cdgbs_query_bound(m: int, n: int, eps: float) -> float:
    """Closed-form worst-case query bound of the search (log base 2)."""
    if m <= 0:
        return 1.0
    prod = 1.0
    for i in range(1, m + 1):
        prod *= math.comb(n + i, i) + 2 * n
    return prod * 2.0 ** (2 * m * m) * math.log2(170.0 * n * m ** 2.5 / eps) ** m


@dataclass
class GbsConfig:
    m: int
    n: int
    eps: float
    oracle_kind: str = "lexicographic"
    seed: int = 0
    uncovered_cap: int | None = None
    fix_attempt_cap: int | None = None

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.uncovered_cap is None:
            self.uncovered_cap = uncovered_cap(self.m, self.n)
        if self.fix_attempt_cap is None:
            self.fix_attempt_cap = self.uncovered_cap

    def sub_eps(self, t: float) -> float:
        return sub_eps(self.eps, self.m, self.n, t)


@dataclass(frozen=True)
class DyadicInterval:
    """I^k_x = [x - 2^-k, x] for x = i / 2^k."""

    k: int
    i: int

    def __post_init__(self):
        if not 1 <= self.i <= 2 ** self.k:
            raise ValueError("need 1 <= i <= 2^k")

    @property
    def right(self) -> float:
        return self.i / 2.0 ** self.k

    @property
    def left(self) -> float:
        return (self.i - 1) / 2.0 ** self.k

    @property
    def midpoint(self) -> float:
        return (self.i - 0.5) / 2.0 ** self.k


@dataclass
class RunStats:
    queries: int = 0
    recursions: int = 0
    fixes: int = 0
    per_level_uncovered: list = field(default_factory=list)
    merges: list = field(default_factory=list)
    halted_cap: bool = False
    conflict_flag: bool = False
    suspects: list = field(default_factory=list)
    wall_ms: float = 0.0


class _RunOutput:
    """Points (per raw label, local frame) plus flags from one search level."""

    __slots__ = ("points", "flagged")

    def __init__(self, points: dict, flagged: bool):
        self.points = points
        self.flagged = flagged


def _binary_search_1d(eps: float, query, n: int) -> _RunOutput:
    """Base case: learn a partition of the unit interval.

    Bisects every gap whose endpoint labels differ until gaps are at most
    eps wide; every point then sits within eps/2 of a labelled point, which
    is what the conservative grid verifier certifies at eps.
    """
    pts = {}

    def ask(x: float) -> int:
        lbl = query(np.array([x]))
        pts.setdefault(lbl, []).append(x)
        return lbl

    la, lb = ask(0.0), ask(1.0)
    gaps = [(0.0, 1.0, la, lb)] if la != lb else []
    while gaps:
        a, b, la, lb = gaps.pop()
        if b - a <= eps:
            continue
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:  # float resolution floor
            continue
        lm = ask(mid)
        if lm != la:
            gaps.append((a, mid, la, lm))
        if lm != lb:
            gaps.append((mid, b, lm, lb))

    out = {}
    flagged = False
    spans = {lbl: (min(v), max(v)) for lbl, v in pts.items()}
    for lbl, (lo, hi) in spans.items():
        out[lbl] = [np.array([[lo]])] if hi - lo <= ETA else [np.array([[lo], [hi]])]
        # interleaved labels mean the section was degenerate or ties abound
        for other, xs in pts.items():
            if other != lbl and any(lo + ETA < x < hi - ETA for x in xs):
                flagged = True
    return _RunOutput(out, flagged)


def _compress_labelwise(points: dict, m: int) -> dict:
    """Shrink each label's point set to its hull vertices (hulls unchanged)."""
    out = {}
    for lbl, blocks in points.items():
        pts = np.vstack(blocks)
        if pts.shape[0] > max(4, m + 1):
            pts = convex_hull(pts).vertices
        out[lbl] = [pts]
    return out


class _Search:
    """One CD-GBS invocation on a local corner simplex."""

    def __init__(self, m: int, n: int, eps: float, query, adversarial: bool,
                 cap: int, stats: RunStats, top: bool):
        self.m = m
        self.n = n
        self.eps = eps
        self.query = query
        self.adversarial = adversarial
        self.cap = cap
        self.stats = stats
        self.top = top
        self.nets = {}          # t -> {label: (k, m) array}
        self.coords = []        # sorted labelled coordinates
        self.flagged = False
        self.suspects = []      # local recursion coords with flagged sub-runs
        self._bracket_hulls = {}

    def _add_net(self, t: float, net: dict) -> None:
        self.nets[t] = net
        insort(self.coords, t)
        self._bracket_hulls.clear()

    def recurse(self, t: float) -> None:
        """Learn the cross-section at t and pull its points back."""
        self.stats.recursions += 1
        se = sub_eps(self.eps, self.m, self.n, t)
        scale = 1.0 - t

        if self.m - 1 == 0:
            lbl = self.query(np.array([t]))
            self._add_net(t, {lbl: np.array([[t]])})
            return

        def sub_query(z):
            x = np.empty(self.m)
            x[0] = t
            x[1:] = scale * z
            return self.query(x)

        res = _run(self.m - 1, self.n, se, sub_query, self.adversarial, self.stats)
        net = {}
        for lbl, blocks in res.points.items():
            Z = np.vstack(blocks)
            X = np.empty((Z.shape[0], self.m))
            X[:, 0] = t
            X[:, 1:] = scale * Z
            net[lbl] = X
        self._add_net(t, net)
        if res.flagged and t not in self.suspects:
            self.suspects.append(t)
            if self.top:
                self.stats.suspects.append(t)

    def bracket(self, a: float, b: float):
        """Nearest labelled coordinates enclosing [a, b]."""
        lo_i = bisect_right(self.coords, a + ETA) - 1
        hi_i = bisect_left(self.coords, b - ETA)
        t_l = self.coords[max(lo_i, 0)]
        t_r = self.coords[min(hi_i, len(self.coords) - 1)]
        return t_l, t_r

    def slab_covered(self, a: float, b: float) -> bool:
        t_l, t_r = self.bracket(a, b)
        if self.m == 2:
            # exact interval certificate; stays cheap at any eps
            return slab_certificate_2d(self.nets[t_l], self.nets[t_r], t_l, t_r, a, b, self.eps)
        key = (t_l, t_r)
        hulls = self._bracket_hulls.get(key)
        if hulls is None:
            merged = {}
            for t in (t_l, t_r) if t_r > t_l else (t_l,):
                for lbl, pts in self.nets[t].items():
                    merged.setdefault(lbl, []).append(pts)
            hulls = [PointHull(np.vstack(v)) for v in merged.values()]
            self._bracket_hulls[key] = hulls
        report = verify_eps_net(SimplexSlab(self.m, a, b), hulls, self.eps)
        return report.is_close

    def run(self) -> _RunOutput:
        self.recurse(0.0)
        apex = np.zeros(self.m)
        apex[0] = 1.0
        lbl = self.query(apex)
        self._add_net(1.0, {lbl: apex[None, :]})

        levels = max(0, math.ceil(math.log2(2.0 / self.eps)))
        frontier = [(0.0, 1.0)]
        for _k in range(1, levels + 1):
            children = []
            for a, b in frontier:
                mid = 0.5 * (a + b)
                if mid <= a or mid >= b:
                    continue
                children.extend([(a, mid), (mid, b)])
            if not children:
                frontier = []
                break
            uncovered = [iv for iv in children if not self.slab_covered(*iv)]
            if self.top:
                self.stats.per_level_uncovered.append(len(uncovered))
            if not self.adversarial and len(uncovered) > self.cap:
                self.stats.halted_cap = True
                self.flagged = True
                break
            for a, b in uncovered:
                self.recurse(0.5 * (a + b))
            frontier = uncovered

        if not self.adversarial and self.suspects and not self.stats.halted_cap:
            self._fix_suspects()

        points = {}
        for t, net in self.nets.items():
            for lbl, pts in net.items():
                points.setdefault(lbl, []).append(pts)
        return _RunOutput(_compress_labelwise(points, self.m), self.flagged)

    def _hulls(self) -> list:
        merged = {}
        for net in self.nets.values():
            for lbl, pts in net.items():
                merged.setdefault(lbl, []).append(pts)
        return [PointHull(np.vstack(v)) for v in merged.values()]

    def _fix_suspects(self) -> None:
        """Repair neighbourhoods of recursion coordinates whose sub-run was
        flagged (the degenerate-section escape hatch), in this run's frame."""
        for x in list(self.suspects):
            region = _ball_slab(x, self.eps, self.m)
            offsets = _vdc_offsets(0)
            tried = {x}
            for _ in range(2 * self.cap):
                if verify_eps_net(region, self._hulls(), self.eps).is_close:
                    break
                z = None
                while z is None:
                    cand = x + next(offsets) * self.eps / 2
                    if 0.0 <= cand < 1.0 and cand not in tried:
                        z = cand
                tried.add(z)
                self.stats.fixes += 1
                self.recurse(z)
            else:
                if not verify_eps_net(region, self._hulls(), self.eps).is_close:
                    raise RuntimeError("degenerate neighborhood exhausted")


def _run(m: int, n: int, eps: float, query, adversarial: bool, stats: RunStats,
         top: bool = False) -> _RunOutput:
    if m == 0:
        lbl = query(np.zeros(0))
        return _RunOutput({lbl: [np.zeros((1, 0))]}, False)
    if m == 1:
        return _binary_search_1d(eps, query, n)
    cap = uncovered_cap(m, n)
    return _Search(m, n, eps, query, adversarial, cap, stats, top).run()


def _ball_slab(x: float, eps: float, m: int) -> SimplexSlab:
    return SimplexSlab(m, max(0.0, x - eps / 2), min(1.0, x + eps / 2))


def _global_hulls(lab: EmpiricalLabelling) -> list:
    return [lab.point_hull(root) for root in lab.class_roots()]


def _vdc_offsets(seed: int):
    """Deterministic low-discrepancy offsets in (0, 1), alternating sides."""
    sign = 1 if seed % 2 == 0 else -1
    k = 1
    while True:
        # van der Corput base 2
        i, f, v = k, 0.5, 0.0
        while i:
            if i & 1:
                v += f
            i >>= 1
            f *= 0.5
        yield sign * v
        sign = -sign
        k += 1


def fix_uncovered_critical(lab: EmpiricalLabelling, x: float, cfg: GbsConfig, oracle,
                           stats: RunStats | None = None) -> EmpiricalLabelling:
    """Repair the neighbourhood of a recursion coordinate x.

    Recurses at fresh coordinates from a seeded low-discrepancy sequence
    inside the eps/2 ball around x until the ball slab is covered by the
    class hulls; raises after the attempt cap (an inconsistent oracle).
    """
    stats = stats or RunStats()
    region = _ball_slab(x, cfg.eps, cfg.m)
    tried = set()
    offsets = _vdc_offsets(cfg.seed)
    for _ in range(2 * cfg.fix_attempt_cap):
        if verify_eps_net(region, _global_hulls(lab), cfg.eps).is_close:
            return lab
        z = None
        while z is None:
            cand = x + next(offsets) * cfg.eps / 2
            if 0.0 <= cand < 1.0 and cand not in tried and abs(cand - x) > ETA:
                z = cand
        tried.add(z)
        stats.fixes += 1
        res = _section_run(cfg, oracle, z, stats)
        for lbl, blocks in res.points.items():
            for b in blocks:
                lab.add_block(b, lbl)
    if verify_eps_net(region, _global_hulls(lab), cfg.eps).is_close:
        return lab
    raise RuntimeError("degenerate neighborhood exhausted")


def _section_run(cfg: GbsConfig, oracle, t: float, stats: RunStats) -> _RunOutput:
    """One cross-section recursion at coordinate t, in ambient coordinates."""
    stats.recursions += 1
    m = cfg.m
    scale = 1.0 - t
    if m - 1 == 0:
        lbl = oracle(np.array([t]))
        return _RunOutput({lbl: [np.array([[t]])]}, False)

    def sub_query(z):
        xx = np.empty(m)
        xx[0] = t
        xx[1:] = scale * z
        return oracle(xx)

    res = _run(m - 1, cfg.n, cfg.sub_eps(t), sub_query, cfg.oracle_kind == "adversarial", stats)
    out = {}
    for lbl, blocks in res.points.items():
        Z = np.vstack(blocks)
        X = np.empty((Z.shape[0], m))
        X[:, 0] = t
        X[:, 1:] = scale * Z
        out[lbl] = [X]
    return _RunOutput(out, res.flagged)


def _assemble(points: dict, m: int, n: int) -> EmpiricalLabelling:
    lab = EmpiricalLabelling(m, n)
    for lbl, blocks in points.items():
        for b in blocks:
            lab.add_block(b, lbl)
    return lab


def cd_gbs(cfg: GbsConfig, oracle) -> EmpiricalLabelling:
    """Lexicographic search; returns a labelling with a ``stats`` attribute."""
    start = time.perf_counter()
    stats = RunStats()
    before = oracle.log.count
    res = _run(cfg.m, cfg.n, cfg.eps, oracle, adversarial=False, stats=stats, top=True)
    lab = _assemble(res.points, cfg.m, cfg.n)
    if cfg.m >= 1 and interior_conflict(lab) is not None:
        stats.conflict_flag = True
    stats.queries = oracle.log.count - before
    stats.wall_ms = (time.perf_counter() - start) * 1e3
    lab.stats = stats
    return lab


def cd_gbs_adversarial(cfg: GbsConfig, oracle) -> EmpiricalLabelling:
    """Adversarial search on an upper-envelope partition, with merging."""
    start = time.perf_counter()
    stats = RunStats()
    before = oracle.log.count
    res = _run(cfg.m, cfg.n, cfg.eps, oracle, adversarial=True, stats=stats, top=True)
    lab = _assemble(res.points, cfg.m, cfg.n)
    while True:
        conflict = interior_conflict(lab)
        if conflict is None:
            break
        i, j, _ = conflict
        lab.merge_labels(i, j)
        stats.merges.append((min(i, j), max(i, j)))
    stats.queries = oracle.log.count - before
    stats.wall_ms = (time.perf_counter() - start) * 1e3
    lab.stats = stats
    return lab


def uncovered_intervals(lab: EmpiricalLabelling, k: int, eps: float) -> list:
    """Dyadic level-k intervals whose endpoint-hull slices fail at eps."""
    out = []
    for i in range(1, 2 ** k + 1):
        iv = DyadicInterval(k, i)
        if not is_slice_covered(lab, (iv.left, iv.right), eps):
            out.append(iv)
    return out
