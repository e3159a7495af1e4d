"""Truncated shortcut distance and the ball, Ahlfors and ratio checks built on it.

The distance is the cheapest itinerary where walks cost the base distance
and flights cost the shortcut cost.  Queries run Dijkstra lazily on the
complete graph: a settled vertex ``u`` at distance ``du`` only looks for
endpoints within ``budget - du``, where ``budget`` is the direct walk cost.
No vertex beyond the budget can sit on an optimal itinerary, so this is exact.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Protocol, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .group_core import HPoint, box_distance_many
from .shortcut_core import ShortcutFamily

REL_TOL = 1e-9
ABS_TOL = 1e-12


def truncation_error(lam: float, top: int) -> float:
    """Bound on how much shortcuts above level ``top`` can shorten any distance."""
    return 8.0 * lam ** (top + 1) / (1.0 - lam)


def prune_factor(lam: float) -> float:
    return 2.0 + 8.0 / (lam - lam * lam)


class ShortcutProvider(Protocol):
    """Endpoint registry used by :class:`TruncatedMetric`.

    Endpoints are addressed by integer ids; ``size`` may grow when a
    provider generates endpoints on demand.
    """

    lam: float
    size: int

    def rho(self, a: Any, b: Any) -> float: ...

    def point(self, i: int) -> Any: ...

    def locate(self, p: Any) -> int | None: ...

    def near(self, p: Any, radius: float, top: int) -> tuple[np.ndarray, np.ndarray]: ...

    def partners(self, i: int, top: int) -> list[tuple[int, float, int]]: ...


class FamilyIndex:
    """Spatial index over the endpoints of a finite :class:`ShortcutFamily`.

    ``coords`` maps a point to a coordinate vector.  With ``heisenberg=True``
    a KD-tree over sheared coordinates yields candidate sets for box-distance
    balls; otherwise all endpoints are scanned with the vectorized ``metric``.
    """

    def __init__(
        self,
        family: ShortcutFamily,
        metric: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
        coords: Callable[[Any], Sequence[float]] | None = None,
        heisenberg: bool = False,
    ):
        if metric is None and not heisenberg:
            raise ValueError("a vectorized metric is required for non-Heisenberg families")
        self.family = family
        self.lam = family.lam
        self.rho = family.rho
        self._metric = box_distance_many if heisenberg else metric
        self._coords = coords or (lambda p: np.atleast_1d(np.asarray(p, dtype=float)))
        ids: dict[Any, int] = {}
        links: list[list[tuple[int, float, int]]] = []
        level_of: list[int] = []
        for sc in family:
            for p in (sc.a, sc.b):
                if p not in ids:
                    ids[p] = len(ids)
                    links.append([])
                    level_of.append(sc.level)
            ia, ib = ids[sc.a], ids[sc.b]
            links[ia].append((ib, sc.cost, sc.level))
            links[ib].append((ia, sc.cost, sc.level))
            level_of[ia] = min(level_of[ia], sc.level)
            level_of[ib] = min(level_of[ib], sc.level)
        self._ids = ids
        self._links = links
        self.points = list(ids)
        self.size = len(self.points)
        self.levels = np.array(level_of, dtype=int)
        dim = 3 if heisenberg else (len(self._coords(self.points[0])) if self.points else 1)
        self.xyz = np.array([self._coords(p) for p in self.points], dtype=float).reshape(-1, dim)
        self._tree = None
        if heisenberg and self.size:
            self._shear = 1.0 + float(np.max(np.abs(self.xyz[:, :2]).sum(axis=1)))
            scaled = self.xyz.copy()
            scaled[:, 2] /= self._shear
            self._tree = cKDTree(scaled)

    def point(self, i: int) -> Any:
        return self.points[i]

    def locate(self, p: Any) -> int | None:
        return self._ids.get(p)

    def near(self, p: Any, radius: float, top: int) -> tuple[np.ndarray, np.ndarray]:
        empty = (np.zeros(0, dtype=int), np.zeros(0))
        if not self.size or radius < 0:
            return empty
        q = np.asarray(self._coords(p), dtype=float)
        if self._tree is not None:
            # |dz| <= r^2 + r(|x|+|y|)/2 inside a box-distance ball of radius r
            half_sum = 0.5 * (abs(q[0]) + abs(q[1]))
            query_r = max(radius, (radius * radius + half_sum * radius) / self._shear)
            scaled = q.copy()
            scaled[2] /= self._shear
            idx = np.asarray(self._tree.query_ball_point(scaled, query_r * (1 + 1e-12) + 1e-15, p=np.inf), dtype=int)
            if not len(idx):
                return empty
        else:
            idx = np.arange(self.size)
        d = self._metric(self.xyz[idx], q[None, :])
        keep = (d <= radius) & (self.levels[idx] <= top)
        return idx[keep], d[keep]

    def partners(self, i: int, top: int) -> list[tuple[int, float, int]]:
        return [rec for rec in self._links[i] if rec[2] <= top]


@dataclass
class DistanceResult:
    value: float
    epsilon: float
    vertices: int
    path: list = field(default_factory=list)

    @property
    def lower(self) -> float:
        return max(0.0, self.value - self.epsilon)


_SOURCE = -1
_TARGET = -2


class TruncatedMetric:
    """The shortcut distance restricted to levels ``<= top``."""

    def __init__(self, provider: ShortcutProvider, top: int, region: Callable[[Any], bool] | None = None):
        self.provider = provider
        self.top = top
        self.region = region
        self.lam = provider.lam
        self.epsilon = truncation_error(self.lam, top)

    def rho(self, a: Any, b: Any) -> float:
        return self.provider.rho(a, b)

    def _explore(self, x: Any, budget: float, target: Any = None, radius: float = math.inf):
        """Lazy Dijkstra from ``x`` over tentative distances ``<= budget``.

        Endpoints farther than ``radius`` from ``x`` are dropped (pruning).
        Returns settled distances keyed by id (``-1`` is ``x``, ``-2`` the
        target) and the predecessor map.
        """
        prov = self.provider
        slack = budget * (1 + 1e-12) + 1e-15
        src = prov.locate(x)
        start = _SOURCE if src is None else src
        dist = np.full(max(prov.size, 1), np.inf)
        done = np.zeros(len(dist), dtype=bool)
        best = {start: 0.0}
        prev: dict[int, int] = {}
        settled: dict[int, float] = {}
        heap: list[tuple[float, int]] = [(0.0, start)]
        if target is not None:
            tgt = prov.locate(target)
            tgt = _TARGET if tgt is None else tgt
        else:
            tgt = None

        def grow(n: int):
            nonlocal dist, done
            if n > len(dist):
                extra = n - len(dist) + len(dist)
                dist = np.concatenate([dist, np.full(extra, np.inf)])
                done = np.concatenate([done, np.zeros(extra, dtype=bool)])

        def pt(i: int) -> Any:
            return x if i == _SOURCE else target if i == _TARGET else prov.point(i)

        while heap:
            du, u = heapq.heappop(heap)
            if u in settled or du > best.get(u, math.inf):
                continue
            settled[u] = du
            if u >= 0:
                done[u] = True
            if tgt is not None and u == tgt:
                break
            up = pt(u)
            if tgt == _TARGET:
                w = du + prov.rho(up, target)
                if w <= slack and w < best.get(_TARGET, math.inf):
                    best[_TARGET] = w
                    prev[_TARGET] = u
                    heapq.heappush(heap, (w, _TARGET))
            ids, d = prov.near(up, budget - du, self.top)
            grow(prov.size)
            if radius != math.inf and len(ids):
                keep = np.array([prov.rho(x, prov.point(i)) <= radius for i in ids], dtype=bool)
                ids, d = ids[keep], d[keep]
            if len(ids):
                nd = du + d
                better = (nd < dist[ids]) & ~done[ids] & (nd <= slack)
                for v, w in zip(ids[better].tolist(), nd[better].tolist()):
                    dist[v] = w
                    best[v] = w
                    prev[v] = u
                    heapq.heappush(heap, (w, v))
            if u >= 0:
                for v, cost, _lvl in prov.partners(u, self.top):
                    grow(prov.size)
                    w = du + cost
                    if radius != math.inf and prov.rho(x, prov.point(v)) > radius:
                        continue
                    if w <= slack and w < dist[v] and not done[v]:
                        dist[v] = w
                        best[v] = w
                        prev[v] = u
                        heapq.heappush(heap, (w, v))
        return settled, prev, pt

    def distance(self, x: Any, y: Any, prune: bool = False, with_path: bool = False) -> DistanceResult:
        if self.region is not None:
            for p in (x, y):
                if not self.region(p) and self.provider.locate(p) is None:
                    raise ValueError(f"query point {p!r} lies outside the constructed region")
        if x == y:
            return DistanceResult(0.0, self.epsilon, 1, [x])
        budget = self.rho(x, y)
        radius = prune_factor(self.lam) * budget if prune else math.inf
        settled, prev, pt = self._explore(x, budget, target=y, radius=radius)
        tid = self.provider.locate(y)
        tid = _TARGET if tid is None else tid
        value = min(settled.get(tid, budget), budget)
        path: list = []
        if with_path and tid in settled:
            node = tid
            chain = [node]
            while node in prev:
                node = prev[node]
                chain.append(node)
            path = [pt(i) for i in reversed(chain)]
        return DistanceResult(value, self.epsilon, len(settled), path)

    def __call__(self, x: Any, y: Any) -> float:
        return self.distance(x, y).value

    def reach(self, x: Any, r: float) -> dict[Any, float]:
        """``x`` and the endpoints at truncated distance ``< r`` from ``x``."""
        settled, _, pt = self._explore(x, r)
        return {pt(i): d for i, d in settled.items() if d < r}

    def partner_points(self, p: Any) -> list[tuple[Any, float, int]]:
        i = self.provider.locate(p)
        if i is None:
            return []
        return [(self.provider.point(j), c, lvl) for j, c, lvl in self.provider.partners(i, self.top)]


# -- checks ------------------------------------------------------------------

@dataclass(frozen=True)
class PositivityReport:
    certified: int
    inconclusive: int
    zero_pairs: int
    identical_zero: bool


def check_positivity(metric: TruncatedMetric, pairs: Iterable[tuple[Any, Any]]) -> PositivityReport:
    certified = inconclusive = zeros = 0
    identical_zero = True
    for x, y in pairs:
        val = metric.distance(x, y).value
        if x == y:
            identical_zero &= val == 0.0
            continue
        if val - metric.epsilon > 0:
            certified += 1
        elif val > 0:
            inconclusive += 1
        else:
            zeros += 1
    return PositivityReport(certified, inconclusive, zeros, identical_zero)


def low_level_pairs(metric: TruncatedMetric, x: Any, r: float, n: int) -> set[frozenset]:
    """Shortcut pairs of level ``< n`` with an endpoint in the open ``r``-ball around ``x``."""
    found: set[frozenset] = set()
    for p in metric.reach(x, r):
        for q, _cost, lvl in metric.partner_points(p):
            if lvl < n:
                found.add(frozenset((p, q)))
    return found


def check_unique_low_level(metric: TruncatedMetric, x: Any, r: float, n: int) -> int:
    if not 0 < r < metric.lam**n:
        raise ValueError("radius must lie in (0, lambda**n)")
    return len(low_level_pairs(metric, x, r, n))


@dataclass(frozen=True)
class InclusionReport:
    anchor: tuple
    balls: int
    violations: int
    worst_ratio: float


def ball_cover(metric: TruncatedMetric, x: Any, r: float) -> list[tuple[Any, float]]:
    """The open ``r``-ball of the truncated metric as a union of base-metric balls (center, radius)."""
    return [(p, r - d) for p, d in metric.reach(x, r).items()]


def _level_for_radius(lam: float, r: float) -> int:
    # smallest n >= 1 with r < lam**n fails; we want lam**(n+1) <= r < lam**n
    n = 0
    while lam ** (n + 1) > r:
        n += 1
    return n


def check_ball_inclusion(
    metric: TruncatedMetric,
    x: Any,
    r: float,
    lattice_points: Callable[[Any, float], np.ndarray] | None = None,
    to_point: Callable[[np.ndarray], Any] = lambda row: HPoint(*row),
) -> InclusionReport:
    """Every point of the ``r``-ball lies within ``prune_factor * r`` of the anchor pair.

    A component ball ``B(c, s)`` of the union passes outright when
    ``rho(c, anchor) + s`` is within the bound; otherwise its lattice points
    (from ``lattice_points``) are tested one by one.
    """
    lam = metric.lam
    bound = prune_factor(lam) * r
    anchor: tuple = (x, x)
    if r < 1.0:
        n = _level_for_radius(lam, r)
        pairs = low_level_pairs(metric, x, r, n) if n >= 1 else set()
        if len(pairs) > 1:
            return InclusionReport(anchor, 0, 1, math.inf)
        if pairs:
            anchor = tuple(sorted(next(iter(pairs))))
    rho = metric.rho
    balls = ball_cover(metric, x, r)
    violations = 0
    worst = 0.0
    for c, s in balls:
        reach = min(rho(c, anchor[0]), rho(c, anchor[1])) + s
        if reach <= bound * (1 + REL_TOL):
            worst = max(worst, reach / bound)
            continue
        if lattice_points is None:
            violations += 1
            continue
        pts = lattice_points(c, s)
        if len(pts) == 0:
            continue
        a0 = np.asarray(anchor[0], dtype=float)
        a1 = np.asarray(anchor[1], dtype=float)
        d = np.minimum(box_distance_many(pts, a0[None, :]), box_distance_many(pts, a1[None, :]))
        worst = max(worst, float(d.max()) / bound)
        violations += int((d > bound * (1 + REL_TOL)).sum())
    return InclusionReport(anchor, len(balls), violations, worst)


# -- Heisenberg lattice counting --------------------------------------------

def lattice_ball(center: Sequence[float], radius: float, e: int, box: tuple[float, float] | None = None, strict: bool = True) -> np.ndarray:
    """Integer lattice indices ``(i, j, k)`` of points ``(i/2^e, j/2^e, k/4^e)`` in a box-distance ball.

    ``box = (side, zside)`` clips to the sampled region.
    """
    h, hz = 2.0**-e, 4.0**-e
    cx, cy, cz = (float(v) for v in center)
    i0, i1 = math.ceil((cx - radius) / h), math.floor((cx + radius) / h)
    j0, j1 = math.ceil((cy - radius) / h), math.floor((cy + radius) / h)
    if box is not None:
        i0, j0 = max(i0, 0), max(j0, 0)
        i1 = min(i1, int(round(box[0] / h)))
        j1 = min(j1, int(round(box[0] / h)))
    if i0 > i1 or j0 > j1:
        return np.zeros((0, 3), dtype=np.int64)
    I, J = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
    I, J = I.ravel(), J.ravel()
    x, y = I * h, J * h
    keep = (np.abs(x - cx) < radius) if strict else (np.abs(x - cx) <= radius)
    keep &= (np.abs(y - cy) < radius) if strict else (np.abs(y - cy) <= radius)
    I, J, x, y = I[keep], J[keep], x[keep], y[keep]
    # |z - mid| < radius^2 with mid the sheared center height of the column
    mid = cz + 0.5 * (cx * y - x * cy)
    r2 = radius * radius
    k0 = np.ceil((mid - r2) / hz).astype(np.int64)
    k1 = np.floor((mid + r2) / hz).astype(np.int64)
    if strict:
        k0 = np.where(k0 * hz <= mid - r2, k0 + 1, k0)
        k1 = np.where(k1 * hz >= mid + r2, k1 - 1, k1)
    if box is not None:
        k0 = np.maximum(k0, 0)
        k1 = np.minimum(k1, int(round(box[1] / hz)))
    counts = np.maximum(k1 - k0 + 1, 0)
    total = int(counts.sum())
    if total == 0:
        return np.zeros((0, 3), dtype=np.int64)
    rep_i = np.repeat(I, counts)
    rep_j = np.repeat(J, counts)
    starts = np.repeat(k0, counts)
    offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    return np.column_stack([rep_i, rep_j, starts + offs])


def lattice_to_points(idx: np.ndarray, e: int) -> np.ndarray:
    return idx * np.array([2.0**-e, 2.0**-e, 4.0**-e])


def ball_measure(balls: Sequence[tuple[Any, float]], e: int, box: tuple[float, float]) -> float:
    """Counting-measure proxy of a union of open box-distance balls, in units of volume."""
    parts = [lattice_ball(c, s, e, box) for c, s in balls if s > 0]
    parts = [p for p in parts if len(p)]
    if not parts:
        return 0.0
    allidx = np.unique(np.vstack(parts), axis=0)
    return len(allidx) * 2.0 ** (-4 * e)


@dataclass(frozen=True)
class AhlforsProfile:
    radii: tuple[float, ...]
    ratios: np.ndarray  # (centers, radii)

    @property
    def band(self) -> float:
        return float(self.ratios.max() / self.ratios.min())


def ahlfors_profile(
    centers: Sequence[HPoint],
    radii: Sequence[float],
    e: int,
    box: tuple[float, float],
    metric: TruncatedMetric | None = None,
    dim: float = 4.0,
) -> AhlforsProfile:
    """``mu(B(x, r)) / r**dim`` for base-metric balls, or shortcut-metric balls when ``metric`` is given."""
    if min(radii) < 2.0**-e:
        raise ValueError("radius below the lattice resolution")
    out = np.zeros((len(centers), len(radii)))
    for a, x in enumerate(centers):
        for b, r in enumerate(radii):
            balls = [(x, r)] if metric is None else ball_cover(metric, x, r)
            out[a, b] = ball_measure(balls, e, box) / r**dim
    return AhlforsProfile(tuple(radii), out)


@dataclass(frozen=True)
class RatioRow:
    level: int
    alpha: float
    ratio: float
    eps: float
    rho: float
    pairs: int


def ratio_scan(
    provider: ShortcutProvider,
    pairs_by_level: dict[int, Sequence[tuple[Any, Any]]],
    schedule: Callable[[int], float],
    top: int | None = None,
) -> list[RatioRow]:
    """Per level, the largest ratio of truncated distance to base distance over the given pairs.

    Levels without pairs are skipped.  The truncation defaults to the level
    itself.
    """
    rows = []
    for n in sorted(pairs_by_level):
        pairs = pairs_by_level[n]
        if not pairs:
            continue
        metric = TruncatedMetric(provider, n if top is None else top)
        best = -math.inf
        rho_at = math.nan
        for a, b in pairs:
            base = provider.rho(a, b)
            val = metric.distance(a, b).value / base
            if val > best:
                best, rho_at = val, base
        rows.append(RatioRow(n, schedule(n), best, metric.epsilon, rho_at, len(pairs)))
    return rows


def spread_sample(items: Sequence, count: int) -> list:
    """Deterministic evenly spaced subsequence of at most ``count`` items."""
    if len(items) <= count:
        return list(items)
    idx = np.linspace(0, len(items) - 1, count).round().astype(int)
    return [items[i] for i in idx]
