"""Base spaces, greedy separated nets and shortcut placement.

Two kinds of base space are supported:

* :class:`BaseSpace` holds an explicit finite sample and a vectorized metric;
  nets are built by a plain greedy scan.
* :class:`HeisenbergGrid` is an implicit dyadic lattice on a box of the
  Heisenberg group.  Nets are built column by column over the level's
  lattice, jumping over excluded z-intervals instead of visiting every point.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .group_core import HPoint, box_distance, box_distance_many
from .shortcut_core import CostSchedule, Shortcut, ShortcutFamily

Metric = Callable[[np.ndarray, np.ndarray], np.ndarray]


class NetCoverageError(RuntimeError):
    def __init__(self, level: int, point: Any, radius: float):
        super().__init__(f"level {level}: sample point {point!r} is farther than {radius:g} from every center")
        self.level = level
        self.point = point
        self.radius = radius


class PlacementError(RuntimeError):
    pass


@dataclass(frozen=True)
class ShortcutConfig:
    lam: float = 0.5
    c_E: float | None = None
    levels: tuple[int, ...] = (1, 2, 3, 4)
    schedule: CostSchedule = CostSchedule(0.5)

    def __post_init__(self) -> None:
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lambda must lie in (0, 1)")
        if self.c_E is None:
            object.__setattr__(self, "c_E", 8.0 + 1.0 / self.lam)
        if self.c_E < 4.0:
            raise ValueError("covering constant must be at least 4")
        lv = tuple(sorted(self.levels))
        if not lv or lv[0] < 1 or len(set(lv)) != len(lv):
            raise ValueError("levels must be distinct positive integers")
        if any(b != a + 1 for a, b in zip(lv, lv[1:])):
            raise ValueError("levels must be consecutive")
        object.__setattr__(self, "levels", lv)
        if not self.schedule.check(lv):
            raise ValueError("cost schedule must be non-increasing with values in [0, 1)")

    def radius(self, n: int) -> float:
        return self.lam**n

    def separation(self, n: int) -> float:
        return 4.0 * self.lam**n


@dataclass
class NetLevel:
    level: int
    centers: list
    shortcuts: list[Shortcut] = field(default_factory=list)


@dataclass(frozen=True)
class BaseSpace:
    """Finite sample of a metric space.

    ``metric`` works elementwise on arrays whose last axis holds coordinates;
    ``rho`` is the scalar distance on hashable points and ``to_point`` turns a
    coordinate row into such a point.
    """

    metric: Metric
    rho: Callable[[Any, Any], float]
    sample: np.ndarray
    diameter: float
    to_point: Callable[[np.ndarray], Any]

    def __post_init__(self) -> None:
        arr = np.asarray(self.sample, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        order = np.lexsort(arr.T[::-1])
        object.__setattr__(self, "sample", arr[order])

    def points(self) -> list:
        return [self.to_point(row) for row in self.sample]

    def spot_check(self, rng: np.random.Generator, trials: int = 1000, tol: float = 1e-12) -> int:
        """Count metric-axiom violations on random sample triples."""
        idx = rng.integers(0, len(self.sample), size=(trials, 3))
        a, b, c = (self.sample[idx[:, i]] for i in range(3))
        dab, dba = self.metric(a, b), self.metric(b, a)
        bad = np.abs(self.metric(a, a)) > tol
        bad |= np.abs(dab - dba) > tol
        bad |= dab > self.metric(a, c) + self.metric(c, b) + tol
        return int(bad.sum())


def line_space(step: float, length: float, exponent: float = 1.0) -> BaseSpace:
    """Sample ``{0, step, ..., length}`` of the line with distance ``|x - y| ** exponent``."""
    count = int(round(length / step))
    sample = np.arange(count + 1) * step
    return BaseSpace(
        metric=lambda p, q: np.abs(p[..., 0] - q[..., 0]) ** exponent,
        rho=lambda a, b: abs(a - b) ** exponent,
        sample=sample,
        diameter=length**exponent,
        to_point=lambda row: float(row[0]),
    )


def _as_rows(points: Sequence, dim: int) -> np.ndarray:
    if len(points) == 0:
        return np.zeros((0, dim))
    return np.asarray(points, dtype=float).reshape(len(points), dim)


def build_net(space: BaseSpace, cfg: ShortcutConfig, prior: Sequence, n: int) -> NetLevel:
    """Greedy lexicographic net of the sample outside the open prior-endpoint balls."""
    if cfg.lam > 0.25:
        warnings.warn("lambda above 1/4: net existence is not guaranteed", stacklevel=2)
    sep = cfg.separation(n)
    pts = space.sample
    dim = pts.shape[1]
    free = np.ones(len(pts), dtype=bool)
    prior_rows = _as_rows(prior, dim)
    for row in prior_rows:
        free &= space.metric(pts, row) >= sep
    chosen: list[int] = []
    blocked = ~free
    for i in range(len(pts)):
        if blocked[i]:
            continue
        chosen.append(i)
        blocked |= space.metric(pts, pts[i]) < sep
    centers = pts[chosen]
    reach = cfg.c_E * cfg.radius(n)
    if len(centers) == 0:
        raise NetCoverageError(n, space.to_point(pts[0]), reach)
    nearest = np.full(len(pts), np.inf)
    for c in centers:
        nearest = np.minimum(nearest, space.metric(pts, c))
    far = np.nonzero(nearest > reach)[0]
    if len(far):
        raise NetCoverageError(n, space.to_point(pts[far[0]]), reach)
    return NetLevel(n, [space.to_point(c) for c in centers])


# -- shortcut conditions and placement ---------------------------------------

@dataclass(frozen=True)
class ConditionReport:
    trials: int
    violations: int
    worst_margin: float

    @property
    def ok(self) -> bool:
        return self.violations == 0


def verify_shortcut_condition(
    metric: Metric,
    q1: np.ndarray,
    q2: np.ndarray,
    p1: np.ndarray,
    p2: np.ndarray,
    tol: float = 1e-12,
) -> ConditionReport:
    """Check ``rho(p1, p2) <= rho(p1, q1) + rho(p2, q2)`` on paired exterior samples."""
    margin = metric(p1, q1) + metric(p2, q2) - metric(p1, p2)
    return ConditionReport(len(margin), int((margin < -tol).sum()), float(margin.min()) if len(margin) else math.inf)


def heisenberg_exterior_sample(center: HPoint, radius: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Random points with box distance at least ``radius`` from ``center``.

    Half the points are pushed onto the sphere of radius ``radius`` where the
    condition is tightest.
    """
    out = np.empty((0, 3))
    while len(out) < count:
        u = rng.uniform(-3.0, 3.0, size=(2 * count, 3))
        u[:, 2] *= 3.0
        norm = np.maximum(np.maximum(np.abs(u[:, 0]), np.abs(u[:, 1])), np.sqrt(np.abs(u[:, 2])))
        u = u[norm > 0]
        norm = norm[norm > 0]
        keep = norm >= 1.0
        on_sphere = rng.random(len(u)) < 0.5
        scale = np.where(on_sphere, 1.0 / norm, 1.0)
        u[:, :2] *= scale[:, None]
        u[:, 2] *= scale**2
        u = u[keep | on_sphere]
        out = np.vstack([out, u])
    u = out[:count] * np.array([radius, radius, radius * radius])
    c = np.broadcast_to(np.asarray(center, dtype=float), u.shape)
    pts = c + u
    pts[:, 2] += 0.5 * (c[:, 0] * u[:, 1] - c[:, 1] * u[:, 0])
    return pts


def heisenberg_pair(center: HPoint, radius: float) -> tuple[HPoint, HPoint]:
    """``q1 = center`` and ``q2 = center * (0, 0, radius**2 / 4)``; their distance is ``radius / 2``."""
    return center, HPoint(center.x, center.y, center.z + radius * radius / 4.0)


def place_heisenberg(net: NetLevel, cfg: ShortcutConfig) -> list[Shortcut]:
    if cfg.lam > 0.5:
        raise PlacementError("vertical placement needs lambda <= 1/2")
    r = cfg.radius(net.level)
    alpha = cfg.schedule(net.level)
    out = []
    for c in net.centers:
        q1, q2 = heisenberg_pair(c, r)
        out.append(Shortcut(q1, q2, net.level, alpha * box_distance(q1, q2), c, r))
    return out


def place_generic(
    net: NetLevel,
    cfg: ShortcutConfig,
    rho: Callable[[Any, Any], float],
    chooser: Callable[[Any, float], tuple[Any, Any]],
) -> list[Shortcut]:
    """Place one pair per center with a space-specific ``chooser(center, radius)``.

    The chooser's output is checked for containment in the center ball and
    for the minimal separation ``lambda ** (n + 1)``.
    """
    r = cfg.radius(net.level)
    alpha = cfg.schedule(net.level)
    out = []
    for c in net.centers:
        q1, q2 = chooser(c, r)
        gap = rho(q1, q2)
        if rho(q1, c) > r or rho(q2, c) > r:
            raise PlacementError(f"endpoints for center {c!r} leave the ball of radius {r:g}")
        if gap < cfg.lam ** (net.level + 1) * (1 - 1e-12):
            raise PlacementError(f"endpoints for center {c!r} are closer than lambda^(n+1)")
        out.append(Shortcut(q1, q2, net.level, alpha * gap, c, r))
    return out


@dataclass(frozen=True)
class SnowflakeLine:
    """The line with distance ``|x - y| ** delta`` and its shortcut annulus."""

    delta: float = 0.5
    ahlfors_c: float = 1.0
    dim: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ValueError("snowflake exponent must lie in (0, 1)")

    @property
    def lam(self) -> float:
        return (2 * self.ahlfors_c) ** (-2 * self.delta / self.dim) * (1 - self.delta) ** self.delta

    def annulus(self, r: float) -> tuple[float, float]:
        """Euclidean radii (inner, outer] of the admissible second endpoint."""
        outer = (1 - self.delta) * r ** (1 / self.delta)
        inner = (2 * self.ahlfors_c) ** (-2 / self.dim) * outer
        return inner, outer

    def rho(self, a: float, b: float) -> float:
        return abs(a - b) ** self.delta

    def metric(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        return np.abs(p[..., 0] - q[..., 0]) ** self.delta


def place_snowflake(
    line: SnowflakeLine, sample: np.ndarray, center: float, r: float
) -> tuple[float, float]:
    """Return ``(center, q2)`` with ``q2`` the farthest sample point inside the annulus.

    Points to the right win ties.
    """
    inner, outer = line.annulus(r)
    pts = np.asarray(sample, dtype=float).reshape(-1)
    dist = np.abs(pts - center)
    ok = (dist > inner) & (dist <= outer)
    if not ok.any():
        raise PlacementError(f"no sample point in the annulus ({inner:g}, {outer:g}] around {center:g}")
    cand = pts[ok]
    d = np.abs(cand - center)
    best = cand[d == d.max()].max()
    return center, float(best)


def build_snowflake_family(
    line: SnowflakeLine, step: float, length: float, levels: Sequence[int], schedule: CostSchedule = CostSchedule(0.5)
) -> tuple[BaseSpace, ShortcutFamily, list[NetLevel]]:
    space = line_space(step, length, line.delta)
    cfg = ShortcutConfig(lam=line.lam, levels=tuple(levels), schedule=schedule)
    family = ShortcutFamily(line.rho, cfg.lam)
    nets = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for n in cfg.levels:
            net = build_net(space, cfg, family.endpoints(), n)
            net.shortcuts = place_generic(
                net, cfg, line.rho, lambda c, r: place_snowflake(line, space.sample, c, r)
            )
            for sc in net.shortcuts:
                family.add(sc)
            nets.append(net)
    return space, family, nets


# -- Heisenberg lattice ------------------------------------------------------

@dataclass(frozen=True)
class HeisenbergGrid:
    """Dyadic lattice on the box ``[0, s]^2 x [0, s^2]`` with ``s = 2**-scale``.

    The full-resolution step is ``2**-m`` in x and y and ``4**-m`` in z; a
    level only ever visits the coarser sublattice it needs.
    """

    m: int = 7
    scale: int = 0

    def __post_init__(self) -> None:
        if self.m <= self.scale:
            raise ValueError("resolution exponent must exceed the box scale")

    @property
    def side(self) -> float:
        return 2.0 ** (-self.scale)

    @property
    def diameter(self) -> float:
        return self.side * math.sqrt(1.5)

    rho = staticmethod(box_distance)
    metric = staticmethod(box_distance_many)

    def contains(self, p: HPoint, tol: float = 1e-12) -> bool:
        s = self.side
        return -tol <= p.x <= s + tol and -tol <= p.y <= s + tol and -tol <= p.z <= s * s + tol

    def lattice_exponent(self, n: int, lam: float) -> int:
        """Sublattice exponent whose step is half the level radius."""
        j = -math.log2(lam)
        if abs(j - round(j)) > 1e-12:
            raise ValueError("the Heisenberg lattice needs lambda = 2**-j")
        e = int(round(j)) * n + 1
        if e > self.m:
            raise ValueError(f"level {n} needs resolution exponent {e}, grid has {self.m}")
        return e

    def lattice(self, e: int) -> tuple[np.ndarray, np.ndarray]:
        """xy coordinates and z coordinates of the sublattice with exponent ``e``."""
        e = min(e, self.m)
        nxy = 2 ** (e - self.scale)
        nz = 4 ** (e - self.scale)
        return np.arange(nxy + 1) / 2.0**e, np.arange(nz + 1) / 4.0**e

    def random_points(self, rng: np.random.Generator, count: int, e: int | None = None) -> np.ndarray:
        e = self.m if e is None else min(e, self.m)
        nxy = 2 ** (e - self.scale)
        nz = 4 ** (e - self.scale)
        ij = rng.integers(0, nxy + 1, size=(count, 2))
        k = rng.integers(0, nz + 1, size=count)
        return np.column_stack([ij / 2.0**e, k / 4.0**e])

    def sample(self, e: int) -> np.ndarray:
        """Materialize a sublattice (only sensible for small ``e - scale``)."""
        xy, z = self.lattice(e)
        X, Y, Z = np.meshgrid(xy, xy, z, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])


class _CellIndex:
    """Points bucketed by xy cells of a fixed width, with cheap appends."""

    def __init__(self, width: float, rows: np.ndarray | None = None):
        self.width = width
        self.cells: dict[tuple[int, int], list[np.ndarray]] = {}
        if rows is not None and len(rows):
            keys = np.floor(rows[:, :2] / width).astype(np.int64)
            order = np.lexsort((keys[:, 1], keys[:, 0]))
            keys, rows = keys[order], rows[order]
            splits = np.nonzero(np.any(np.diff(keys, axis=0) != 0, axis=1))[0] + 1
            for chunk, key in zip(np.split(rows, splits), keys[np.r_[0, splits]]):
                self.cells[(int(key[0]), int(key[1]))] = [chunk]

    def key(self, x: float, y: float) -> tuple[int, int]:
        return (math.floor(x / self.width), math.floor(y / self.width))

    def add(self, rows: np.ndarray) -> None:
        for row in rows:
            k = self.key(row[0], row[1])
            bucket = self.cells.setdefault(k, [])
            bucket.append(row[None, :])
            if len(bucket) > 16:
                self.cells[k] = [np.vstack(bucket)]

    def near(self, x: float, y: float, reach: int = 1) -> np.ndarray:
        cx, cy = self.key(x, y)
        parts = []
        for i in range(cx - reach, cx + reach + 1):
            for j in range(cy - reach, cy + reach + 1):
                parts.extend(self.cells.get((i, j), ()))
        if not parts:
            return np.zeros((0, 3))
        return np.vstack(parts) if len(parts) > 1 else parts[0]


def _column_intervals(x: float, y: float, pts: np.ndarray, radius: float, closed: bool) -> tuple[np.ndarray, np.ndarray]:
    """z-intervals of the column over ``(x, y)`` lying in the radius-balls around ``pts``."""
    if len(pts) == 0:
        return np.zeros(0), np.zeros(0)
    if closed:
        mask = (np.abs(pts[:, 0] - x) <= radius) & (np.abs(pts[:, 1] - y) <= radius)
    else:
        mask = (np.abs(pts[:, 0] - x) < radius) & (np.abs(pts[:, 1] - y) < radius)
    p = pts[mask]
    mid = p[:, 2] + 0.5 * (p[:, 0] * y - x * p[:, 1])
    r2 = radius * radius
    order = np.argsort(mid - r2, kind="stable")
    return (mid - r2)[order], (mid + r2)[order]


def _scan_column(lo: np.ndarray, hi: np.ndarray, zmax: float, step: float, gap: float) -> list[float]:
    """Greedy z-values on ``{0, step, ..}`` avoiding open intervals, spaced at least ``gap`` apart."""
    cummax = np.maximum.accumulate(hi) if len(hi) else hi
    out: list[float] = []
    z = 0.0
    while z <= zmax:
        idx = int(np.searchsorted(lo, z, side="left"))
        if idx and cummax[idx - 1] > z:
            z = math.ceil(cummax[idx - 1] / step) * step
            continue
        out.append(z)
        z += gap
    return out


def _covered(lo: np.ndarray, hi: np.ndarray, zmax: float) -> float | None:
    """First z in [0, zmax] outside the union of closed intervals, else None."""
    reach = 0.0
    for a, b in zip(lo, hi):
        if a > reach:
            return reach
        reach = max(reach, b)
        if reach >= zmax:
            return None
    return None if reach >= zmax else reach


def heisenberg_net(grid: HeisenbergGrid, cfg: ShortcutConfig, prior: np.ndarray, n: int, check_cover: bool = True) -> NetLevel:
    """Greedy lexicographic net of the level-n sublattice, outside open balls around ``prior``."""
    e = grid.lattice_exponent(n, cfg.lam)
    xs, zs = grid.lattice(e)
    zstep = zs[1] - zs[0]
    zmax = zs[-1]
    sep = cfg.separation(n)
    blockers = _CellIndex(sep, np.asarray(prior, dtype=float).reshape(-1, 3))
    accepted = _CellIndex(sep)
    centers: list[HPoint] = []
    for x in xs:
        for y in xs:
            lo1, hi1 = _column_intervals(x, y, blockers.near(x, y), sep, closed=False)
            lo2, hi2 = _column_intervals(x, y, accepted.near(x, y), sep, closed=False)
            lo = np.concatenate([lo1, lo2])
            hi = np.concatenate([hi1, hi2])
            order = np.argsort(lo, kind="stable")
            zs_new = _scan_column(lo[order], hi[order], zmax, zstep, sep * sep)
            if zs_new:
                rows = np.column_stack([np.full(len(zs_new), x), np.full(len(zs_new), y), zs_new])
                accepted.add(rows)
                centers.extend(HPoint(x, y, z) for z in zs_new)
    net = NetLevel(n, centers)
    if check_cover:
        check_heisenberg_cover(grid, cfg, net)
    return net


def check_heisenberg_cover(grid: HeisenbergGrid, cfg: ShortcutConfig, net: NetLevel) -> None:
    """Every point of every column of the level sublattice lies within ``c_E * lambda**n`` of a center."""
    n = net.level
    reach = cfg.c_E * cfg.radius(n)
    xs, zs = grid.lattice(grid.lattice_exponent(n, cfg.lam))
    if not net.centers:
        raise NetCoverageError(n, HPoint(0, 0, 0), reach)
    index = _CellIndex(reach, np.asarray(net.centers, dtype=float))
    for x in xs:
        for y in xs:
            lo, hi = _column_intervals(x, y, index.near(x, y), reach, closed=True)
            gap = _covered(lo, hi, zs[-1])
            if gap is not None:
                z = zs[np.searchsorted(zs, gap)] if gap <= zs[-1] else zs[-1]
                raise NetCoverageError(n, HPoint(x, y, z), reach)


@dataclass
class Construction:
    """A built shortcut family together with its nets."""

    grid: Any
    cfg: ShortcutConfig
    family: ShortcutFamily
    nets: list[NetLevel]

    def endpoints_array(self, top: int | None = None) -> np.ndarray:
        return np.asarray(self.family.endpoints(top), dtype=float).reshape(-1, 3)


def build_heisenberg(grid: HeisenbergGrid, cfg: ShortcutConfig, check_cover: bool = True) -> Construction:
    family = ShortcutFamily(box_distance, cfg.lam)
    nets: list[NetLevel] = []
    prior: list[HPoint] = []
    for n in cfg.levels:
        net = heisenberg_net(grid, cfg, np.asarray(prior, dtype=float).reshape(-1, 3), n, check_cover)
        net.shortcuts = place_heisenberg(net, cfg)
        for sc in net.shortcuts:
            family.add(sc)
            prior.extend((sc.a, sc.b))
        nets.append(net)
    return Construction(grid, cfg, family, nets)
