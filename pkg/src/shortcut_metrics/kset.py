"""Self-similar tile of the Heisenberg group and its zero-cost shortcut family.

The 16 similitudes ``S_{i,j,k}(p) = (i/2, j/2, k/4) * dilate(1/2, p)`` are
labelled 1..16 in lexicographic ``(i, j, k)`` order.  A composition
``S_i = S_{i_1} o ... o S_{i_m}`` satisfies ``S_i(p) = S_i(0) * dilate(2**-m, p)``,
so everything below is generated from the translation parts ``S_i(0)``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .group_core import HPoint, box_distance, box_distance_many, dilate, mul
from .metric_engine import FamilyIndex, TruncatedMetric, truncation_error
from .shortcut_core import Shortcut, ShortcutFamily

LABELS: tuple[tuple[int, int, int], ...] = tuple(product((0, 1), (0, 1), range(4)))
TRANSLATIONS = np.array([(i / 2, j / 2, k / 4) for i, j, k in LABELS])
MODEL_PAIR = (HPoint(0.5, 0.5, 0.0), HPoint(0.5, 0.5, 1.0 / 64))
FIRST_LEVEL = 3
MAX_DEPTH = 6
LAM = 0.5

# every point of K (and every shortcut endpoint) lies within this box distance of 0
K_RADIUS = 2.0 * float(np.max(np.maximum(np.maximum(TRANSLATIONS[:, 0], TRANSLATIONS[:, 1]), np.sqrt(TRANSLATIONS[:, 2]))))

MultiIndex = tuple[int, ...]


def _check_digits(idx: Iterable[int]) -> MultiIndex:
    idx = tuple(int(d) for d in idx)
    if any(not 1 <= d <= 16 for d in idx):
        raise ValueError("multi-index digits must lie in 1..16")
    return idx


def digit(i: int, j: int, k: int) -> int:
    return LABELS.index((i, j, k)) + 1


def sim_apply(idx: Sequence[int], p: HPoint) -> HPoint:
    """``S_{i_1} o ... o S_{i_m}`` applied to ``p`` (innermost map last)."""
    for d in reversed(_check_digits(idx)):
        t = TRANSLATIONS[d - 1]
        p = mul(HPoint(*t), dilate(0.5, p))
    return p


def _compose_translations(prefix: np.ndarray, depth: int) -> np.ndarray:
    """Translation parts of ``S_a o S_b`` for every prefix ``a`` and one more digit ``b``.

    ``prefix`` holds ``S_a(0)`` for ``|a| = depth``; the result is ordered
    lexicographically in ``(a, b)``.
    """
    s = 2.0**-depth
    t = TRANSLATIONS * np.array([s, s, s * s])
    a = np.repeat(prefix, 16, axis=0)
    b = np.tile(t, (len(prefix), 1))
    out = a + b
    out[:, 2] += 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
    return out


def translations(depth: int) -> np.ndarray:
    """``S_i(0)`` for all ``|i| = depth`` in lexicographic order of ``i``."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    out = np.zeros((1, 3))
    for d in range(depth):
        out = _compose_translations(out, d)
    return out


def apply_many(trans: np.ndarray, depth: int, p: HPoint) -> np.ndarray:
    """``S_i(p)`` for the translation parts ``trans`` of maps of length ``depth``."""
    s = 2.0**-depth
    q = np.array([p.x * s, p.y * s, p.z * s * s])
    out = trans + q
    out[:, 2] += 0.5 * (trans[:, 0] * q[1] - trans[:, 1] * q[0])
    return out


def attractor_sample(depth: int) -> np.ndarray:
    if depth > MAX_DEPTH:
        raise ValueError(f"attractor sample depth is capped at {MAX_DEPTH}")
    return translations(depth)


def level_centers(n: int) -> np.ndarray:
    return apply_many(translations(n - FIRST_LEVEL), n - FIRST_LEVEL, MODEL_PAIR[0])


def level_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n < FIRST_LEVEL:
        raise ValueError("levels start at 3")
    t = translations(n - FIRST_LEVEL)
    return apply_many(t, n - FIRST_LEVEL, MODEL_PAIR[0]), apply_many(t, n - FIRST_LEVEL, MODEL_PAIR[1])


def family(top: int) -> ShortcutFamily:
    """The zero-cost family through level ``top`` (exhaustive; keep ``top`` small)."""
    fam = ShortcutFamily(box_distance, LAM)
    for n in range(FIRST_LEVEL, top + 1):
        a, b = level_pairs(n)
        for pa, pb in zip(a, b):
            fam.add(Shortcut(HPoint(*pa), HPoint(*pb), n, 0.0))
    return fam


# -- exact checks ------------------------------------------------------------

def _sheared_tree(pts: np.ndarray) -> tuple[cKDTree, float]:
    shear = 1.0 + float(np.max(np.abs(pts[:, :2]).sum(axis=1))) if len(pts) else 1.0
    scaled = pts.copy()
    scaled[:, 2] /= shear
    return cKDTree(scaled), shear


def _close_pairs(pts: np.ndarray, radius: float) -> np.ndarray:
    """Index pairs ``(a, b)``, ``a < b``, whose box distance is ``<= radius``."""
    if len(pts) < 2:
        return np.zeros((0, 2), dtype=int)
    tree, shear = _sheared_tree(pts)
    half = 0.5 * float(np.max(np.abs(pts[:, :2]).sum(axis=1)))
    query = max(radius, (radius * radius + half * radius) / shear) * (1 + 1e-12)
    cand = tree.query_pairs(query, p=np.inf, output_type="ndarray")
    if not len(cand):
        return cand
    d = box_distance_many(pts[cand[:, 0]], pts[cand[:, 1]])
    return cand[d <= radius]


def min_separation(pts: np.ndarray) -> float:
    """Exact minimum pairwise box distance (``inf`` for fewer than two points)."""
    if len(pts) < 2:
        return math.inf
    r = 2.0**-12
    while True:
        pairs = _close_pairs(pts, r)
        if len(pairs):
            return float(box_distance_many(pts[pairs[:, 0]], pts[pairs[:, 1]]).min())
        r *= 2
        if r > 64:
            return math.inf


def check_separation(n: int) -> float:
    """Minimum distance between level-``n`` centers."""
    if not FIRST_LEVEL <= n <= 9:
        raise ValueError("separation check supports levels 3..9")
    return min_separation(level_centers(n))


@dataclass(frozen=True)
class AvoidanceReport:
    level: int
    radius: float
    violations: int
    closest: float


def check_prior_avoidance(n: int) -> AvoidanceReport:
    """Level-``n`` centers against the open ``2**(2-n)`` balls around lower-level endpoints."""
    if not 4 <= n <= 8:
        raise ValueError("avoidance check supports levels 4..8")
    radius = 2.0 ** (2 - n)
    centers = level_centers(n)
    prior = np.vstack([np.vstack(level_pairs(m)) for m in range(FIRST_LEVEL, n)])
    tree, shear = _sheared_tree(prior)
    violations = 0
    closest = math.inf
    half = 0.5 * float(np.max(np.abs(centers[:, :2]).sum(axis=1)))
    reach = 4 * radius
    query = max(reach, (reach * reach + half * reach) / shear) * (1 + 1e-12)
    scaled = centers.copy()
    scaled[:, 2] /= shear
    for c, cand in zip(centers, tree.query_ball_point(scaled, query, p=np.inf)):
        if not cand:
            continue
        d = box_distance_many(prior[cand], c[None, :])
        closest = min(closest, float(d.min()))
        violations += int((d < radius).sum())
    return AvoidanceReport(n, radius, violations, closest)


def nearest_distance(pts: np.ndarray, centers: np.ndarray, chunk: int = 4096) -> np.ndarray:
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        block = pts[s : s + chunk]
        out[s : s + chunk] = box_distance_many(block[:, None, :], centers[None, :, :]).min(axis=1)
    return out


def estimate_cover_constant(n: int, sample_depth: int) -> float:
    """Largest distance from a depth-``sample_depth`` attractor point to a level-``n`` center, over ``2**-n``."""
    if sample_depth < n - FIRST_LEVEL:
        raise ValueError("sample depth must be at least n - 3")
    pts = attractor_sample(sample_depth)
    return float(nearest_distance(pts, level_centers(n)).max() / 2.0**-n)


def fiber_spread(depth: int) -> np.ndarray:
    """Vertical extent of depth-``depth`` attractor points over each projected point."""
    pts = attractor_sample(depth)
    key = np.round(pts[:, :2] * 2**depth).astype(np.int64)
    code = key[:, 0] * (2**depth + 1) + key[:, 1]
    order = np.argsort(code, kind="stable")
    code, z = code[order], pts[order, 2]
    starts = np.r_[0, np.nonzero(np.diff(code))[0] + 1]
    return np.maximum.reduceat(z, starts) - np.minimum.reduceat(z, starts)


# -- localized truncated distance -------------------------------------------

def local_family(center: HPoint, radius: float, top: int) -> ShortcutFamily:
    """All pairs of levels ``3..top`` with an endpoint within ``radius`` of ``center``."""
    fam = ShortcutFamily(box_distance, LAM)
    c = np.asarray(center, dtype=float)[None, :]
    trans = np.zeros((1, 3))
    for depth in range(0, top - FIRST_LEVEL + 1):
        n = depth + FIRST_LEVEL
        a = apply_many(trans, depth, MODEL_PAIR[0])
        b = apply_many(trans, depth, MODEL_PAIR[1])
        hit = (box_distance_many(a, c) <= radius) | (box_distance_many(b, c) <= radius)
        for pa, pb in zip(a[hit], b[hit]):
            fam.add(Shortcut(HPoint(*pa), HPoint(*pb), n, 0.0))
        if n == top:
            break
        # keep prefixes whose whole cell may still reach the ball
        keep = box_distance_many(trans, c) <= radius + 2.0**-depth * K_RADIUS
        trans = _compose_translations(trans[keep], depth)
    return fam


@dataclass(frozen=True)
class LocalDistance:
    value: float
    epsilon: float
    radius: float
    pairs: int


def kset_distance(x: HPoint, y: HPoint, top: int) -> LocalDistance:
    """Truncated zero-cost distance on the tile, generating shortcuts near ``x`` only.

    The region is doubled until every settled vertex's remaining budget ball
    lies inside it, which makes the local answer equal the global one.
    """
    budget = box_distance(x, y)
    if budget == 0:
        return LocalDistance(0.0, truncation_error(LAM, top), 0.0, 0)
    radius = 2.0 * budget
    while True:
        fam = local_family(x, radius, top)
        metric = TruncatedMetric(FamilyIndex(fam, heisenberg=True), top)
        settled = metric.reach(x, budget * (1 + 1e-12) + 1e-15)
        safe = all(box_distance(x, v) + (budget - d) <= radius for v, d in settled.items())
        if safe:
            return LocalDistance(metric.distance(x, y).value, metric.epsilon, radius, len(fam))
        radius *= 2.0


# -- scaling -----------------------------------------------------------------

def cell_points(prefix: Sequence[int], depth: int) -> np.ndarray:
    """Attractor sample of the cell ``S_prefix(K)``: ``S_prefix(S_k(0))`` for ``|k| = depth``."""
    prefix = _check_digits(prefix)
    inner = translations(depth)
    base = np.asarray(sim_apply(prefix, HPoint(0, 0, 0)), dtype=float)
    return apply_many_points(base, len(prefix), inner)


def apply_many_points(trans: np.ndarray, depth: int, pts: np.ndarray) -> np.ndarray:
    """``S_i(p)`` for one map (translation ``trans``, length ``depth``) and many points."""
    s = 2.0**-depth
    q = pts * np.array([s, s, s * s])
    out = q + trans
    out[:, 2] += 0.5 * (trans[0] * q[:, 1] - trans[1] * q[:, 0])
    return out


@lru_cache(maxsize=None)
def _fiber_bounds(sample_depth: int) -> tuple[np.ndarray, np.ndarray]:
    pts = attractor_sample(sample_depth)
    side = 2**sample_depth
    key = np.minimum(np.floor(pts[:, :2] * side).astype(np.int64), side - 1)
    flat = key[:, 0] * side + key[:, 1]
    lo = np.full(side * side, np.inf)
    hi = np.full(side * side, -np.inf)
    np.minimum.at(lo, flat, pts[:, 2])
    np.maximum.at(hi, flat, pts[:, 2])
    return lo, hi


def interior_clearance(prefix: Sequence[int], sample_depth: int = 4, probe_depth: int = 2) -> float:
    """How far the cell sits from the rim of the tile, measured on samples.

    The tile is the vertical thickening of a graph over the unit square, so
    a point is deep inside when its projection is away from the square's
    edge and its height is away from the bottom and top of its fiber.  The
    fiber bounds are read off the depth-``sample_depth`` attractor sample.
    """
    lo, hi = _fiber_bounds(sample_depth)
    cell = cell_points(prefix, probe_depth)
    side = 2**sample_depth
    key = np.minimum(np.floor(cell[:, :2] * side).astype(np.int64), side - 1)
    flat = key[:, 0] * side + key[:, 1]
    x, y, z = cell.T
    planar = np.minimum.reduce([x, y, 1 - x, 1 - y])
    vertical = np.minimum(z - lo[flat], hi[flat] + 4.0**-sample_depth - z)
    return float(min(planar.min(), np.sqrt(np.maximum(vertical, 0.0)).min()))


def find_interior_cell(depth: int = 3) -> tuple[MultiIndex, float]:
    """Depth-``depth`` cell with the largest sampled clearance relative to its size."""
    best: tuple[MultiIndex, float] = ((), -math.inf)
    for idx in product(range(1, 17), repeat=depth):
        # cells touching the unit square's boundary can never be interior
        i_bits = [LABELS[d - 1][0] for d in idx]
        j_bits = [LABELS[d - 1][1] for d in idx]
        x0 = sum(b * 2.0 ** -(k + 1) for k, b in enumerate(i_bits))
        y0 = sum(b * 2.0 ** -(k + 1) for k, b in enumerate(j_bits))
        size = 2.0**-depth
        if min(x0, y0, 1 - x0 - size, 1 - y0 - size) <= 0:
            continue
        k_digits = [LABELS[d - 1][2] for d in idx]
        if k_digits[0] in (0, 3):
            continue
        score = interior_clearance(idx) / size
        if score > best[1]:
            best = (idx, score)
    return best


@dataclass(frozen=True)
class ScalingRow:
    image: float
    scaled_same: float
    scaled_coarse: float
    tol_same: float
    tol_coarse: float

    @property
    def upper_ok(self) -> bool:
        # image itinerary bound: exact up to rounding
        return self.image <= self.scaled_coarse + 1e-12

    @property
    def equality_ok(self) -> bool:
        return abs(self.image - self.scaled_same) <= self.tol_same + 1e-12


def scaling_check(idx: Sequence[int], pairs: Sequence[tuple[HPoint, HPoint]], top: int) -> list[ScalingRow]:
    """Compare distances of mapped pairs with the scaled distances of the originals.

    ``scaled_same`` uses the same truncation on both sides;
    ``scaled_coarse`` truncates the original ``|idx|`` levels lower, which
    the image itinerary argument bounds exactly.
    """
    idx = _check_digits(idx)
    k = len(idx)
    factor = 2.0**-k
    eps = truncation_error(LAM, top)
    rows = []
    for x, y in pairs:
        sx, sy = sim_apply(idx, x), sim_apply(idx, y)
        image = kset_distance(sx, sy, top).value
        same = kset_distance(x, y, top).value
        coarse = kset_distance(x, y, top - k).value if top - k >= FIRST_LEVEL else box_distance(x, y)
        rows.append(ScalingRow(image, factor * same, factor * coarse, eps + factor * eps, eps))
    return rows
