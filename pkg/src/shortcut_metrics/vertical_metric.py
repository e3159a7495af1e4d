"""Vertical shortcut distances with a prime-indexed shortcut schedule.

Shortcuts from the origin go straight up by ``4**-n`` for every level ``n``
whose schedule bit is set, cost half the sub-Riemannian length, and are
left-translated everywhere.  Between central points the distance reduces to
a search over signed vertical jumps, which is what this module computes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Iterable, Sequence

import numpy as np

from .group_core import CC_KAPPA, HPoint, mul
from .metric_engine import FamilyIndex, TruncatedMetric
from .shortcut_core import Shortcut, ShortcutFamily

INV_SQRT3 = 1.0 / math.sqrt(3.0)


# -- the schedule sequence ----------------------------------------------------

def primes(count: int) -> list[int]:
    """The first ``count`` primes."""
    if count <= 0:
        return []
    # p_k < k (ln k + ln ln k) for k >= 6
    limit = 15 if count < 6 else int(count * (math.log(count) + math.log(math.log(count)))) + 1
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for q in range(2, int(limit**0.5) + 1):
        if sieve[q]:
            sieve[q * q :: q] = False
    return [int(v) for v in np.nonzero(sieve)[0][:count]]


@lru_cache(maxsize=None)
def _prime(ell: int) -> int:
    return primes(ell)[-1]


@lru_cache(maxsize=None)
def primorial(ell: int) -> int:
    """Product of the first ``ell`` primes (1 for ``ell = 0``)."""
    return math.prod(primes(ell)) if ell else 1


def a_value(i: int) -> int:
    """1 iff ``i = (k * ell * primorial(ell-1) + 1) * p_ell`` for some odd ``k`` and ``ell >= 1``."""
    if i < 1:
        raise ValueError("a is defined on positive integers")
    ell = 1
    # the smallest odd-k member of P_ell is p_ell + ell * primorial(ell)
    while _prime(ell) + ell * primorial(ell) <= i:
        p = _prime(ell)
        if i % p == 0:
            q, step = i // p - 1, ell * primorial(ell - 1)
            if q % step == 0 and (q // step) % 2 == 1:
                return 1
        ell += 1
    return 0


def progression(ell: int, upto: int) -> np.ndarray:
    """``P_ell`` up to ``upto``: ``p_ell + m * ell * k`` with ``m = primorial(ell)``, ``k >= 0``."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    p = _prime(ell)
    if p > upto:
        return np.zeros(0, dtype=np.int64)
    return np.arange(p, upto + 1, primorial(ell) * ell, dtype=np.int64)


@dataclass(frozen=True)
class ASequence:
    """Schedule bits ``a(1..bound)`` built by marking the odd-``k`` members of each ``P_ell``."""

    bound: int
    bits: np.ndarray = field(repr=False, compare=False)
    primes: tuple[int, ...]  # p_ell for the progressions that reach an odd member

    @classmethod
    def build(cls, bound: int) -> "ASequence":
        bits = np.zeros(bound + 1, dtype=np.int8)
        used: list[int] = []
        ell = 1
        while _prime(ell) + ell * primorial(ell) <= bound:
            members = progression(ell, bound)
            bits[members[1::2]] = 1
            used.append(_prime(ell))
            ell += 1
        return cls(bound, bits, tuple(used))

    def __call__(self, i: int) -> int:
        if not 1 <= i <= self.bound:
            raise IndexError(f"{i} outside 1..{self.bound}")
        return int(self.bits[i])

    def ones(self, upto: int | None = None) -> list[int]:
        top = self.bound if upto is None else min(upto, self.bound)
        return [int(i) for i in np.nonzero(self.bits[1 : top + 1])[0] + 1]


@lru_cache(maxsize=8)
def schedule(bound: int) -> ASequence:
    return ASequence.build(bound)


def progressions_disjoint(max_ell: int, upto: int) -> bool:
    seen = np.zeros(upto + 1, dtype=bool)
    for ell in range(1, max_ell + 1):
        members = progression(ell, upto)
        if seen[members].any():
            return False
        seen[members] = True
    return True


@dataclass(frozen=True)
class PeriodReport:
    ell: int
    m: int
    period: int
    checked: int
    failures: tuple[int, ...]
    witness_failures: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return not self.failures and not self.witness_failures


def lemma61_check(ell: int, i_max: int) -> PeriodReport:
    """Every window ``i..i+m*ell`` holds a ``j`` with ``a(j) != a(j + m*ell)``."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    m = primorial(ell)
    period = m * ell
    seq = schedule(max(i_max + 2 * period + 1, 16))
    bits = seq.bits
    top = i_max + period
    differs = bits[1 : top + 1] != bits[1 + period : top + 1 + period]  # index j-1
    # windows [i, i+period] containing a differing j, via prefix sums
    csum = np.r_[0, np.cumsum(differs)]
    i = np.arange(1, i_max + 1)
    hits = csum[i + period] - csum[i - 1]
    failures = tuple(int(v) for v in i[hits == 0])
    p = _prime(ell)
    witness = np.array([p + period * k for k in range(0, (top - p) // period + 1)], dtype=np.int64)
    witness = witness[witness >= 1]
    bad = witness[bits[witness] == bits[witness + period]]
    return PeriodReport(ell, m, period, i_max, failures, tuple(int(v) for v in bad))


# -- vertical itineraries -----------------------------------------------------

def f_bound(t: float) -> float:
    """``min(1/sqrt(t), sqrt(2t/(t+1))/2)`` on ``[1, 4]``."""
    if not 1.0 <= t <= 4.0:
        raise ValueError("t must lie in [1, 4]")
    return min(1.0 / math.sqrt(t), 0.5 * math.sqrt(2.0 * t / (t + 1.0)))


@dataclass(frozen=True)
class MenuItem:
    height: float
    shortcut: bool
    level: int | None = None

    def cost(self, kappa: float) -> float:
        w = kappa * math.sqrt(self.height)
        return 0.5 * w if self.shortcut else w


@dataclass(frozen=True)
class Jump:
    height: float
    sign: int
    shortcut: bool
    level: int | None = None

    def cost(self, kappa: float) -> float:
        w = kappa * math.sqrt(self.height)
        return 0.5 * w if self.shortcut else w


@dataclass(frozen=True)
class VerticalItinerary:
    jumps: tuple[Jump, ...]
    kappa: float = 1.0

    @property
    def total(self) -> float:
        return math.fsum(j.sign * j.height for j in self.jumps)

    @property
    def cost(self) -> float:
        return math.fsum(j.cost(self.kappa) for j in self.jumps)

    def heights(self) -> list[float]:
        """Partial sums, i.e. the central points visited from the origin."""
        out, acc = [0.0], 0.0
        for j in self.jumps:
            acc += j.sign * j.height
            out.append(acc)
        return out


def shortcut_menu(levels: Iterable[int]) -> list[MenuItem]:
    return [MenuItem(4.0**-n, True, n) for n in levels]


def _close(h: float, counts: Sequence[tuple[MenuItem, int]], residual: float, kappa: float) -> VerticalItinerary:
    jumps = []
    for item, c in counts:
        jumps += [Jump(item.height, 1 if c > 0 else -1, item.shortcut, item.level)] * abs(c)
    if residual != 0.0:
        jumps.append(Jump(abs(residual), 1 if residual > 0 else -1, False))
    return VerticalItinerary(tuple(jumps), kappa)


def vertical_search(h: float, menu: Sequence[MenuItem], max_jumps: int, kappa: float = 1.0) -> VerticalItinerary:
    """Cheapest net-``h`` combination of at most ``max_jumps`` menu jumps plus one walk.

    Depth-first over menu items by decreasing height, choosing a signed
    count per item.  A branch is cut when its cost plus a lower bound on
    finishing cannot beat the incumbent: jumps no taller than ``H`` cover a
    residual ``x`` at cost at least ``kappa * x / (2 sqrt(H))`` and the walk
    covers the rest at ``kappa * sqrt(rest)``.
    """
    if max_jumps < 0:
        raise ValueError("max_jumps must be >= 0")
    walk = kappa * math.sqrt(abs(h))
    # an item costing at least the direct walk can never help
    items = sorted((it for it in menu if it.cost(kappa) < walk), key=lambda it: -it.height)
    best_cost = walk
    best: list[tuple[MenuItem, int]] = []
    best_res = h
    chosen: list[tuple[MenuItem, int]] = []

    def finish_bound(r: float, k: int, rem: int) -> float:
        r = abs(r)
        if k >= len(items) or rem == 0:
            return kappa * math.sqrt(r)
        H = items[k].height
        x = min(r, rem * H)
        return min(kappa * math.sqrt(r), 0.5 * kappa * x / math.sqrt(H) + kappa * math.sqrt(r - x))

    def dfs(k: int, rem: int, r: float, cost: float) -> None:
        nonlocal best_cost, best, best_res
        total = cost + kappa * math.sqrt(abs(r))
        if total < best_cost:
            best_cost, best, best_res = total, list(chosen), r
        if k >= len(items) or rem == 0:
            return
        if cost + finish_bound(r, k, rem) >= best_cost:
            return
        item = items[k]
        unit = item.cost(kappa)
        near = r / item.height
        counts = sorted(range(-rem, rem + 1), key=lambda c: (abs(c - near), abs(c)))
        for c in counts:
            step = cost + abs(c) * unit
            if step >= best_cost:
                continue
            if c:
                chosen.append((item, c))
            dfs(k + 1, rem - abs(c), r - c * item.height, step)
            if c:
                chosen.pop()

    dfs(0, max_jumps, h, 0.0)
    return _close(h, best, best_res, kappa)


def vertical_bruteforce(h: float, menu: Sequence[MenuItem], max_jumps: int, kappa: float = 1.0) -> float:
    """Exhaustive minimum over signed multisets of menu jumps plus one walk."""
    if len(menu) > 8 or max_jumps > 6:
        raise ValueError("brute force is capped at 8 menu items and 6 jumps")
    signed = [(s * it.height, it.cost(kappa)) for it in menu for s in (1, -1)]
    best = kappa * math.sqrt(abs(h))
    for size in range(1, max_jumps + 1):
        for combo in combinations_with_replacement(range(len(signed)), size):
            moved = math.fsum(signed[i][0] for i in combo)
            cost = math.fsum(signed[i][1] for i in combo) + kappa * math.sqrt(abs(h - moved))
            best = min(best, cost)
    return best


def level_of(h: float) -> int:
    """The ``n`` with ``4**-n`` closest to ``h`` on a log scale."""
    return int(round(-math.log(h, 4)))


def schedule_levels(top: int, exclude: Iterable[int] = ()) -> list[int]:
    seq = schedule(max(top, 16))
    skip = set(exclude)
    return [n for n in seq.ones(top) if n not in skip]


def vertical_upper(h: float, top: int, budget: int = 6, kappa: float = 1.0, exclude: Iterable[int] = ()) -> float:
    """Upper bound on the vertical shortcut distance from 0 to ``(0, 0, h)`` using levels ``<= top``."""
    if h <= 0:
        raise ValueError("h must be positive")
    menu = shortcut_menu(schedule_levels(top, exclude))
    return vertical_search(h, menu, budget, kappa).cost


# -- analytic lower-bound consistency ------------------------------------------

@dataclass
class BoundReport:
    checked: int = 0
    violations: list[tuple[int, float, float, float]] = field(default_factory=list)
    min_margin: float = math.inf

    def record(self, n: int, t: float, upper: float, lower: float) -> None:
        self.checked += 1
        self.min_margin = min(self.min_margin, upper - lower)
        if upper < lower - 1e-12 * max(1.0, abs(lower)):
            self.violations.append((n, t, upper, lower))

    @property
    def ok(self) -> bool:
        return self.checked > 0 and not self.violations


@dataclass(frozen=True)
class VerticalBoundsReport:
    ratio_bound: BoundReport
    zero_level_bound: BoundReport

    @property
    def ok(self) -> bool:
        return self.ratio_bound.ok and self.zero_level_bound.ok


DEFAULT_NS = tuple(range(1, 11))


def check_lemma_63_64(
    ns: Sequence[int] = DEFAULT_NS,
    ts: Sequence[float] | None = None,
    ts_zero: Sequence[float] | None = None,
    depth: int = 8,
    budget: int = 6,
    kappa: float = 1.0,
) -> VerticalBoundsReport:
    """Search upper bounds against ``f(t)`` (all levels) and ``1/sqrt 3`` (unscheduled levels).

    Levels up to ``n + depth`` are offered to the search.
    """
    if any(n > 12 for n in ns):
        raise ValueError("levels above 12 are outside the tested grid")
    ts = np.linspace(1.0, 4.0, 42)[1:-1] if ts is None else ts
    ts_zero = np.linspace(0.51, 1.99, 40) if ts_zero is None else ts_zero
    seq = schedule(64)
    first, second = BoundReport(), BoundReport()
    for n in ns:
        scale = kappa * 2.0**-n
        for t in ts:
            up = vertical_upper(t * 4.0**-n, n + depth, budget, kappa)
            first.record(n, float(t), up, f_bound(t) * math.sqrt(t) * scale)
        if seq(n) == 0:
            for t in ts_zero:
                up = vertical_upper(t * 4.0**-n, n + depth, budget, kappa)
                second.record(n, float(t), up, INV_SQRT3 * math.sqrt(t) * scale)
    return VerticalBoundsReport(first, second)


def _two_step_ok(eta: float, eps: float, planar: float = 0.0) -> bool:
    # worst case of |t| < eta is t -> -eta; ``planar`` is the horizontal detour per unit 2^-n
    return planar + 0.5 + math.sqrt(eta) <= (0.5 + eps) * math.sqrt(1.0 - eta)


def _largest_eta(eps: float, planar_factor: float, step: float) -> float:
    grid = np.arange(1, int(0.5 / step)) * step
    ok = [e for e in grid if _two_step_ok(float(e), eps, planar_factor * float(e))]
    # feasibility is monotone in eta, so the feasible set is an initial segment
    return float(max(ok)) if ok else 0.0


@dataclass(frozen=True)
class EtaReport:
    eps: float
    eta: float
    samples: tuple[tuple[int, float, float, float], ...]  # n, t, upper, bound

    @property
    def ok(self) -> bool:
        return self.eta > 0 and bool(self.samples) and all(u <= b + 1e-15 for _, _, u, b in self.samples)


def lemma65_eta_search(eps: float, ns: Sequence[int] = (4, 8, 12), step: float = 1e-5, kappa: float = 1.0) -> EtaReport:
    """Largest grid ``eta`` for which the two-step itinerary stays within ``(1/2 + eps)``.

    The itinerary is one level-``n`` shortcut then a vertical walk of
    ``t * 4**-n``; the bound is confirmed with :func:`vertical_upper` at
    ``t = +-eta/2`` for the scheduled levels among ``ns``.
    """
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    eta = _largest_eta(eps, 0.0, step)
    seq = schedule(64)
    samples = []
    for n in ns:
        if seq(n) != 1:
            continue
        for t in (-eta / 2, eta / 2):
            h = (1 + t) * 4.0**-n
            up = vertical_upper(h, n, budget=2, kappa=kappa)
            samples.append((n, t, up, (0.5 + eps) * kappa * math.sqrt(1 + t) * 2.0**-n))
    return EtaReport(eps, eta, tuple(samples))


# -- column-restricted shortcuts ------------------------------------------------

def dyadic_centers(n: int, window: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)) -> np.ndarray:
    """Centers of side-``2**-n`` dyadic squares inside ``[x0, x1] x [y0, y1]``."""
    x0, x1, y0, y1 = window
    if not (x1 > x0 and y1 > y0):
        raise ValueError("empty window")
    side = 2.0**-n
    xs = (np.arange(math.floor(x0 / side), math.ceil(x1 / side)) + 0.5) * side
    ys = (np.arange(math.floor(y0 / side), math.ceil(y1 / side)) + 0.5) * side
    xs = xs[(xs >= x0) & (xs <= x1)]
    ys = ys[(ys >= y0) & (ys <= y1)]
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def column_rho(kappa: float = 1.0):
    """Walk cost between points of one vertical line; other pairs are not modeled."""

    def rho(p: HPoint, q: HPoint) -> float:
        if p.x != q.x or p.y != q.y:
            return math.inf
        return kappa * math.sqrt(abs(p.z - q.z))

    def many(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
        same = (a[..., 0] == b[..., 0]) & (a[..., 1] == b[..., 1])
        return np.where(same, kappa * np.sqrt(np.abs(a[..., 2] - b[..., 2])), np.inf)

    return rho, many


def d2_family(
    window: tuple[float, float, float, float],
    levels: Iterable[int],
    z_values: Sequence[float],
    kappa: float = 1.0,
) -> ShortcutFamily:
    """Upward level-``n`` pairs over dyadic centers, for scheduled ``n`` only.

    Each pair joins ``(x, y, z)`` to ``(x, y, z) * (0, 0, 4**-n)``; the
    family stores both orientations, so the downward pairs are included.
    """
    rho, _ = column_rho(kappa)
    fam = ShortcutFamily(rho, 0.5)
    seq = schedule(max(max(levels, default=1), 16))
    lifts = {}
    for n in levels:
        if seq(n) != 1:
            continue
        lift = HPoint(0.0, 0.0, 4.0**-n)
        cost = 0.5 * kappa * 2.0**-n
        for cx, cy in dyadic_centers(n, window):
            for z in z_values:
                p = HPoint(float(cx), float(cy), float(z))
                q = mul(p, lift)
                if (p, q) in lifts or (q, p) in lifts:
                    continue
                lifts[(p, q)] = True
                if not fam.is_shortcut(p, q):
                    fam.add(Shortcut(p, q, n, cost))
    return fam


def column_distance(family: ShortcutFamily, start: HPoint, h: float, top: int, kappa: float = 1.0) -> float:
    """Shortcut distance from ``start`` to ``start * (0, 0, h)`` inside one column."""
    _, many = column_rho(kappa)
    index = FamilyIndex(family, metric=many, coords=lambda p: np.asarray(p, dtype=float))
    return TruncatedMetric(index, top).distance(start, mul(start, HPoint(0.0, 0.0, h))).value


@dataclass(frozen=True)
class CornerReport:
    n: int
    delta: float
    escape_min: float
    escape_bound: float
    escape_needed: float
    column_min_ratio: float
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_lemma_67(
    n: int,
    offsets: Sequence[tuple[float, float]],
    t_grid: Sequence[float],
    delta: float = 0.01,
    depth: int = 8,
    budget: int = 6,
    kappa: float = CC_KAPPA,
    angles: int = 720,
) -> CornerReport:
    """Lower bound for vertical moves over columns near the corners of level-``n`` squares.

    Offsets are in units of ``2**-n`` and must be shorter than ``delta``.
    Any itinerary that leaves the disc of radius ``2**-n-1`` around the
    corner pays at least its planar round trip, since no non-vertical move
    is a shortcut and walks cost at least their planar displacement.  An
    itinerary that stays inside cannot reach a level-``n`` center, so the
    in-column search runs with level ``n`` removed.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if any(math.hypot(*o) >= delta for o in offsets):
        raise ValueError("offsets must lie within delta")
    side = 2.0**-n
    corner = np.array([side, side])
    phi = np.linspace(0.0, 2 * math.pi, angles, endpoint=False)
    exits = corner + 0.5 * side * np.column_stack([np.cos(phi), np.sin(phi)])
    escape_min = math.inf
    for o in offsets:
        start = corner + side * np.asarray(o, dtype=float)
        escape_min = min(escape_min, float(2.0 * np.hypot(*(exits - start).T).min()))
    escape_bound = (1 - 2 * delta) * side
    needed = INV_SQRT3 * kappa * math.sqrt(max(t_grid)) * side
    violations = []
    if escape_min < escape_bound * (1 - 1e-12):
        violations.append(f"escape {escape_min:.6g} below (1-2delta)2^-n")
    if escape_bound < needed:
        violations.append(f"escape bound {escape_bound:.6g} below 1/sqrt3 d_cc {needed:.6g}")
    worst = math.inf
    for t in t_grid:
        up = vertical_upper(t * side * side, n + depth, budget, kappa, exclude=(n,))
        lower = INV_SQRT3 * kappa * math.sqrt(t) * side
        worst = min(worst, up / (kappa * math.sqrt(t) * side))
        if up < lower * (1 - 1e-12):
            violations.append(f"column t={t:.6g}: {up:.6g} < {lower:.6g}")
    return CornerReport(n, delta, escape_min, escape_bound, needed, worst, tuple(violations))


@dataclass(frozen=True)
class NearCenterReport:
    eps: float
    eta: float
    worst_ratio: float
    max_endpoint_error: float

    @property
    def ok(self) -> bool:
        return self.eta > 0 and self.worst_ratio <= 0.5 + self.eps + 1e-12 and self.max_endpoint_error <= 1e-15


def lemma68_check(
    eps: float,
    n: int,
    offsets: Sequence[tuple[float, float]],
    ts: Sequence[float] | None = None,
    z: float = 0.3,
    kappa: float = CC_KAPPA,
    step: float = 1e-5,
) -> NearCenterReport:
    """Certify the near-center bound with an explicit five-point itinerary.

    From ``(x, y, z)`` walk horizontally to the nearest level-``n`` center,
    take the shortcut up, walk back along the reversed horizontal segment
    and finish vertically.  Offsets (units of ``2**-n``) are rescaled into
    the admissible ``eta`` disc.
    """
    if schedule(max(n, 16))(n) != 1:
        raise ValueError("level n must be scheduled")
    # each horizontal leg costs |v| <= eta 2^-n, i.e. 2 eta / kappa per unit kappa 2^-n
    eta = _largest_eta(eps, 2.0 / kappa, step)
    ts = [-eta / 2, 0.0, eta / 2] if ts is None else ts
    side = 2.0**-n
    center = HPoint(1.5 * side, 0.5 * side, 0.0)
    worst, err = 0.0, 0.0
    for o in offsets:
        norm = math.hypot(*o)
        scale = 0.999 * eta / norm if norm >= eta else 1.0
        start = HPoint(center.x + o[0] * scale * side, center.y + o[1] * scale * side, z)
        v = HPoint(center.x - start.x, center.y - start.y, 0.0)
        for t in ts:
            if abs(t) >= eta:
                raise ValueError("|t| must be below eta")
            p1 = mul(start, v)
            p2 = mul(p1, HPoint(0.0, 0.0, side * side))
            p3 = mul(p2, HPoint(-v.x, -v.y, 0.0))
            p4 = mul(p3, HPoint(0.0, 0.0, t * side * side))
            target = HPoint(start.x, start.y, start.z + (1 + t) * side * side)
            err = max(err, max(abs(a - b) for a, b in zip(p4, target)))
            leg = math.hypot(v.x, v.y)
            cost = 2 * leg + 0.5 * kappa * side + kappa * math.sqrt(abs(t)) * side
            worst = max(worst, cost / (kappa * math.sqrt(1 + t) * side))
    return NearCenterReport(eps, eta, worst, err)


# -- blow-up tables --------------------------------------------------------------

@dataclass(frozen=True)
class BlowupRow:
    j: int
    s: float
    ratio: float
    deeper: float

    @property
    def slack(self) -> float:
        return abs(self.ratio - self.deeper)


def blowup_scan(
    js: Sequence[int],
    s_grid: Sequence[float],
    base: int = 2,
    depth: int = 8,
    extra: int = 4,
    budget: int = 6,
    kappa: float = 1.0,
) -> list[BlowupRow]:
    """Ratios ``d(0, (0,0,(lambda_j s)^2)) / (lambda_j kappa s)`` for ``lambda_j = base**-j``.

    Levels up to ``depth`` below the target's own level are searched; the
    ``deeper`` column repeats the search with ``extra`` more levels so the
    truncation slack can be read off.
    """
    if base not in (2, 4):
        raise ValueError("base must be 2 or 4")
    if any(not 1.0 <= s <= 16.0 for s in s_grid):
        raise ValueError("s must lie in [1, 16]")
    rows = []
    for j in js:
        lam = float(base) ** -j
        for s in s_grid:
            h = (lam * s) ** 2
            top = max(level_of(h), 1) + depth
            dcc = kappa * lam * s
            r = vertical_upper(h, top, budget, kappa) / dcc
            r2 = vertical_upper(h, top + extra, budget, kappa) / dcc
            rows.append(BlowupRow(j, float(s), r, r2))
    return rows


@dataclass(frozen=True)
class ContradictionPair:
    low: BlowupRow
    high: BlowupRow


def contradiction_pairs(rows: Sequence[BlowupRow], shift: int, low: float = 0.52, high: float = 0.55) -> list[ContradictionPair]:
    """Row pairs ``shift`` scales apart with ratio ``<= low`` at one and ``>= high`` at the other."""
    by_key = {(r.j, r.s): r for r in rows}
    out = []
    for r in rows:
        for other in (by_key.get((r.j + shift, r.s)), by_key.get((r.j - shift, r.s))):
            if other is not None and r.ratio <= low and other.ratio >= high:
                out.append(ContradictionPair(r, other))
    return out
