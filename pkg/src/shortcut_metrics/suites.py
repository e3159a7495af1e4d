"""Named verification suites shared by the command line and the acceptance tests.

Every check is a function ``(rng, run) -> Check``.  Checks are independent,
seeded from ``(seed, position)``, and collected in suite order, so reports
do not depend on how many worker threads ran them.
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import kset
from .group_core import HPoint, box_distance, box_distance_many, mul_many
from .metric_engine import (
    FamilyIndex,
    TruncatedMetric,
    ahlfors_profile,
    check_ball_inclusion,
    check_positivity,
    check_unique_low_level,
    lattice_ball,
    lattice_to_points,
    prune_factor,
    ratio_scan,
    spread_sample,
    truncation_error,
)
from .shortcut_core import (
    CostSchedule,
    Shortcut,
    ShortcutFamily,
    classify,
    is_valley,
    itinerary_cost,
    make_alternating,
    next_reduction,
    normalize,
)
from .space_builder import (
    HeisenbergGrid,
    ShortcutConfig,
    SnowflakeLine,
    build_heisenberg,
    build_snowflake_family,
    heisenberg_exterior_sample,
    heisenberg_pair,
    verify_shortcut_condition,
)
from .vertical_metric import (
    blowup_scan,
    check_lemma_63_64,
    check_lemma_67,
    contradiction_pairs,
    lemma61_check,
    lemma65_eta_search,
    lemma68_check,
    progressions_disjoint,
    schedule,
)

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
PROFILES = ("full", "quick")


class ConfigError(ValueError):
    """Invalid run configuration; raised before any computation."""


@dataclass(frozen=True)
class RunConfig:
    space: str = "heisenberg"
    lam: float = 0.5
    c_E: float | None = None
    alpha: float = 0.5
    trunc: int = 4
    m: int = 7
    seed: int = 0
    out: str = "results"
    threads: int = 1
    profile: str = "full"

    def validate(self) -> "RunConfig":
        if self.space not in ("heisenberg", "snowflake", "kset", "synthetic"):
            raise ConfigError(f"unknown space {self.space!r}")
        if not 0.0 < self.lam < 1.0:
            raise ConfigError("lam must lie in (0, 1)")
        if self.space == "heisenberg":
            j = -math.log2(self.lam)
            if abs(j - round(j)) > 1e-12:
                raise ConfigError("the Heisenberg lattice needs lam = 2**-j")
        if self.space == "synthetic" and self.lam > 0.25:
            raise ConfigError("the synthetic line needs lam <= 1/4 (prior balls swallow the interval otherwise)")
        c_E = 8.0 + 1.0 / self.lam if self.c_E is None else self.c_E
        if c_E < 4.0:
            raise ConfigError("c_E must be at least 4")
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError("alpha must lie in [0, 1)")
        if not 1 <= self.trunc <= 12:
            raise ConfigError("trunc must lie in 1..12")
        if not 2 <= self.m <= 12:
            raise ConfigError("m must lie in 2..12")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        if self.profile not in PROFILES:
            raise ConfigError(f"profile must be one of {', '.join(PROFILES)}")
        return self

    def shortcut_config(self, levels) -> ShortcutConfig:
        return ShortcutConfig(lam=self.lam, c_E=self.c_E, levels=tuple(levels), schedule=CostSchedule(self.alpha))

    @property
    def full(self) -> bool:
        return self.profile == "full"


@dataclass(frozen=True)
class Check:
    id: str
    tag: str
    status: str
    margin: float
    details: str = ""

    def as_dict(self) -> dict:
        d = asdict(self)
        d["margin"] = _finite(self.margin)
        return d


def _finite(x: float):
    return float(x) if math.isfinite(x) else None


def _status(ok: bool) -> str:
    return PASS if ok else FAIL


# -- shared constructions ---------------------------------------------------------

@lru_cache(maxsize=8)
def heisenberg_build(m: int, scale: int, levels: tuple[int, ...], lam: float, c_E: float | None, alpha: float):
    cfg = ShortcutConfig(lam=lam, c_E=c_E, levels=levels, schedule=CostSchedule(alpha))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_heisenberg(HeisenbergGrid(m=m, scale=scale), cfg)


def ball_build(run: RunConfig):
    return heisenberg_build(7, 0, (1, 2, 3, 4), run.lam, run.c_E, run.alpha)


def ratio_build(run: RunConfig, alpha: float | None = None):
    alpha = run.alpha if alpha is None else alpha
    if run.full:
        return heisenberg_build(9, 2, (3, 4, 5, 6, 7, 8), run.lam, run.c_E, alpha)
    return heisenberg_build(7, 2, (3, 4, 5, 6), run.lam, run.c_E, alpha)


def _box_points(build, rng, count):
    s = build.grid.side
    return [HPoint(*p) for p in rng.uniform(0, 1, (count, 3)) * np.array([s, s, s * s])]


def _metric(build, top=None):
    top = build.cfg.levels[-1] if top is None else top
    return TruncatedMetric(FamilyIndex(build.family, heisenberg=True), top, region=build.grid.contains)


# -- core -----------------------------------------------------------------------------

def check_box_axioms(rng, run: RunConfig) -> Check:
    n = 100_000 if run.full else 5_000
    lo, hi = np.array([-2, -2, -4]), np.array([2, 2, 4])
    p, q, r = (rng.uniform(lo, hi, (n, 3)) for _ in range(3))
    tol = 1e-12
    dpq, dqr, dpr = box_distance_many(p, q), box_distance_many(q, r), box_distance_many(p, r)
    tri = dpq + dqr - dpr
    sym = np.abs(dpq - box_distance_many(q, p))
    left = np.abs(box_distance_many(mul_many(r, p), mul_many(r, q)) - dpq)
    t = rng.uniform(0.1, 3.0, n)
    scale = np.column_stack([t, t, t * t])
    hom = np.abs(box_distance_many(p * scale, q * scale) - t * dpq)
    worst = max(-tri.min(), sym.max(), left.max(), hom.max())
    return Check("box-axioms", "group", _status(worst <= tol), tol - worst, f"{n} triples; worst defect {worst:.3g}")


def check_shortcut_condition(rng, run: RunConfig) -> Check:
    per_level = 10_000 if run.full else 1_000
    centers_per_level = 10
    violations, trials, worst = 0, 0, math.inf
    for n in range(1, 7):
        r = run.lam**n
        for _ in range(centers_per_level):
            c = HPoint(*rng.uniform(-1, 1, 3))
            q1, q2 = heisenberg_pair(c, r)
            k = per_level // centers_per_level
            p1 = heisenberg_exterior_sample(c, r, k, rng)
            p2 = heisenberg_exterior_sample(c, r, k, rng)
            rep = verify_shortcut_condition(box_distance_many, np.asarray(q1), np.asarray(q2), p1, p2)
            violations += rep.violations
            trials += rep.trials
            worst = min(worst, rep.worst_margin)
    return Check("shortcut-condition", "placement", _status(violations == 0), worst, f"{trials} exterior pairs over levels 1-6; {violations} violations")


def random_itinerary(rng, shortcuts, box=1.0):
    def free():
        return HPoint(*rng.uniform(0, [box, box, box * box]))

    pts = [free()]
    for _ in range(int(rng.integers(1, 9))):
        sc = shortcuts[int(rng.integers(len(shortcuts)))]
        a, b = (sc.a, sc.b) if rng.random() < 0.5 else (sc.b, sc.a)
        if rng.random() < 0.3:
            pts.append(free())
        pts += [a, b]
    pts.append(free())
    return tuple(pts)


def normal_form_defects(it, out, fam) -> list[str]:
    """Reasons why ``out`` is not a valid normal form of ``it`` (empty when valid)."""
    bad = []
    c = classify(out, fam, strict=False)
    if not (c.alternating and c.valley):
        bad.append("not a valley")
    if max(c.per_level.values(), default=0) > 4:
        bad.append("more than 4 shortcuts on a level")
    if out[0] != it[0] or out[-1] != it[-1]:
        bad.append("extremes moved")
    if itinerary_cost(out, fam) > itinerary_cost(it, fam) + 1e-12:
        bad.append("cost increased")
    src = make_alternating(it, fam)
    if out[1:3] != src[1:3] or out[-3:-1] != src[-3:-1]:
        bad.append("first or last shortcut changed")
    if next_reduction(out, fam) is not None:
        bad.append("reduction left undone")
    return bad


def _best_costs(x, y, fam, flights, max_flights):
    best_all = best_valley = fam.step_cost(x, y)
    for k in range(1, max_flights + 1):
        for seq in itertools.product(flights, repeat=k):
            pts = [x]
            for a, b in seq:
                pts += [a, b]
            pts.append(y)
            cost = itinerary_cost(pts, fam)
            best_all = min(best_all, cost)
            if is_valley([fam.level(a, b) for a, b in seq]):
                best_valley = min(best_valley, cost)
    return best_all, best_valley


def check_normalization(rng, run: RunConfig) -> Check:
    build = ball_build(run)
    fam = build.family
    shortcuts = list(fam)
    count = 10_000 if run.full else 500
    defects = 0
    first = ""
    for _ in range(count):
        it = random_itinerary(rng, shortcuts)
        bad = normal_form_defects(it, normalize(it, fam), fam)
        if bad:
            defects += 1
            first = first or "; ".join(bad)
    # oracle: valley-shaped itineraries attain the minimum on small subfamilies
    instances = 40 if run.full else 8
    gaps = 0
    for _ in range(instances):
        idx = rng.choice(len(shortcuts), size=int(rng.integers(2, 5)), replace=False)
        sub = ShortcutFamily(box_distance, fam.lam, [shortcuts[i] for i in idx])
        x, y = _box_points(build, rng, 2)
        flights = [(s.a, s.b) for s in sub] + [(s.b, s.a) for s in sub]
        best_all, best_valley = _best_costs(x, y, sub, flights, 3)
        gaps += best_valley > best_all + 1e-12
    ok = defects == 0 and gaps == 0
    return Check("normalization", "normal-form", _status(ok), 0.0 - (defects + gaps), f"{count} itineraries, {defects} defective{': ' + first if first else ''}; {instances} oracle instances, {gaps} gaps")


def _euclid(a, b):
    return math.dist(np.atleast_1d(a), np.atleast_1d(b))


def _euclid_many(A, B):
    return np.linalg.norm(A - B, axis=-1)


def synthetic_instance(rng, dim: int, npts: int, nsc: int):
    raw = np.round(rng.uniform(0, 4, (npts + 2 * nsc, dim)), 3)
    pts = list(dict.fromkeys(tuple(p) if dim > 1 else float(p[0]) for p in raw))
    base, rest = pts[:npts], pts[npts:]
    shortcuts = [
        Shortcut(a, b, int(rng.integers(1, 4)), float(rng.uniform(0, 1)) * _euclid(a, b))
        for a, b in zip(rest[0::2], rest[1::2])
    ]
    return base, shortcuts


def floyd_oracle(points, shortcuts, dim):
    """All-pairs cheapest itineraries by exhaustive relaxation over the complete graph."""
    pts = list(points)
    for sc in shortcuts:
        pts += [p for p in (sc.a, sc.b) if p not in pts]
    arr = np.array([np.atleast_1d(p) for p in pts], dtype=float).reshape(len(pts), dim)
    w = np.linalg.norm(arr[:, None, :] - arr[None, :, :], axis=-1)
    pos = {p: i for i, p in enumerate(pts)}
    for sc in shortcuts:
        i, j = pos[sc.a], pos[sc.b]
        w[i, j] = w[j, i] = min(w[i, j], sc.cost)
    for k in range(len(pts)):
        w = np.minimum(w, w[:, k : k + 1] + w[k : k + 1, :])
    return w, pos


def check_metric_exactness(rng, run: RunConfig) -> Check:
    instances = 100 if run.full else 20
    mismatch = prune_mismatch = compared = 0
    worst = 0.0
    for k in range(instances):
        dim = 1 + k % 2
        pts, scs = synthetic_instance(rng, dim, int(rng.integers(2, 7)), int(rng.integers(0, 4)))
        fam = ShortcutFamily(_euclid, 0.5, scs)
        top = int(rng.integers(1, 4))
        w, pos = floyd_oracle(pts, [s for s in scs if s.level <= top], dim)
        metric = TruncatedMetric(FamilyIndex(fam, metric=_euclid_many), top)
        for x, y in itertools.combinations(pos, 2):
            val = metric.distance(x, y).value
            err = abs(val - w[pos[x], pos[y]])
            worst = max(worst, err)
            mismatch += err > 1e-12 * max(1.0, w[pos[x], pos[y]])
            prune_mismatch += metric.distance(x, y, prune=True).value != val
            compared += 1
    ok = mismatch == 0 and prune_mismatch == 0
    return Check("metric-exactness", "truncated-metric", _status(ok), -worst, f"{instances} instances, {compared} pairs; {mismatch} oracle and {prune_mismatch} pruning mismatches")


def truncation_pairs(rng, count: int) -> list[tuple[HPoint, HPoint]]:
    """Tile pairs for the truncation sweep.

    Half are random pairs inside the cell ``S_(6,11,3)(K)``; the other half
    are the endpoints of a level-``n`` shortcut (``n`` cycling through 4..7),
    whose distance drops to zero once level ``n`` is admitted.
    """
    cell = kset.cell_points([6, 11, 3], 3)
    pairs = []
    for a, b in rng.choice(len(cell), (count - count // 2, 2)):
        if a != b:
            pairs.append((HPoint(*cell[a]), HPoint(*cell[b])))
    for k in range(count // 2):
        word = [int(v) for v in rng.integers(1, 17, 1 + k % 4)]
        pairs.append((kset.sim_apply(word, kset.MODEL_PAIR[0]), kset.sim_apply(word, kset.MODEL_PAIR[1])))
    return pairs


def check_monotone_truncation(rng, run: RunConfig) -> Check:
    count = 12 if run.full else 4
    tops = range(3, 9) if run.full else range(3, 7)
    pairs = truncation_pairs(rng, count)
    table = {n: [kset.kset_distance(x, y, n).value for x, y in pairs] for n in tops}
    worst = math.inf
    ok = True
    for n, mm in itertools.combinations(tops, 2):
        gap = np.array(table[n]) - np.array(table[mm])
        bound = truncation_error(kset.LAM, n)
        worst = min(worst, float(gap.min()) + 1e-12, bound - float(gap.max()))
        ok &= gap.min() >= -1e-12 and gap.max() <= bound
    drops = sum(table[tops.start][i] > table[tops.stop - 1][i] for i in range(len(pairs)))
    return Check("monotone-truncation", "truncated-metric", _status(ok), worst, f"{len(pairs)} tile pairs, N in {tops.start}..{tops.stop - 1}; {drops} pairs get shorter")


def check_ball_uniqueness(rng, run: RunConfig) -> Check:
    build = ball_build(run)
    m = _metric(build)
    count = 1000 if run.full else 100
    endpoints = [s.a for s in spread_sample(list(build.family), count // 3)]
    pts = _box_points(build, rng, count - len(endpoints)) + endpoints
    worst = 0
    for x in pts:
        n = int(rng.integers(1, len(build.cfg.levels) + 1))
        r = float(rng.uniform(0.05, 1.0)) * build.cfg.lam**n
        worst = max(worst, check_unique_low_level(m, x, r, n))
    return Check("ball-uniqueness", "ball-structure", _status(worst <= 1), 1.0 - worst, f"{count} (x, r, n) samples; max low-level pairs {worst}")


def check_ball_inclusion_suite(rng, run: RunConfig) -> Check:
    build = ball_build(run)
    m = _metric(build)
    e, box = 7, (1.0, 1.0)
    count = 1000 if run.full else 100

    def lattice(c, s):
        return lattice_to_points(lattice_ball(c, s, e, box), e)

    violations, worst = 0, 0.0
    for x in _box_points(build, rng, count):
        r = float(np.exp(rng.uniform(math.log(1e-3), math.log(1.5))))
        rep = check_ball_inclusion(m, x, r, lattice)
        violations += rep.violations
        worst = max(worst, rep.worst_ratio)
    c = prune_factor(build.cfg.lam)
    return Check("ball-inclusion", "ball-structure", _status(violations == 0), 1.0 - worst, f"{count} balls; constant {c:g}; worst ratio {worst:.4g}; {violations} violations")


def check_positivity_suite(rng, run: RunConfig) -> Check:
    build = ball_build(run)
    m = _metric(build)
    unit = (HPoint(0, 0, 0), HPoint(1, 0, 0))
    anchor = check_positivity(m, [unit])
    rep = check_positivity(m, [unit] + [tuple(_box_points(build, rng, 2)) for _ in range(20)] + [(unit[0], unit[0])])
    if rep.zero_pairs or not rep.identical_zero:
        status = FAIL
    else:
        # random pairs below the truncation error are reported, not judged
        status = PASS if anchor.certified else INCONCLUSIVE
    return Check("positivity", "truncated-metric", status, float(rep.certified), f"{rep.certified} certified, {rep.inconclusive} inconclusive, {rep.zero_pairs} zero")


def ratio_rows(run: RunConfig, alpha: float | None = None, per_level: int = 40):
    build = ratio_build(run, alpha)
    prov = FamilyIndex(build.family, heisenberg=True)
    pairs = {n: [(s.a, s.b) for s in spread_sample(build.family.at_level(n), per_level)] for n in build.cfg.levels}
    return ratio_scan(prov, pairs, build.cfg.schedule)


def check_ratio_decay(rng, run: RunConfig) -> Check:
    rows = ratio_rows(run)
    bounded = all(r.ratio <= r.alpha + r.eps / r.rho for r in rows)
    decreasing = all(a.ratio > b.ratio for a, b in zip(rows, rows[1:]))
    last = rows[-1]
    final = last.ratio <= run.alpha**last.level + 1e-12
    margin = min(r.alpha + r.eps / r.rho - r.ratio for r in rows)
    series = ", ".join(f"{r.level}:{r.ratio:.6g}" for r in rows)
    return Check("ratio-decay", "non-bilipschitz", _status(bounded and decreasing and final), margin, series)


def check_semi_distance(rng, run: RunConfig) -> Check:
    rows = ratio_rows(run, alpha=0.0, per_level=20)
    worst = max(r.ratio for r in rows)
    return Check("semi-distance", "non-bilipschitz", _status(worst == 0.0), 0.0 - worst, f"max ratio {worst:g} over {len(rows)} levels")


def check_ahlfors(rng, run: RunConfig) -> Check:
    build = ball_build(run)
    m = _metric(build)
    count = 20 if run.full else 3
    centers = [HPoint(*p) for p in rng.uniform([0.2, 0.2, 0.2], [0.8, 0.8, 0.8], (count, 3))]
    radii = [2.0**-k for k in range(2, 6)]
    base = ahlfors_profile(centers, radii, 6, (1.0, 1.0))
    short = ahlfors_profile(centers, radii, 6, (1.0, 1.0), metric=m)
    band = max(base.band, short.band)
    return Check("ahlfors-band", "ahlfors", _status(band <= 1e3), 1e3 - band, f"{count} centers, 4 scales; bands {base.band:.4g} (base), {short.band:.4g} (shortcut)")


# -- K-set ------------------------------------------------------------------------------

def check_kset_separation(rng, run: RunConfig) -> Check:
    ns = (3, 4, 5, 6)
    seps = {n: kset.check_separation(n) for n in ns}
    ok = all(seps[n] >= 2.0 ** (2 - n) for n in ns) and seps[4] == 0.5
    margin = min(seps[n] - 2.0 ** (2 - n) for n in ns if math.isfinite(seps[n]))
    return Check("kset-separation", "tile-separation", _status(ok), margin, ", ".join(f"{n}:{seps[n]:g}" for n in ns))


def check_kset_avoidance(rng, run: RunConfig) -> Check:
    reps = [kset.check_prior_avoidance(n) for n in (4, 5, 6)]
    bad = sum(r.violations for r in reps)
    margin = min(r.closest - r.radius for r in reps)
    return Check("kset-avoidance", "tile-separation", _status(bad == 0), margin, f"{bad} violations for n = 4..6")


def check_kset_cover(rng, run: RunConfig) -> Check:
    depth = 5 if run.full else 4
    est = [kset.estimate_cover_constant(n, depth) for n in (3, 4)] + ([kset.estimate_cover_constant(5, depth)] if run.full else [])
    spread = max(est) / min(est) - 1
    return Check("kset-cover", "tile-cover", _status(spread <= 0.10), 0.10 - spread, "c_E " + ", ".join(f"{e:.4f}" for e in est))


def kset_scaling_pairs(rng, count: int):
    half = count // 2
    pairs = []
    while len(pairs) < half:
        cell = tuple(int(d) for d in rng.integers(1, 17, 2))
        pts = kset.cell_points(cell, 3)
        a, b = rng.choice(len(pts), 2, replace=False)
        pairs.append((HPoint(*pts[a]), HPoint(*pts[b])))
    while len(pairs) < count:
        j = [int(d) for d in rng.integers(1, 17, int(rng.integers(1, 3)))]
        pairs.append((kset.sim_apply(j, kset.MODEL_PAIR[0]), kset.sim_apply(j, kset.MODEL_PAIR[1])))
    return pairs


def check_kset_scaling(rng, run: RunConfig) -> Check:
    count, top = (100, 7) if run.full else (10, 6)
    idx, _ = kset.find_interior_cell()
    rows = kset.scaling_check(idx, kset_scaling_pairs(rng, count), top)
    upper = sum(not r.upper_ok for r in rows)
    equal = sum(not r.equality_ok for r in rows)
    margin = min(r.tol_same - abs(r.image - r.scaled_same) for r in rows)
    return Check("kset-scaling", "tile-scaling", _status(upper == 0 and equal == 0), margin, f"cell {idx}, N = {top}, {count} pairs; {upper} upper and {equal} equality failures")


# -- vertical -------------------------------------------------------------------------------

def check_aseq(rng, run: RunConfig) -> Check:
    seq = schedule(4 * 1001)
    fours = all(seq(4 * (k + 1)) == 1 for k in range(1001))
    disjoint = progressions_disjoint(5, 100_000)
    periods = [lemma61_check(ell, 10_000) for ell in (1, 2, 3)]
    ok = fours and disjoint and all(p.ok for p in periods)
    return Check("aseq", "schedule", _status(ok), 0.0 if ok else -1.0, f"multiples of 4: {fours}; disjoint: {disjoint}; periods: {[p.ok for p in periods]}")


def check_vertical_bounds(rng, run: RunConfig) -> Check:
    rep = check_lemma_63_64()
    margin = min(rep.ratio_bound.min_margin, rep.zero_level_bound.min_margin)
    return Check("vertical-bounds", "vertical-lower", _status(rep.ok), margin, f"{rep.ratio_bound.checked} + {rep.zero_level_bound.checked} grid points")


def check_two_step(rng, run: RunConfig) -> Check:
    rep = lemma65_eta_search(0.05)
    margin = min((b - u for *_, u, b in rep.samples), default=-1.0)
    return Check("two-step", "vertical-upper", _status(rep.ok), margin, f"eta {rep.eta:.6g}; {len(rep.samples)} samples")


def check_corner_columns(rng, run: RunConfig) -> Check:
    offs = [(0.0, 0.0), (0.009, 0.0), (0.0, -0.009), (0.006, 0.006), (-0.005, 0.004)]
    reps = [check_lemma_67(n, offs, np.linspace(0.55, 1.95, 15)) for n in (4, 8, 12) if n <= 12]
    ok = all(r.ok for r in reps)
    margin = min(r.column_min_ratio - 1 / math.sqrt(3) for r in reps)
    return Check("corner-columns", "vertical-lower", _status(ok), margin, "; ".join(r.violations[0] for r in reps if r.violations) or "no violations")


def check_near_center(rng, run: RunConfig) -> Check:
    offs = [tuple(v) for v in rng.uniform(-1, 1, (20, 2))]
    reps = [lemma68_check(0.05, n, offs) for n in (4, 8, 12)]
    ok = all(r.ok for r in reps)
    margin = min(0.55 - r.worst_ratio for r in reps)
    return Check("near-center", "vertical-upper", _status(ok), margin, f"eta {reps[0].eta:.6g}; worst ratio {max(r.worst_ratio for r in reps):.6g}")


def check_blowup(rng, run: RunConfig) -> Check:
    rows = blowup_scan(range(2, 13), [1.0])
    pairs = contradiction_pairs(rows, 2)
    slack = max(r.slack for r in rows)
    ok = bool(pairs) and slack < 0.01
    found = ", ".join(f"({p.low.j},{p.high.j})" for p in pairs)
    return Check("blowup", "blow-up", _status(ok), 0.01 - slack, f"pairs {found or 'none'}; max slack {slack:.3g}")


# -- snowflake -----------------------------------------------------------------------------

def check_snowflake_condition(rng, run: RunConfig) -> Check:
    line = SnowflakeLine()
    per_level = 10_000 if run.full else 1_000
    violations, worst = 0, math.inf
    for n in range(1, 7):
        r = line.lam**n
        center = float(rng.uniform(-1, 1))
        inner, outer = line.annulus(r)
        q2 = center + outer
        # exterior pairs: rho(p, center) >= r means |p - center| >= r^2
        ext = r**2 * (1 + rng.exponential(3.0, (2, per_level)))
        side = rng.choice([-1.0, 1.0], (2, per_level))
        p = center + side * ext
        rep = verify_shortcut_condition(line.metric, np.array([center]), np.array([q2]), p[0][:, None], p[1][:, None])
        violations += rep.violations
        worst = min(worst, rep.worst_margin)
    return Check("snowflake-condition", "placement", _status(violations == 0), worst, f"{6 * per_level} exterior pairs over levels 1-6; {violations} violations")


def check_snowflake_family(rng, run: RunConfig) -> Check:
    line = SnowflakeLine()
    levels = (1, 2, 3, 4) if run.full else (1, 2, 3)
    step = 4.0 ** -(len(levels) + 3)
    space, fam, nets = build_snowflake_family(line, step, 1.0, levels)
    short = [line.rho(s.a, s.b) - line.lam ** (s.level + 1) for s in fam]
    ok = min(short) >= -1e-12 and space.spot_check(rng) == 0
    return Check("snowflake-family", "placement", _status(ok), min(short), f"{len(fam)} shortcuts over levels {levels}")


SUITES: dict[str, list[Callable[[np.random.Generator, RunConfig], Check]]] = {
    "core": [
        check_box_axioms,
        check_shortcut_condition,
        check_normalization,
        check_metric_exactness,
        check_monotone_truncation,
        check_ball_uniqueness,
        check_ball_inclusion_suite,
        check_positivity_suite,
        check_ratio_decay,
        check_semi_distance,
        check_ahlfors,
    ],
    "kset": [check_kset_separation, check_kset_avoidance, check_kset_cover, check_kset_scaling],
    "vertical": [check_aseq, check_vertical_bounds, check_two_step, check_corner_columns, check_near_center, check_blowup],
    "snowflake": [check_snowflake_condition, check_snowflake_family],
}


def check_rng(seed: int, position: int) -> np.random.Generator:
    return np.random.default_rng([seed, position])


@dataclass
class Report:
    suite: str
    config: dict
    checks: list[Check] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        statuses = {c.status for c in self.checks}
        if FAIL in statuses:
            return 1
        if INCONCLUSIVE in statuses:
            return 2
        return 0

    def as_dict(self) -> dict:
        counts = {s: sum(c.status == s for c in self.checks) for s in (PASS, FAIL, INCONCLUSIVE)}
        return {
            "suite": self.suite,
            "config": self.config,
            "checks": [c.as_dict() for c in self.checks],
            "summary": counts,
        }


def run_suite(name: str, run: RunConfig) -> Report:
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}")
    run.validate()
    checks = SUITES[name]

    def one(pos: int) -> Check:
        return checks[pos](check_rng(run.seed, pos), run)

    with ThreadPoolExecutor(max_workers=run.threads) as pool:
        results = list(pool.map(one, range(len(checks))))
    cfg = {k: v for k, v in asdict(run).items() if k not in ("out", "threads")}
    return Report(name, cfg, results)
