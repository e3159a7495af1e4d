"""Shortcut families, itineraries and the level-function normalization.

Points can be any hashable value understood by the family's base distance
(``HPoint`` for the Heisenberg constructions, floats for the line).

Itineraries are plain tuples of points.  Step ``j`` (1-based) goes from
``points[j-1]`` to ``points[j]``; in an alternating itinerary the even steps
are shortcut flights and the odd steps are walks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

Point = Hashable
Distance = Callable[[Point, Point], float]
Itinerary = tuple

COST_TOL = 1e-12


class CostIncreaseError(ValueError):
    """A reduction step would raise the itinerary cost (the family breaks the exterior condition)."""


class IneligibleStepError(ValueError):
    """The requested reduction index does not satisfy the level hypothesis."""


@dataclass(frozen=True)
class Shortcut:
    a: Point
    b: Point
    level: int
    cost: float
    center: Point | None = None
    radius: float | None = None

    def __post_init__(self) -> None:
        if self.level < 1:
            raise ValueError("shortcut levels start at 1")
        if self.cost < 0:
            raise ValueError("shortcut cost must be nonnegative")

    def reversed(self) -> "Shortcut":
        return Shortcut(self.b, self.a, self.level, self.cost, self.center, self.radius)


@dataclass(frozen=True)
class CostSchedule:
    """Cost ratio per level: ``alpha_n = ratio ** n``; ``ratio = 0`` gives semi-distance mode."""

    ratio: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.ratio < 1.0:
            raise ValueError("schedule ratio must lie in [0, 1)")

    def __call__(self, n: int) -> float:
        return 0.0 if self.ratio == 0.0 else self.ratio**n

    @property
    def semi_distance(self) -> bool:
        return self.ratio == 0.0

    def check(self, levels: Iterable[int]) -> bool:
        """Values lie in [0, 1) and are non-increasing over ``levels``."""
        vals = [self(n) for n in sorted(levels)]
        return all(0.0 <= v < 1.0 for v in vals) and all(
            b <= a for a, b in zip(vals, vals[1:])
        )


class ShortcutFamily:
    """Leveled symmetric shortcut collection over a base distance ``rho``.

    Each unordered pair is stored once; lookups accept either orientation.
    """

    def __init__(self, rho: Distance, lam: float, shortcuts: Iterable[Shortcut] = ()):
        if not 0.0 < lam < 1.0:
            raise ValueError("scale ratio lambda must lie in (0, 1)")
        self.rho = rho
        self.lam = lam
        self._pairs: dict[tuple, Shortcut] = {}
        self._by_level: dict[int, list[Shortcut]] = {}
        for sc in shortcuts:
            self.add(sc)

    def add(self, sc: Shortcut) -> None:
        if sc.a == sc.b:
            raise ValueError("shortcut endpoints must differ")
        if (sc.a, sc.b) in self._pairs:
            raise ValueError(f"duplicate shortcut {sc.a!r} -> {sc.b!r}")
        if sc.cost > self.rho(sc.a, sc.b) + COST_TOL:
            raise ValueError("shortcut cost exceeds the base distance of its endpoints")
        self._pairs[(sc.a, sc.b)] = sc
        self._pairs[(sc.b, sc.a)] = sc.reversed()
        self._by_level.setdefault(sc.level, []).append(sc)

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_level.values())

    def __iter__(self):
        for n in sorted(self._by_level):
            yield from self._by_level[n]

    @property
    def levels(self) -> list[int]:
        return sorted(self._by_level)

    def at_level(self, n: int) -> list[Shortcut]:
        return list(self._by_level.get(n, ()))

    def get(self, a: Point, b: Point) -> Shortcut | None:
        return self._pairs.get((a, b))

    def is_shortcut(self, a: Point, b: Point) -> bool:
        return (a, b) in self._pairs

    def level(self, a: Point, b: Point) -> int:
        return self._pairs[(a, b)].level

    def step_cost(self, a: Point, b: Point) -> float:
        """Shortcut cost on shortcut pairs, base distance otherwise."""
        sc = self._pairs.get((a, b))
        return sc.cost if sc is not None else self.rho(a, b)

    def truncated(self, top: int) -> "ShortcutFamily":
        return ShortcutFamily(self.rho, self.lam, (sc for sc in self if sc.level <= top))

    def endpoints(self, top: int | None = None) -> list[Point]:
        seen: dict[Point, None] = {}
        for sc in self:
            if top is None or sc.level <= top:
                seen.setdefault(sc.a)
                seen.setdefault(sc.b)
        return list(seen)


# -- itineraries -------------------------------------------------------------

def itinerary_cost(points: Sequence[Point], family: ShortcutFamily) -> float:
    return math.fsum(family.step_cost(a, b) for a, b in zip(points, points[1:]))


def is_valley(levels: Sequence[int]) -> bool:
    """True when the sequence is non-increasing up to some index and non-decreasing after it."""
    k = 0
    n = len(levels)
    while k + 1 < n and levels[k + 1] <= levels[k]:
        k += 1
    while k + 1 < n and levels[k + 1] >= levels[k]:
        k += 1
    return k >= n - 1


@dataclass(frozen=True)
class Classification:
    alternating: bool
    levels: tuple[int, ...] | None = None
    valley: bool | None = None
    per_level: dict[int, int] = field(default_factory=dict)


def flight_levels(points: Sequence[Point], family: ShortcutFamily) -> tuple[int, ...] | None:
    """Levels of the even steps, or None if some even step is not a shortcut."""
    out = []
    for j in range(2, len(points), 2):
        sc = family.get(points[j - 1], points[j])
        if sc is None:
            return None
        out.append(sc.level)
    return tuple(out)


def classify(points: Sequence[Point], family: ShortcutFamily, strict: bool = True) -> Classification:
    """Alternation, level function and valley shape.

    With ``strict`` the odd steps must not be shortcut pairs; otherwise only
    the even steps are inspected (walk steps are always priced by ``step_cost``).
    """
    levels = flight_levels(points, family)
    ok = levels is not None
    if ok and strict:
        ok = not any(
            family.is_shortcut(points[j - 1], points[j]) for j in range(1, len(points), 2)
        )
    if not ok:
        return Classification(False)
    counts: dict[int, int] = {}
    for lv in levels:
        counts[lv] = counts.get(lv, 0) + 1
    return Classification(True, levels, is_valley(levels), counts)


def make_alternating(points: Sequence[Point], family: ShortcutFamily) -> Itinerary:
    """Insert stationary walks between consecutive flights and merge consecutive walks.

    Merging uses the triangle inequality for the base distance, so the cost
    never increases and the extremes are kept.
    """
    if not points:
        return ()
    out = [points[0]]
    for b in points[1:]:
        _append(out, b, family)
    return tuple(out)


def _append(out: list, b: Point, family: ShortcutFamily) -> None:
    a = out[-1]
    steps = len(out) - 1
    if family.is_shortcut(a, b):
        if steps % 2 == 0:
            out.append(a)
        out.append(b)
    elif steps % 2 == 0:
        out.append(b)
    else:
        # a walk would land on an even step: fold it into the previous walk
        out.pop()
        _append(out, b, family)


def _eligible(levels: Sequence[int], k: int) -> bool:
    # k indexes the middle flight (0-based); both neighbours must exist
    return 0 < k < len(levels) - 1 and levels[k] >= max(levels[k - 1], levels[k + 1])


def reduce_step(points: Sequence[Point], j: int, family: ShortcutFamily) -> Itinerary:
    """Delete ``x_{j+2}, x_{j+3}`` when the middle of three consecutive flights has the top level.

    ``j`` is the odd point index of the left flight's start.  Raises
    :class:`IneligibleStepError` if the hypothesis fails and
    :class:`CostIncreaseError` if the deletion would cost more.
    """
    levels = flight_levels(points, family)
    if levels is None:
        raise IneligibleStepError("itinerary is not alternating")
    if j < 1 or j % 2 == 0:
        raise IneligibleStepError("j must be a positive odd index")
    k = (j + 1) // 2  # 0-based index of the middle flight
    if not _eligible(levels, k):
        raise IneligibleStepError(f"index {j} does not satisfy the level hypothesis")
    x = points
    before = family.step_cost(x[j + 1], x[j + 2]) + family.step_cost(x[j + 2], x[j + 3]) + family.step_cost(x[j + 3], x[j + 4])
    after = family.step_cost(x[j + 1], x[j + 4])
    if after > before + COST_TOL * max(1.0, before):
        raise CostIncreaseError(
            f"deleting flight {x[j + 2]!r}->{x[j + 3]!r} raises the cost by {after - before:.3e}"
        )
    return tuple(x[: j + 2]) + tuple(x[j + 4 :])


def first_eligible(levels: Sequence[int]) -> int | None:
    for k in range(1, len(levels) - 1):
        if _eligible(levels, k):
            return 2 * k - 1
    return None


def backtrack_at(points: Sequence[Point], k: int) -> bool:
    """Flight ``k + 1`` retraces flight ``k`` in reverse (0-based flight indices)."""
    a, b = 2 * k + 1, 2 * k + 3
    return b + 1 < len(points) and points[a] == points[b + 1] and points[a + 1] == points[b]


def cancel_backtrack(points: Sequence[Point], k: int, family: ShortcutFamily) -> Itinerary:
    """Drop flight ``k`` and its reversal ``k + 1``, joining the surrounding walks.

    The merged walk costs at most the two walks it replaces (triangle
    inequality through the common endpoint), so the cost drops by at least
    twice the flight cost.
    """
    if not backtrack_at(points, k):
        raise IneligibleStepError(f"flights {k} and {k + 1} are not a backtrack")
    return tuple(points[: 2 * k + 1]) + tuple(points[2 * k + 5 :])


def next_reduction(points: Sequence[Point], family: ShortcutFamily) -> tuple[str, int] | None:
    """The rewrite ``normalize`` applies next: ``("delete", j)``, ``("cancel", k)`` or ``None``.

    Eligible flights are scanned left to right.  A flight retraced in
    reverse by a neighbour is cancelled together with it, unless that would
    remove the first or last flight; such a flight is skipped.  A level
    sequence that is not decreasing-increasing always has an eligible flight
    away from such end backtracks, so ``None`` implies a valley.
    """
    levels = flight_levels(points, family)
    if levels is None:
        raise IneligibleStepError("itinerary is not alternating")
    last = len(levels) - 1
    for k in range(1, last):
        if not _eligible(levels, k):
            continue
        left, right = backtrack_at(points, k - 1), backtrack_at(points, k)
        if left and k - 1 > 0:
            return ("cancel", k - 1)
        if right and k + 1 < last:
            return ("cancel", k)
        if not (left or right):
            return ("delete", 2 * k - 1)
    return None


def normalize(points: Sequence[Point], family: ShortcutFamily) -> Itinerary:
    """Rewrite into decreasing-increasing form with the same extremes and no larger cost.

    Stationary walks are inserted first so that every flight sits on an even
    step.  Rewrites from :func:`next_reduction` then run until none is left.
    The usual rewrite deletes a flight whose level is a weak local maximum.
    When that flight is retraced in reverse by a neighbour, both are
    cancelled instead: deleting one alone can cost more, because the
    neighbour's endpoints then lie inside the deleted flight's own ball.
    The first and last flights are never removed, and each level keeps at
    most four flights.
    """
    it = make_alternating(points, family)
    while True:
        step = next_reduction(it, family)
        if step is None:
            return it
        kind, idx = step
        it = cancel_backtrack(it, idx, family) if kind == "cancel" else reduce_step(it, idx, family)
