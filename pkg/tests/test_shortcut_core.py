import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from shortcut_metrics.group_core import HPoint, box_distance
from shortcut_metrics.shortcut_core import (
    CostIncreaseError,
    CostSchedule,
    IneligibleStepError,
    Shortcut,
    ShortcutFamily,
    classify,
    first_eligible,
    flight_levels,
    is_valley,
    itinerary_cost,
    make_alternating,
    backtrack_at,
    cancel_backtrack,
    next_reduction,
    normalize,
    reduce_step,
)


def line_rho(a, b):
    return abs(a - b)


def line_family(specs, lam=0.5):
    return ShortcutFamily(line_rho, lam, [Shortcut(a, b, n, c) for a, b, n, c in specs])


# -- families and schedules ----------------------------------------------------

def test_family_is_symmetric_and_validated():
    fam = line_family([(0.0, 1.0, 2, 0.1)])
    assert fam.is_shortcut(1.0, 0.0) and fam.level(1.0, 0.0) == 2
    assert fam.step_cost(1.0, 0.0) == 0.1
    assert fam.step_cost(0.0, 3.0) == 3.0
    with pytest.raises(ValueError):
        fam.add(Shortcut(1.0, 0.0, 3, 0.0))
    with pytest.raises(ValueError):
        fam.add(Shortcut(2.0, 2.0, 3, 0.0))
    with pytest.raises(ValueError):
        fam.add(Shortcut(2.0, 3.0, 3, 1.5))
    with pytest.raises(ValueError):
        Shortcut(0.0, 1.0, 0, 0.1)
    with pytest.raises(ValueError):
        Shortcut(0.0, 1.0, 1, -0.1)
    assert len(fam.truncated(1)) == 0 and fam.endpoints() == [0.0, 1.0]


def test_schedule():
    s = CostSchedule(0.5)
    assert s(3) == 0.125 and s.check(range(1, 9))
    assert CostSchedule(0.0)(4) == 0.0 and CostSchedule(0.0).semi_distance
    with pytest.raises(ValueError):
        CostSchedule(1.0)


# -- costs and classification ------------------------------------------------------

def test_cost_examples():
    fam = line_family([(0.0, 2.0, 1, 0.5 * 2.0)])
    assert itinerary_cost((3.0,), fam) == 0
    assert itinerary_cost((), fam) == 0
    assert itinerary_cost((3.0, 5.0), fam) == 2.0
    # level-1 shortcut with alpha_1 = 1/2 costs half its base distance
    assert itinerary_cost((0.0, 2.0), fam) == 1.0


def test_valley_examples():
    assert is_valley((3, 2, 2, 5))
    assert not is_valley((2, 3, 1))
    assert is_valley(())
    assert is_valley((4,)) and is_valley((1, 1, 1)) and is_valley((5, 1, 5))


def test_classify():
    fam = line_family([(0.0, 1.0, 2, 0.1), (1.0, 2.0, 3, 0.1)])
    c = classify((0.0, 0.0, 1.0, 1.0, 2.0), fam)
    assert c.alternating and c.levels == (2, 3) and c.valley and c.per_level == {2: 1, 3: 1}
    assert not classify((0.0, 1.0), fam).alternating
    # odd step on a shortcut pair is rejected only in strict mode
    it = (0.0, 1.0, 1.0)
    assert not classify(it, fam).alternating
    assert not classify(it, fam, strict=False).alternating
    assert classify((5.0, 0.0, 1.0, 2.0, 2.0), fam, strict=False).alternating is False


def test_make_alternating_pads_and_merges():
    fam = line_family([(0.0, 1.0, 2, 0.1), (1.0, 2.0, 3, 0.1)])
    it = make_alternating((0.0, 1.0, 2.0), fam)
    assert it == (0.0, 0.0, 1.0, 1.0, 2.0)
    it = make_alternating((0.5, 0.7, 0.0, 1.0, 3.0, 4.0), fam)
    assert it[0] == 0.5 and it[-1] == 4.0
    assert flight_levels(it, fam) == (2,)
    assert itinerary_cost(it, fam) <= itinerary_cost((0.5, 0.7, 0.0, 1.0, 3.0, 4.0), fam)


# -- reduction ---------------------------------------------------------------------

def three_flight_line():
    # flights 0->1 (level 1), 1->2 (level 3), 2->3 (level 1)
    return line_family([(0.0, 1.0, 1, 0.5), (1.0, 2.0, 3, 0.125), (2.0, 3.0, 1, 0.5)])


def test_interior_maximum_removed():
    fam = three_flight_line()
    it = (0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0)
    assert flight_levels(it, fam) == (1, 3, 1)
    out = normalize(it, fam)
    assert flight_levels(out, fam) == (1, 1)
    assert out == (0.0, 0.0, 1.0, 2.0, 3.0, 3.0)
    assert itinerary_cost(out, fam) <= itinerary_cost(it, fam)


def test_repeated_flight_removal_saves_its_cost():
    fam = line_family([(0.0, 1.0, 2, 0.25), (1.0, 3.0, 2, 0.5)])
    # flights 0->1, 0->1, 1->3; the walk 1->0 between the repeats is a shortcut pair
    it = (0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 3.0, 3.0)
    assert flight_levels(it, fam) == (2, 2, 2)
    out = reduce_step(it, 1, fam)
    assert out == (0.0, 0.0, 1.0, 1.0, 3.0, 3.0)
    assert itinerary_cost(it, fam) - itinerary_cost(out, fam) == pytest.approx(2 * 0.25, abs=1e-15)


def test_reduce_step_rejections():
    fam = line_family([(0.0, 1.0, 2, 0.1), (1.0, 2.0, 3, 0.1)])
    it = (0.0, 0.0, 1.0, 1.0, 2.0)
    # both flights sit at an end, so no middle flight exists
    assert first_eligible(flight_levels(it, fam)) is None
    for j in (1, 2, 3):
        with pytest.raises(IneligibleStepError):
            reduce_step(it, j, fam)
    with pytest.raises(IneligibleStepError):
        reduce_step((0.0, 1.0), 1, fam)


def test_cost_increase_is_reported():
    # cheap far-apart middle flight: deleting it forces a long walk
    fam = line_family([(0.0, 0.1, 1, 0.05), (0.2, 10.0, 2, 0.0), (10.0, 10.1, 1, 0.05)])
    it = (0.0, 0.0, 0.1, 0.2, 10.0, 10.0, 10.1)
    with pytest.raises(CostIncreaseError):
        reduce_step(it, 1, fam)


def backtrack_line():
    return line_family([(-5.0, -4.0, 1, 0.1), (0.0, 1.0, 2, 0.1), (5.0, 6.0, 1, 0.1)])


def test_backtrack_is_cancelled_not_deleted():
    fam = backtrack_line()
    # flights -5->-4, 0->1, 1->0, 5->6: the third retraces the second
    it = (-6.0, -5.0, -4.0, 0.0, 1.0, 1.0, 0.0, 5.0, 6.0, 6.0)
    assert flight_levels(it, fam) == (1, 2, 2, 1)
    assert backtrack_at(it, 1) and not backtrack_at(it, 0)
    # deleting only the middle flight walks from -4 to 1: dearer
    with pytest.raises(CostIncreaseError):
        reduce_step(it, 1, fam)
    assert next_reduction(it, fam) == ("cancel", 1)
    out = normalize(it, fam)
    assert out == cancel_backtrack(it, 1, fam) == (-6.0, -5.0, -4.0, 5.0, 6.0, 6.0)
    assert itinerary_cost(it, fam) - itinerary_cost(out, fam) == pytest.approx(0.2)
    with pytest.raises(IneligibleStepError):
        cancel_backtrack(it, 0, fam)


def test_end_backtrack_is_kept():
    fam = backtrack_line()
    # the first flight is retraced at once; cancelling would drop it
    it = (-1.0, 0.0, 1.0, 1.0, 0.0, 5.0, 6.0, 6.0)
    assert flight_levels(it, fam) == (2, 2, 1)
    assert first_eligible(flight_levels(it, fam)) == 1
    assert next_reduction(it, fam) is None
    assert normalize(it, fam) == it


def test_normalize_fixed_point_and_idempotent():
    fam = three_flight_line()
    it = (0.0, 0.0, 1.0, 2.0, 3.0, 3.0)
    assert normalize(it, fam) == it
    twice = normalize(normalize((0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0), fam), fam)
    assert twice == normalize((0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0), fam)


# -- properties on a built Heisenberg family ---------------------------------------

def random_itinerary(rng, shortcuts, box=1.0):
    k = int(rng.integers(1, 9))
    pts = [HPoint(*rng.uniform(0, [box, box, box * box]))]
    for _ in range(k):
        sc = shortcuts[int(rng.integers(len(shortcuts)))]
        a, b = (sc.a, sc.b) if rng.random() < 0.5 else (sc.b, sc.a)
        if rng.random() < 0.3:
            pts.append(HPoint(*rng.uniform(0, [box, box, box * box])))
        pts += [a, b]
    pts.append(HPoint(*rng.uniform(0, [box, box, box * box])))
    return tuple(pts)


def check_normal_form(it, out, fam):
    c = classify(out, fam, strict=False)
    assert c.alternating and c.valley
    assert max(c.per_level.values(), default=0) <= 4
    assert out[0] == it[0] and out[-1] == it[-1]
    assert itinerary_cost(out, fam) <= itinerary_cost(it, fam) + 1e-12
    src = make_alternating(it, fam)
    assert out[1:3] == src[1:3] and out[-3:-1] == src[-3:-1]
    assert next_reduction(out, fam) is None


def test_normalize_on_built_family(small_build, rng):
    fam = small_build.family
    shortcuts = list(fam)
    for _ in range(300):
        it = random_itinerary(rng, shortcuts)
        check_normal_form(it, normalize(it, fam), fam)


def test_each_reduction_shortens_by_two(small_build, rng):
    fam = small_build.family
    shortcuts = list(fam)
    for _ in range(100):
        it = make_alternating(random_itinerary(rng, shortcuts), fam)
        j = first_eligible(flight_levels(it, fam))
        if j is not None:
            assert len(reduce_step(it, j, fam)) == len(it) - 2


@given(st.lists(st.integers(1, 6), max_size=12))
def test_stopping_condition_is_valley(levels):
    # a sequence without weak interior maxima has a valley shape
    if first_eligible(levels) is None:
        assert is_valley(levels)


# -- brute-force oracle -------------------------------------------------------------

def flight_choices(shortcuts):
    return [(s.a, s.b) for s in shortcuts] + [(s.b, s.a) for s in shortcuts]


def best_costs(x, y, fam, flights, max_flights):
    """Minimum cost over alternating itineraries x, f1, ..., fk, y, split by shape."""
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


def test_valley_itineraries_attain_the_minimum(small_build, rng):
    fam_all = list(small_build.family)
    for _ in range(12):
        idx = rng.choice(len(fam_all), size=int(rng.integers(2, 5)), replace=False)
        sub = [fam_all[i] for i in idx]
        fam = ShortcutFamily(box_distance, 0.5, sub)
        extra = [HPoint(*rng.uniform(0, [1, 1, 1])) for _ in range(2)]
        assert len(fam.endpoints()) + len(extra) <= 12
        flights = flight_choices(sub)
        x, y = extra
        best_all, best_valley = best_costs(x, y, fam, flights, 3)
        assert best_valley == pytest.approx(best_all, abs=1e-12)
        # normalizing any candidate never beats the optimum and lands in valley form
        for seq in itertools.islice(itertools.product(flights, repeat=3), 40):
            pts = [x] + [p for f in seq for p in f] + [y]
            out = normalize(pts, fam)
            assert itinerary_cost(out, fam) >= best_all - 1e-12
            check_normal_form(tuple(pts), out, fam)
