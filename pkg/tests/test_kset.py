import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shortcut_metrics.group_core import HPoint, box_distance, box_distance_many
from shortcut_metrics.kset import (
    MODEL_PAIR,
    attractor_sample,
    cell_points,
    check_prior_avoidance,
    check_separation,
    digit,
    estimate_cover_constant,
    family,
    fiber_spread,
    find_interior_cell,
    kset_distance,
    level_pairs,
    scaling_check,
    sim_apply,
)
from shortcut_metrics.metric_engine import FamilyIndex, TruncatedMetric, truncation_error

digits = st.lists(st.integers(1, 16), max_size=5)
coords = st.floats(-2, 2, allow_nan=False)
points = st.builds(HPoint, coords, coords, coords)


def test_sim_apply_examples():
    origin = HPoint(0, 0, 0)
    assert sim_apply([digit(0, 0, 0)], origin) == origin
    assert sim_apply([digit(1, 1, 3)], origin) == HPoint(0.5, 0.5, 0.75)
    p = HPoint(0.3, 0.1, -0.2)
    assert sim_apply([], p) == p
    with pytest.raises(ValueError):
        sim_apply([17], p)
    with pytest.raises(ValueError):
        sim_apply([0], p)


@settings(max_examples=200, deadline=None)
@given(digits, points, points)
def test_contraction_exact(idx, p, q):
    d = box_distance(p, q)
    image = box_distance(sim_apply(idx, p), sim_apply(idx, q))
    assert image * 2.0 ** len(idx) == pytest.approx(d, rel=1e-12, abs=1e-12)


def test_attractor_sample_sizes():
    assert np.array_equal(attractor_sample(0), np.zeros((1, 3)))
    one = {tuple(p) for p in attractor_sample(1)}
    assert len(one) == 16 and (0, 0, 0.25) in one and (0.5, 0.5, 0) in one
    three = attractor_sample(3)
    assert len(three) == 4096
    assert three[:, :2].min() >= 0 and three[:, :2].max() < 1
    with pytest.raises(ValueError):
        attractor_sample(7)


def test_level_pairs_distance():
    assert box_distance(*MODEL_PAIR) == 0.125
    for n in (3, 4, 5, 6):
        a, b = level_pairs(n)
        assert len(a) == 16 ** (n - 3)
        assert np.all(box_distance_many(a, b) == 2.0**-n)
    fam = family(4)
    sc = fam.at_level(4)[3]
    assert fam.is_shortcut(sc.b, sc.a) and sc.cost == 0.0


def test_separation():
    assert check_separation(3) == np.inf
    assert check_separation(4) == 0.5
    for n in (5, 6, 7):
        assert check_separation(n) >= 2.0 ** (2 - n)
    with pytest.raises(ValueError):
        check_separation(10)


def test_prior_avoidance():
    for n in (4, 5, 6):
        rep = check_prior_avoidance(n)
        assert rep.violations == 0 and rep.closest >= rep.radius
    # the projections already clear the smaller radius
    for n in (4, 5):
        centers = level_pairs(n)[0]
        prior = np.vstack([np.vstack(level_pairs(m)) for m in range(3, n)])
        planar = np.abs(centers[:, None, :2] - prior[None, :, :2]).max(axis=2)
        assert planar[planar > 0].min() >= 2.0 ** (1 - n)


def test_cover_constant():
    est = [estimate_cover_constant(n, 5) for n in (3, 4, 5)]
    assert max(est) <= 1.1 * min(est)
    assert estimate_cover_constant(3, 3) <= estimate_cover_constant(3, 4) <= est[0]
    pts = attractor_sample(3)
    direct = box_distance_many(pts, np.array([0.5, 0.5, 0.0])).max() / 0.125
    assert estimate_cover_constant(3, 3) == pytest.approx(direct)
    with pytest.raises(ValueError):
        estimate_cover_constant(6, 2)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_fiber_spread(m):
    spread = fiber_spread(m)
    assert spread.min() >= 1 - 4.0 ** (1 - m)


def test_identity_is_one_lipschitz():
    pts = [HPoint(*p) for p in cell_points([6], 1)[::3]]
    fam = family(5)
    m = TruncatedMetric(FamilyIndex(fam, heisenberg=True), 5)
    for p in pts:
        for q in pts:
            assert m.distance(p, q).value <= box_distance(p, q) + 1e-15


def test_local_distance_matches_global():
    fam = family(5)
    m = TruncatedMetric(FamilyIndex(fam, heisenberg=True), 5)
    pts = [HPoint(*p) for p in cell_points([7], 2)[::17]]
    for p, q in zip(pts, pts[1:]):
        assert kset_distance(p, q, 5).value == pytest.approx(m.distance(p, q).value, abs=1e-15)


def test_scaling_trivial_cases():
    x, y = HPoint(0.4, 0.6, 0.5), HPoint(0.42, 0.61, 0.5)
    (row,) = scaling_check([], [(x, y)], 6)
    assert row.image == row.scaled_same
    rows = scaling_check([digit(1, 0, 2), 5], [MODEL_PAIR], 6)
    assert rows[0].image == 0.0 and rows[0].scaled_same == 0.0


def test_scaling_small(rng):
    idx, _ = find_interior_cell()
    assert idx == (14, 1, 1)
    cells = cell_points([5, 11], 3)
    pick = rng.choice(len(cells), (10, 2))
    pairs = [(HPoint(*cells[a]), HPoint(*cells[b])) for a, b in pick if a != b]
    pairs += [(sim_apply([j], MODEL_PAIR[0]), sim_apply([j], MODEL_PAIR[1])) for j in (2, 9)]
    rows = scaling_check(idx, pairs, 6)
    assert all(r.upper_ok for r in rows)
    assert all(r.equality_ok for r in rows)
    assert rows[0].tol_same == pytest.approx(truncation_error(0.5, 6) * (1 + 1 / 8))
