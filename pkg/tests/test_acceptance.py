"""Acceptance criteria, one test each.

Every criterion runs the same check functions as ``shortcut-metrics verify``
at the full profile, with the generator the suite runner would hand them, and
prints one ``PASS``/``FAIL`` line.  Run directly (``python tests/test_acceptance.py``)
for the summary alone.
"""

import dataclasses
import json
import sys
import time

import pytest

from shortcut_metrics import suites
from shortcut_metrics.suites import PASS, SUITES, RunConfig, check_rng, run_suite

FULL = RunConfig(profile="full").validate()

# (id, title, [(suite, check)], runtime limit in seconds or None)
CRITERIA = [
    ("box-axioms", "box-distance axioms on 1e5 triples", [("core", suites.check_box_axioms)], 5.0),
    (
        "shortcut-condition",
        "shortcut condition, Heisenberg levels 1-6 and snowflake line",
        [("core", suites.check_shortcut_condition), ("snowflake", suites.check_snowflake_condition)],
        10.0,
    ),
    ("normalization", "normal form of 1e4 itineraries plus oracle", [("core", suites.check_normalization)], 30.0),
    (
        "metric-exactness",
        "engine = brute force, pruning sound, monotone truncation N = 3..8",
        [("core", suites.check_metric_exactness), ("core", suites.check_monotone_truncation)],
        60.0,
    ),
    (
        "ball-structure",
        "one low-level pair per ball; inclusion with constant 34",
        [("core", suites.check_ball_uniqueness), ("core", suites.check_ball_inclusion_suite)],
        60.0,
    ),
    (
        "ratio-decay",
        "per-level ratio bounded, strictly decreasing, zero in semi-distance mode",
        [("core", suites.check_ratio_decay), ("core", suites.check_semi_distance)],
        None,
    ),
    ("ahlfors-band", "box-counting band <= 1e3 over 20 centers, 4 scales", [("core", suites.check_ahlfors)], None),
    (
        "kset",
        "tile separation, avoidance, c_E stability, scaling",
        [("kset", fn) for fn in SUITES["kset"]],
        120.0,
    ),
    ("aseq", "schedule bits, disjoint progressions, periodicity", [("vertical", suites.check_aseq)], 10.0),
    (
        "vertical-bounds",
        "vertical lower bounds on the grid; two-step upper bound",
        [("vertical", suites.check_vertical_bounds), ("vertical", suites.check_two_step)],
        60.0,
    ),
    ("blowup", "blow-up contradiction pair with slack < 0.01", [("vertical", suites.check_blowup)], None),
]


def run_check(suite: str, fn, cfg: RunConfig = FULL):
    return fn(check_rng(cfg.seed, SUITES[suite].index(fn)), cfg)


def evaluate(items):
    start = time.perf_counter()
    checks = [run_check(suite, fn) for suite, fn in items]
    return checks, time.perf_counter() - start


def report_line(cid: str, title: str, ok: bool, detail: str) -> str:
    return f"{'PASS' if ok else 'FAIL'}  {cid:20s} {title} | {detail}"


def judge(checks, elapsed, limit):
    ok = all(c.status == PASS for c in checks) and (limit is None or elapsed < limit)
    budget = f"{elapsed:.1f}s" + (f" (< {limit:g}s)" if limit is not None else "")
    detail = "; ".join(f"{c.id}: {c.status}, {c.details}" for c in checks) + f"; {budget}"
    return ok, detail


def emit(capsys, line):
    with capsys.disabled():
        print("\n" + line)


@pytest.mark.parametrize("cid,title,items,limit", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(capsys, cid, title, items, limit):
    checks, elapsed = evaluate(items)
    ok, detail = judge(checks, elapsed, limit)
    emit(capsys, report_line(cid, title, ok, detail))
    for c in checks:
        assert c.status == PASS, f"{c.id}: {c.details}"
    if limit is not None:
        assert elapsed < limit, f"{cid} took {elapsed:.1f}s, limit {limit:g}s"


def determinism():
    """Every suite at threads 1 and 4; the vertical and snowflake suites also at full size."""
    runs = [(name, RunConfig(profile="quick", seed=11)) for name in sorted(SUITES)]
    runs += [(name, RunConfig(profile="full", seed=11)) for name in ("snowflake", "vertical")]
    differing = []
    for name, cfg in runs:
        texts = []
        for threads in (1, 4, 4):
            report = run_suite(name, dataclasses.replace(cfg, threads=threads))
            texts.append(json.dumps(report.as_dict(), indent=2, sort_keys=True))
        if len(set(texts)) != 1:
            differing.append(f"{name}/{cfg.profile}")
    return differing, len(runs)


def test_determinism(capsys):
    differing, count = determinism()
    ok = not differing
    detail = f"{count} suite runs at threads 1, 4, 4; " + (f"differing: {', '.join(differing)}" if differing else "byte-identical")
    emit(capsys, report_line("determinism", "reports identical across reruns and thread counts", ok, detail))
    assert ok


def main() -> int:
    failed = 0
    for cid, title, items, limit in CRITERIA:
        checks, elapsed = evaluate(items)
        ok, detail = judge(checks, elapsed, limit)
        failed += not ok
        print(report_line(cid, title, ok, detail), flush=True)
    differing, count = determinism()
    failed += bool(differing)
    print(report_line("determinism", "reports identical across reruns and thread counts", not differing, f"{count} suite runs"), flush=True)
    print(f"{len(CRITERIA) + 1 - failed}/{len(CRITERIA) + 1} criteria pass")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
