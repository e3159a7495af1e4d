"""Command-line entry point: builds, distance queries, verification suites and data series.

Settings are resolved as defaults < config file < ``SHORTCUT_METRICS_OUT``
(output directory only) < command-line flags.  Exit codes: 0 pass,
1 failure, 2 inconclusive only, 64 usage or configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import warnings
from pathlib import Path

from . import kset
from .group_core import HPoint, box_distance
from .metric_engine import FamilyIndex, TruncatedMetric, ahlfors_profile
from .shortcut_core import CostSchedule, ShortcutFamily
from .space_builder import (
    NetCoverageError,
    ShortcutConfig,
    SnowflakeLine,
    build_net,
    build_snowflake_family,
    line_space,
    place_generic,
)
from .suites import SUITES, ConfigError, RunConfig, ball_build, heisenberg_build, ratio_rows, run_suite
from .vertical_metric import blowup_scan, schedule

ENV_OUT = "SHORTCUT_METRICS_OUT"
EXIT_USAGE = 64
KINDS = ("ratio", "ahlfors", "blowup", "aseq")
SPACES = ("heisenberg", "snowflake", "kset", "synthetic")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- configuration --------------------------------------------------------------------

_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _convert(key: str, raw: str):
    kind = {"lam": float, "alpha": float, "trunc": int, "m": int, "seed": int, "threads": int}.get(key, str)
    if key == "c_E":
        return None if raw.strip().lower() in ("", "none", "default") else float(raw)
    try:
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def read_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "c_e":
            key = "c_E"
        if key not in _FIELDS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _convert(key, value)
    return out


def resolve_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    if environ.get(ENV_OUT):
        values["out"] = environ[ENV_OUT]
    for key in _FIELDS:
        if hasattr(args, key):
            values[key] = getattr(args, key)
    return RunConfig(**values).validate()


# -- output helpers ---------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.12g}"


def write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def write_csv(path: Path, header: list[str], rows: list[list]) -> Path:
    lines = [",".join(header)] + [",".join(_fmt(v) for v in row) for row in rows]
    return write_text(path, "\n".join(lines) + "\n")


def write_json(path: Path, data: dict) -> Path:
    return write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def parse_point(text: str, dim: int):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad point {text!r}") from exc
    if len(vals) != dim or not all(math.isfinite(v) for v in vals):
        raise UsageError(f"expected {dim} finite comma-separated coordinates, got {text!r}")
    return HPoint(*vals) if dim == 3 else vals[0]


# -- spaces -------------------------------------------------------------------------------

def heisenberg_levels(run: RunConfig) -> tuple[int, ...]:
    top = min(run.trunc, run.m - 1)
    return tuple(range(1, top + 1))


def synthetic_family(run: RunConfig):
    """Euclidean unit interval with greedy nets; each center pairs with the point ``lambda**n`` to its right or left.

    Levels run to ``min(trunc, 5)`` and the sample step is ``lambda**(top + 1)``.
    """
    levels = tuple(range(1, min(run.trunc, 5) + 1))
    cfg = ShortcutConfig(lam=run.lam, c_E=run.c_E, levels=levels, schedule=CostSchedule(run.alpha))
    space = line_space(run.lam ** (levels[-1] + 1), 1.0)
    fam = ShortcutFamily(space.rho, run.lam)
    nets = []

    def chooser(c, r):
        return c, (c + r if c + r <= 1.0 else c - r)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for n in cfg.levels:
            net = build_net(space, cfg, fam.endpoints(), n)
            net.shortcuts = place_generic(net, cfg, space.rho, chooser)
            for sc in net.shortcuts:
                fam.add(sc)
            nets.append(net)
    return fam, nets


def snowflake_build(run: RunConfig):
    levels = tuple(range(1, min(run.trunc, 5) + 1))
    return build_snowflake_family(SnowflakeLine(), 4.0 ** -(len(levels) + 3), 1.0, levels, CostSchedule(run.alpha))


def cmd_build(args, run: RunConfig) -> int:
    out = Path(run.out)
    if run.space == "heisenberg":
        build = heisenberg_build(run.m, 0, heisenberg_levels(run), run.lam, run.c_E, run.alpha)
        nets = build.nets
        family = build.family
    elif run.space == "snowflake":
        _space, family, nets = snowflake_build(run)
    elif run.space == "synthetic":
        family, nets = synthetic_family(run)
    else:
        family = kset.family(min(run.trunc, 6))
        nets = None
    levels = {}
    for n in family.levels:
        scs = family.at_level(n)
        levels[str(n)] = {
            "shortcuts": len(scs),
            "centers": len(nets[[net.level for net in nets].index(n)].centers) if nets else len(scs),
            "max_cost": max(sc.cost for sc in scs),
        }
    summary = {"space": run.space, "lam": family.lam, "levels": levels, "shortcuts": len(family)}
    path = write_json(out / f"build-{run.space}.json", summary)
    for n, info in levels.items():
        print(f"level {n}: {info['shortcuts']} shortcuts")
    print(f"wrote {path}")
    return 0


def cmd_distance(args, run: RunConfig) -> int:
    dim = 3 if run.space in ("heisenberg", "kset") else 1
    x, y = parse_point(getattr(args, "from"), dim), parse_point(args.to, dim)
    if run.space == "kset":
        top = max(run.trunc, kset.FIRST_LEVEL)
        res = kset.kset_distance(x, y, top)
        value, eps, base = res.value, res.epsilon, box_distance(x, y)
    else:
        if run.space == "heisenberg":
            build = heisenberg_build(run.m, 0, heisenberg_levels(run), run.lam, run.c_E, run.alpha)
            metric = TruncatedMetric(FamilyIndex(build.family, heisenberg=True), run.trunc, region=build.grid.contains)
        else:
            family = snowflake_build(run)[1] if run.space == "snowflake" else synthetic_family(run)[0]
            many = (lambda a, b: abs(a - b)[..., 0] ** SnowflakeLine().delta) if run.space == "snowflake" else (lambda a, b: abs(a - b)[..., 0])
            metric = TruncatedMetric(FamilyIndex(family, metric=many), run.trunc, region=lambda p: 0.0 <= p <= 1.0)
        try:
            res = metric.distance(x, y)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        value, eps, base = res.value, res.epsilon, metric.rho(x, y)
    print(json.dumps({"base": base, "epsilon": eps, "lower": max(0.0, value - eps), "value": value}, sort_keys=True))
    return 0


def cmd_verify(args, run: RunConfig) -> int:
    report = run_suite(args.suite, run)
    path = write_json(Path(run.out) / f"verify-{args.suite}.json", report.as_dict())
    for c in report.checks:
        print(f"{c.status.upper():12s} {c.id:20s} {c.details}")
    print(f"wrote {path}")
    return report.exit_code


def cmd_scan(args, run: RunConfig) -> int:
    out = Path(run.out)
    if args.kind == "ratio":
        rows = [[r.level, r.alpha, r.ratio, r.eps] for r in ratio_rows(run)]
        path = write_csv(out / "scan-ratio.csv", ["level", "alpha", "ratio", "eps"], rows)
    elif args.kind == "ahlfors":
        build = ball_build(run)
        metric = TruncatedMetric(FamilyIndex(build.family, heisenberg=True), build.cfg.levels[-1])
        centers = [HPoint(0.5, 0.5, 0.5), HPoint(0.25, 0.75, 0.4), HPoint(0.7, 0.3, 0.6)]
        radii = [2.0**-k for k in range(2, 6)]
        base = ahlfors_profile(centers, radii, 6, (1.0, 1.0))
        short = ahlfors_profile(centers, radii, 6, (1.0, 1.0), metric=metric)
        rows = [[a, radii[b], base.ratios[a, b], short.ratios[a, b]] for a in range(len(centers)) for b in range(len(radii))]
        path = write_csv(out / "scan-ahlfors.csv", ["center", "radius", "base", "shortcut"], rows)
    elif args.kind == "blowup":
        s_grid = [1.0, 1.5, 2.0, 3.0, 4.0, 8.0, 16.0]
        rows = [[r.j, r.s, r.ratio] for r in blowup_scan(range(2, 13), s_grid)]
        path = write_csv(out / "scan-blowup.csv", ["j", "s", "ratio"], rows)
    else:
        seq = schedule(max(args.max, 16))
        path = write_csv(out / "scan-aseq.csv", ["i", "a"], [[i, seq(i)] for i in range(1, args.max + 1)])
    print(f"wrote {path}")
    return 0


def cmd_aseq(args, run: RunConfig) -> int:
    seq = schedule(max(args.max, 16))
    print(",".join(str(seq(i)) for i in range(1, args.max + 1)))
    return 0


# -- parser ---------------------------------------------------------------------------------

def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> Parser:
    common = Parser(add_help=False, argument_default=argparse.SUPPRESS)
    g = common.add_argument_group("run configuration")
    g.add_argument("--config", help="file of key = value lines supplying defaults")
    g.add_argument("--space", choices=SPACES)
    g.add_argument("--lam", type=float, help="scale ratio lambda (default 0.5)")
    g.add_argument("--c-E", dest="c_E", type=float, help="net covering constant (default 8 + 1/lambda)")
    g.add_argument("--alpha", type=float, help="cost schedule ratio, alpha_n = alpha**n; 0 gives zero costs")
    g.add_argument("--trunc", type=int, help="truncation level N")
    g.add_argument("--m", type=int, help="grid resolution exponent")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help=f"output directory (env {ENV_OUT})")
    g.add_argument("--threads", type=int)
    g.add_argument("--profile", choices=("full", "quick"), help="check sizes: full acceptance sizes or a quick subset")

    parser = Parser(prog="shortcut-metrics", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)
    sub.add_parser("build", parents=[common], help="build a shortcut construction and summarize it")
    p = sub.add_parser("distance", parents=[common], help="truncated shortcut distance between two points")
    p.add_argument("--from", required=True, metavar="X,Y,Z")
    p.add_argument("--to", required=True, metavar="X,Y,Z")
    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("--suite", required=True, choices=sorted(SUITES))
    p = sub.add_parser("scan", parents=[common], help="export a data series as CSV")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--max", type=_positive, default=1000, help="last index for the aseq series")
    p = sub.add_parser("aseq", parents=[common], help="print the schedule bits a(1..M)")
    p.add_argument("--max", type=_positive, required=True)
    return parser


COMMANDS = {"build": cmd_build, "distance": cmd_distance, "verify": cmd_verify, "scan": cmd_scan, "aseq": cmd_aseq}


def main(argv=None, environ=os.environ) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run = resolve_config(args, environ)
        return COMMANDS[args.command](args, run)
    except (ConfigError, UsageError) as exc:
        print(f"shortcut-metrics: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, NetCoverageError) as exc:
        print(f"shortcut-metrics: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
