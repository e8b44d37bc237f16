"""Command line entry point: ``frontlab run|frontspeed|list``."""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor

from .frontspeed import NoFrontError, profile_speed, shoot_front_speed
from .reaction import parse_profile_spec
from .scenarios import DESCRIPTIONS, REGISTRY, ConfigError, RunReport, builtin_configs, load_config, run_scenario
from .solver import fmt


def _run_one(args: tuple[str, str | None]) -> RunReport:
    path, out = args
    return run_scenario(load_config(path), out)


def cmd_run(ns: argparse.Namespace) -> int:
    try:
        for p in ns.config:
            load_config(p)  # fail fast on a bad config before any run starts
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    jobs = [(p, ns.out) for p in ns.config]
    if ns.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
            reports = list(pool.map(_run_one, jobs))
    else:
        reports = [_run_one(j) for j in jobs]
    for rep in reports:
        for c in rep.checks:
            print(f"  [{'pass' if c.passed else 'FAIL'}] {c.name}: {fmt(c.value)} vs {fmt(c.threshold)} {c.detail}")
        print(rep.summary())
    return 0 if all(r.passed for r in reports) else 1


def cmd_frontspeed(ns: argparse.Namespace) -> int:
    try:
        prof = parse_profile_spec(ns.profile)
    except (ValueError, OSError) as exc:
        print(f"profile error: {exc}", file=sys.stderr)
        return 2
    print("c,residual,iterations")
    try:
        if prof.kind == "kpp":
            c, _ = profile_speed(prof)
            print(f"{fmt(c)},0,0")
        else:
            r = shoot_front_speed(prof, ns.tol)
            print(f"{fmt(r.speed)},{fmt(r.residual)},{r.iterations}")
    except NoFrontError as exc:
        print(f"no front: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_list(ns: argparse.Namespace) -> int:
    configs = builtin_configs()
    for sid in sorted(REGISTRY):
        where = f"builtin:{sid}" if sid in configs else "(no bundled config)"
        print(f"{sid:24s} {where:32s} {DESCRIPTIONS.get(sid, '')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="frontlab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run scenarios from TOML configs")
    r.add_argument("--config", nargs="+", required=True, help="config paths or builtin:<id>")
    r.add_argument("--out", default=None, help="output root (default: each config's output directory)")
    r.add_argument("--jobs", type=int, default=1, help="run independent scenarios concurrently")
    r.set_defaults(func=cmd_run)
    f = sub.add_parser("frontspeed", help="front speed of a reaction profile")
    f.add_argument("--profile", required=True, help="kind:key=value,... or csv:path")
    f.add_argument("--tol", type=float, default=1e-6)
    f.set_defaults(func=cmd_frontspeed)
    ls = sub.add_parser("list", help="list built-in scenarios")
    ls.set_defaults(func=cmd_list)
    return ap


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())
