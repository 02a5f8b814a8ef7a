"""Command-line entry point.

Subcommands:
  run      execute one configured experiment, write a JSON-lines trace
  sweep    run a config across a seed range, print/write a summary table
  replay   re-verify a persisted trace without re-simulating
  vessels  run the water-vessel diffusion and emit per-step CSV
  report   render metrics CSV and figures from a trace
  serve    start the interactive playground session server

Exit codes for `run`: 0 solved, 1 config error, 2 invariant violation,
3 cap exceeded.  The LUMISWARM_TRACE_DIR environment variable overrides the
output directory for traces.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config, parse_config
from .trace import build_footer, build_header, read_trace, replay, write_trace
from .verify import initial_configuration, run_experiment
from . import vessels as vessels_mod

EXIT_SOLVED = 0
EXIT_CONFIG_ERROR = 1
EXIT_VIOLATION = 2
EXIT_CAP = 3


def _trace_path(cfg_path: str, out: str | None, seed: int | None = None) -> Path:
    if out:
        return Path(out)
    directory = Path(os.environ.get("LUMISWARM_TRACE_DIR", "."))
    stem = Path(cfg_path).stem
    suffix = f"_{seed}" if seed is not None else ""
    return directory / f"{stem}{suffix}.trace.jsonl"


def _load(path: str, overrides: argparse.Namespace) -> RunConfig:
    cfg = load_config(path)
    raw = dict(cfg.raw)
    changed = False
    if getattr(overrides, "seed", None) is not None:
        raw["seed"] = overrides.seed
        changed = True
    tol = dict(raw.get("tolerances", {}))
    if getattr(overrides, "eps_geom", None) is not None:
        tol["epsGeom"] = overrides.eps_geom
        changed = True
    if getattr(overrides, "eps_coll", None) is not None:
        tol["epsColl"] = overrides.eps_coll
        changed = True
    if changed:
        if tol:
            raw["tolerances"] = tol
        return parse_config(raw)
    return cfg


def do_run(cfg: RunConfig, trace_path: Path, quiet: bool) -> int:
    initial = initial_configuration(cfg)
    events, verdict = run_experiment(cfg)
    header = build_header(cfg, initial)
    footer = build_footer(header, events, verdict)
    trace_path.parent.mkdir(parents=True, exist_ok=True)
    write_trace(str(trace_path), header, events, footer)
    if not quiet:
        print(f"verdict: {verdict.outcome}"
              + (f" ({verdict.violation.kind})" if verdict.violation else ""))
        print(f"rounds: {verdict.rounds}  events: {verdict.events}")
        print(f"trace: {trace_path}")
    if verdict.outcome == "Solved":
        return EXIT_SOLVED
    if verdict.outcome == "CapExceeded":
        return EXIT_CAP
    return EXIT_VIOLATION


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = _load(args.config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        return do_run(cfg, _trace_path(args.config, args.out), args.quiet)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        base = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    seeds = range(args.seed_start, args.seed_start + args.seeds)
    rows = []
    solved = 0
    for seed in seeds:
        raw = dict(base.raw)
        raw["seed"] = seed
        cfg = parse_config(raw)
        events, verdict = run_experiment(cfg)
        stats = verdict.stats
        final_diam = stats["hullDiameterSeries"][-1] if stats.get("hullDiameterSeries") else None
        final_vertices = stats["vertexCountSeries"][-1] if stats.get("vertexCountSeries") else None
        rows.append({
            "seed": seed,
            "verdict": verdict.outcome,
            "violation": verdict.violation.kind if verdict.violation else "",
            "rounds": verdict.rounds,
            "events": verdict.events,
            "finalHullDiameter": final_diam,
            "finalVertexCount": final_vertices,
        })
        solved += verdict.outcome == "Solved"
        if not args.quiet:
            print(f"seed {seed:5d}: {verdict.outcome:18s} rounds={verdict.rounds}")
    rate = solved / len(rows) if rows else 0.0
    if not args.quiet:
        print(f"pass rate: {solved}/{len(rows)} ({rate:.1%})")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()) if rows
                                    else ["seed", "verdict"])
            writer.writeheader()
            writer.writerows(rows)
        if not args.quiet:
            print(f"summary: {args.out}")
    return EXIT_SOLVED if solved == len(rows) else EXIT_VIOLATION


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        header, events, footer = read_trace(args.trace)
    except Exception as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    result = replay(header, events, footer)
    status = "match" if result["verdictMatches"] else "MISMATCH"
    print(f"replay outcome: {result['outcome']}")
    print(f"checksum: {'ok' if result['checksumMatches'] else 'TAMPERED'}")
    print(f"verdict vs recorded: {status}")
    return EXIT_SOLVED if result["verdictMatches"] else EXIT_VIOLATION


def cmd_vessels(args: argparse.Namespace) -> int:
    rng_levels = [float(x) for x in args.levels.split(",")] if args.levels else None
    if rng_levels is None:
        import random
        rng = random.Random(args.seed)
        rng_levels = [rng.uniform(-1.0, 1.0) for _ in range(args.n)]
    w = np.asarray(rng_levels, dtype=float)
    n = w.size
    if args.schedule == "all-open":
        schedule = vessels_mod.all_open_schedule
    elif args.schedule == "random":
        schedule = vessels_mod.random_fair_schedule(args.seed)
    elif args.schedule.startswith("faulty:"):
        schedule = vessels_mod.faulty_valve_schedule(int(args.schedule.split(":")[1]),
                                                     seed=args.seed)
    else:
        print(f"unknown schedule {args.schedule!r}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.writer(out)
    writer.writerow(["t"] + [f"w{i}" for i in range(n)] + ["energy", "lhs", "rhs"])
    for t in range(args.steps):
        valves = schedule(n, t)
        lhs, rhs, _ = vessels_mod.check_energy_inequality(w, valves)
        writer.writerow([t] + [repr(x) for x in w.tolist()]
                        + [repr(vessels_mod.energy(w)), repr(lhs), repr(rhs)])
        w = vessels_mod.vessels_step(w, valves)
    writer.writerow([args.steps] + [repr(x) for x in w.tolist()]
                    + [repr(vessels_mod.energy(w)), "", ""])
    if args.out:
        out.close()
        if not args.quiet:
            print(f"csv: {args.out}")
    return EXIT_SOLVED


def cmd_report(args: argparse.Namespace) -> int:
    from . import report
    try:
        header, events, footer = read_trace(args.trace)
    except Exception as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    outdir = Path(args.out or (Path(args.trace).with_suffix("").name + "_report"))
    written = report.render_report(header, events, footer, outdir)
    if not args.quiet:
        for path in written:
            print(f"wrote {path}")
    return EXIT_SOLVED


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return EXIT_SOLVED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lumiswarm",
        description="Luminous-robot mutual visibility: simulation, protocols, verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None, help="trace output path")
    p_run.add_argument("--quiet", action="store_true")
    p_run.add_argument("--eps-geom", type=float, default=None)
    p_run.add_argument("--eps-coll", type=float, default=None)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a config over a seed range")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--seeds", type=int, default=20, help="number of seeds")
    p_sweep.add_argument("--seed-start", type=int, default=0)
    p_sweep.add_argument("--out", default=None, help="summary CSV path")
    p_sweep.add_argument("--quiet", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)

    p_replay = sub.add_parser("replay", help="re-verify a persisted trace")
    p_replay.add_argument("trace")
    p_replay.set_defaults(func=cmd_replay)

    p_vessels = sub.add_parser("vessels", help="water-vessel diffusion CSV")
    p_vessels.add_argument("--n", type=int, default=8)
    p_vessels.add_argument("--levels", default=None,
                           help="comma-separated initial levels (overrides --n)")
    p_vessels.add_argument("--steps", type=int, default=100)
    p_vessels.add_argument("--schedule", default="all-open",
                           help="all-open | random | faulty:<valve>")
    p_vessels.add_argument("--seed", type=int, default=0)
    p_vessels.add_argument("--out", default=None)
    p_vessels.add_argument("--quiet", action="store_true")
    p_vessels.set_defaults(func=cmd_vessels)

    p_report = sub.add_parser("report", help="metrics CSV + figures from a trace")
    p_report.add_argument("trace")
    p_report.add_argument("--out", default=None, help="output directory")
    p_report.add_argument("--quiet", action="store_true")
    p_report.set_defaults(func=cmd_report)

    p_serve = sub.add_parser("serve", help="interactive playground server")
    p_serve.add_argument("--port", type=int, default=7341)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
