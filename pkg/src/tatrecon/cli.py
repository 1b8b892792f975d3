"""Command line entry point: ``tatrecon <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, RunConfig, SpeedConfig
from .eikonal import critical_time, fast_sweep
from .grid import Grid2D, Region, eval_speed
from .neumann import NSOptions, reconstruct_ns
from .observation import Cutoff
from .phantoms import add_noise
from .pipeline import build_phantom, error_table, run_experiment
from .rays import trace_broken_ray, trace_geodesic
from .wave import forward_measure

OUTPUT_ENV = "TATRECON_OUTPUT"
log = logging.getLogger("tatrecon")


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "tatrecon_out"))


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _speed(args):
    cfg = SpeedConfig(args.speed, args.speed_params or ())
    cfg.validate()
    return cfg.build()


def _grid(args) -> Grid2D:
    return Grid2D.square(args.nx)


def _out(args, default: str) -> Path:
    return Path(args.out) if args.out else output_root() / default


# ------------------------------------------------------------------ run


def _run_one(path: str, out_override) -> tuple:
    cfg = RunConfig.load(path)
    if out_override:
        out = Path(out_override) / cfg.name
    elif cfg.output.dir:
        out = Path(cfg.output.dir)
    else:
        out = output_root() / cfg.name
    report = run_experiment(cfg, out)
    return str(out), report


def cmd_run(args) -> int:
    if args.jobs > 1 and len(args.config) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, args.config, [args.out] * len(args.config)))
    else:
        results = [_run_one(p, args.out) for p in args.config]
    for out, report in results:
        print(f"{report['name']}: rel_error {report['rel_error']:.4f}, "
              f"iterates {report['iterates']}, T {report['T']:.4f} -> {out}")
    if len(results) > 1:
        print(error_table([r for _, r in results]))
    return 0


# ------------------------------------------------------------------ forward / reconstruct


def cmd_forward(args) -> int:
    grid = _grid(args)
    c = eval_speed(_speed(args), grid)
    cutoff = Cutoff.of(args.sides, args.ramp)
    cfg = RunConfig.from_dict({"nx": args.nx, "phantom": args.phantom})
    f = build_phantom(cfg, grid)
    T = args.T
    if T is None:
        T = args.T_mult * critical_time(fast_sweep(c, args.sides))
    trace = forward_measure(f, c, T, mask=None if cutoff.full else cutoff.on_grid(grid))
    if args.noise > 0:
        trace = add_noise(trace, args.noise, args.seed)
    out = _out(args, "forward")
    io.write_trace(out / "trace.bin", trace)
    io.write_field(out / "phantom", f)
    io.write_pgm(out / "phantom.pgm", f.data)
    io.write_manifest(out)
    print(f"T = {T:.6f}, n_t = {trace.n_t}, dt = {trace.dt:.6g} -> {out / 'trace.bin'}")
    return 0


def cmd_reconstruct(args) -> int:
    trace = io.read_trace(args.trace)
    grid = _grid(args)
    c = eval_speed(_speed(args), grid)
    if len(trace.points) != len(grid.boundary_points()) or not np.allclose(trace.points, grid.boundary_points()):
        raise ValueError("trace boundary nodes do not match the grid; check --nx")
    truth = io.read_field(args.truth) if args.truth else None
    max_terms = 1 if args.method == "tr" else args.max_terms
    region_K = Region.square(grid, *args.region_K) if args.region_K else None
    rep = reconstruct_ns(trace, c, trace.T, NSOptions(max_terms, args.tol, region_K), truth=truth)
    out = _out(args, "reconstruct")
    io.write_field(out / "tr", rep.tr)
    io.write_pgm(out / "tr.pgm", rep.tr.data)
    if args.method != "tr":
        io.write_field(out / "ns", rep.result)
        io.write_pgm(out / "ns.pgm", rep.result.data)
    summary = rep.summary()
    io.write_json(out / "report.json", summary)
    io.write_manifest(out)
    msg = f"terms {summary['n_terms']}, stop {summary['stop_reason']}"
    if truth is not None:
        msg += f", TR error {rep.rel_errors[0]:.4f}, final error {rep.rel_errors[-1]:.4f}"
    print(msg)
    return 0


# ------------------------------------------------------------------ eikonal / raytrace / phantom


def cmd_eikonal(args) -> int:
    grid = _grid(args)
    c = eval_speed(_speed(args), grid)
    tt = fast_sweep(c, args.gamma)
    T0 = critical_time(tt)
    out = _out(args, "eikonal")
    io.write_field(out / "traveltime", tt)
    io.write_pgm(out / "traveltime.pgm", tt.data)
    io.write_manifest(out)
    print(f"T0 = {T0:.6f}")
    return 0


def cmd_raytrace(args) -> int:
    model = _speed(args)
    x0 = args.start
    d = np.asarray(args.dir, dtype=float)
    if len(x0) != 2 or d.shape != (2,) or not np.hypot(*d) > 0:
        raise ValueError("--from and --dir need two numbers, --dir nonzero")
    out = _out(args, "raytrace")
    if model.smooth:
        res = trace_geodesic(x0, d, model, args.t_max)
        print(f"{res.kind} at t = {res.exit_time if res.exit_time is not None else math.nan:.6f}")
        io.write_rays(out / "rays.csv", {0: res.path})
        events = [{"kind": res.kind, "time": res.exit_time,
                   "location": None if res.exit_point is None else list(res.exit_point)}]
    else:
        res = trace_broken_ray(x0, d, model, args.t_max, branch_policy=args.policy)
        events = [asdict(e) for e in res.events]
        for e in res.events:
            angle = "" if e.alpha_in is None else f" alpha_in {e.alpha_in:.4f} deg"
            print(f"{e.kind:<26} ray {e.ray_id:>3} t {e.time:.6f} at "
                  f"({e.location[0]:+.5f}, {e.location[1]:+.5f}){angle}")
        io.write_rays(out / "rays.csv", res.paths)
    io.write_json(out / "events.json", events)
    io.write_manifest(out)
    return 0


def cmd_phantom(args) -> int:
    grid = _grid(args)
    cfg = RunConfig.from_dict({"nx": args.nx, "phantom": {"kind": args.kind, "path": args.path}})
    f = build_phantom(cfg, grid)
    out = _out(args, "phantom")
    io.write_field(out / args.kind, f)
    io.write_pgm(out / f"{args.kind}.pgm", f.data)
    io.write_manifest(out)
    print(f"{args.kind}: min {f.data.min():.4f}, max {f.data.max():.4f} -> {out}")
    return 0


def cmd_compare(args) -> int:
    reports = []
    for p in args.reports:
        p = Path(p)
        if p.is_dir():
            p = p / "report.json"
        raw = json.loads(p.read_text())
        if "tr" in raw:
            reports.append(raw)
            continue
        # a config: run it with both methods
        cfg = RunConfig.load(p)
        cfg.method.kind = "both"
        out = (Path(args.out) if args.out else output_root()) / cfg.name
        reports.append(run_experiment(cfg, out))
    table = error_table(reports)
    print(table)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "compare.txt").write_text(table + "\n")
    return 0


# ------------------------------------------------------------------ parser


def _common(p, speed=True, grid=True):
    if speed:
        p.add_argument("--speed", default="c1", help="c1 | c2 | c3 | c4 | c5 | constant")
        p.add_argument("--speed-params", type=_floats, default=None, help="comma-separated")
    if grid:
        p.add_argument("--nx", type=int, default=301, help="nodes per side of the box")
    p.add_argument("--out", default=None, help=f"output directory (default under ${OUTPUT_ENV})")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tatrecon", description="Thermoacoustic reconstruction by Neumann series.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one or more JSON experiment configs")
    p.add_argument("config", nargs="+")
    p.add_argument("--jobs", type=int, default=1, help="configs to run concurrently")
    p.add_argument("--out", default=None, help="root directory for outputs")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("forward", help="simulate a boundary trace")
    _common(p)
    p.add_argument("--phantom", default="shepp_logan")
    t = p.add_mutually_exclusive_group()
    t.add_argument("--T", type=float, default=None)
    t.add_argument("--T-mult", dest="T_mult", type=float, default=4.0)
    p.add_argument("--sides", default="all")
    p.add_argument("--ramp", type=float, default=0.2)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("reconstruct", help="TR / Neumann series from a trace file")
    _common(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--method", choices=("ns", "tr"), default="ns")
    p.add_argument("--max-terms", type=int, default=21)
    p.add_argument("--tol", type=float, default=0.05)
    p.add_argument("--truth", default=None, help="field file for error reporting")
    p.add_argument("--region-K", dest="region_K", type=_floats, default=None, help="x0,x1,y0,y1")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("eikonal", help="travel time to the observed boundary, prints T0")
    _common(p)
    p.add_argument("--gamma", default="all", help="'all' or sides such as NW")
    p.set_defaults(func=cmd_eikonal)

    p = sub.add_parser("raytrace", help="trace a ray, listing interface events")
    _common(p, grid=False)
    p.add_argument("--from", dest="start", type=_floats, required=True, help="x,y")
    p.add_argument("--dir", type=_floats, required=True, help="dx,dy")
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--policy", choices=("all", "transmit", "reflect"), default="all")
    p.set_defaults(func=cmd_raytrace)

    p = sub.add_parser("phantom", help="write a phantom field and image")
    _common(p, speed=False)
    p.add_argument("--kind", default="shepp_logan", choices=("shepp_logan", "zebra", "bump", "image"))
    p.add_argument("--path", default=None, help="PGM file for --kind image")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("compare", help="TR vs NS table from reports, run dirs or configs")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError, RuntimeError) as exc:
        print(f"tatrecon {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
