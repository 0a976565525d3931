"""Command-line front end: ``flatform {plan,track,simulate,weights-demo,sweep}``.

Exit codes: 0 success, 2 configuration/parse error, 3 collision violation,
4 singularity, 5 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata
from pathlib import Path

import numpy as np

from . import collision, config, io, sim
from .errors import (CollisionViolationError, ConfigError, DomainError, NumericalError,
                     SingularityError)
from .flat_dynamics import positions

log = logging.getLogger("flatform")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_COLLISION = 3
EXIT_SINGULAR = 4
EXIT_NUMERICAL = 5


def tool_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover - source checkout
        return "0+unknown"


def _positive_float(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not np.isfinite(x) or x <= 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be a positive number")
    return x


def _positive_int(text):
    try:
        x = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if x < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be >= 1")
    return x


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="four_uav",
                        help="scenario TOML file or bundled fixture name "
                             f"({', '.join(config.FIXTURES)})")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--strategy", choices=collision.STRATEGIES)
    common.add_argument("--dt", type=_positive_float, help="simulation step in seconds")
    common.add_argument("--tf", type=_positive_float, help="horizon t_f in seconds")
    common.add_argument("--stride", type=_positive_int, help="output sampling stride")
    common.add_argument("--variant", choices=("consistent", "literal-eq19"))
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="flatform", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"flatform {tool_version()}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("plan", parents=[common], help="closed-form formation plan")
    sub.add_parser("track", parents=[common],
                   help="track the unconstrained plan without collision avoidance")
    sub.add_parser("simulate", parents=[common],
                   help="plan, track and avoid collisions with the selected strategy")
    wd = sub.add_parser("weights-demo", parents=[common],
                        help="directional weights for the two-UAV constant-velocity study")
    wd.add_argument("--steps", type=_positive_int, default=20)
    wd.add_argument("--step", type=_positive_float, default=0.1)
    sw = sub.add_parser("sweep", parents=[common],
                        help="simulate several fixtures and strategies in parallel")
    sw.add_argument("--fixtures", nargs="+", default=list(config.FIXTURES))
    sw.add_argument("--strategies", nargs="+", default=["basic", "unified"],
                    choices=collision.STRATEGIES)
    return p


def _load(args, strategy=None):
    cfg = config.load(args.config)
    return cfg.with_overrides(strategy=strategy or args.strategy, dt=args.dt, t_f=args.tf,
                              stride=args.stride, variant=args.variant)


def _overrides(args):
    return {k: getattr(args, k) for k in ("strategy", "dt", "tf", "stride", "variant")
            if getattr(args, k, None) is not None}


def _out_dir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {str(out)!r} is not writable", key="out")
    return out


def plan_metrics(cfg, times, states):
    spec = cfg.formation
    p = positions(states)
    terminal = {f"{i + 1}-{j + 1}": float(np.linalg.norm(p[-1, i] - p[-1, j] - d))
                for (i, j), d in zip(spec.formation_graph.edges, spec.offsets)}
    initial = {f"{i + 1}-{j + 1}": float(np.linalg.norm(p[0, i] - p[0, j] - d))
               for (i, j), d in zip(spec.formation_graph.edges, spec.offsets)}
    n = cfg.n_uavs
    pair_min = {}
    for i in range(n):
        for j in range(i + 1, n):
            d = np.linalg.norm(p[:, i] - p[:, j], axis=1)
            pair_min[f"{i + 1}-{j + 1}"] = float(d.min())
    return {"initial_formation_error": initial, "terminal_formation_error": terminal,
            "terminal_formation_error_sq_sum": sum(x ** 2 for x in terminal.values()),
            "initial_formation_error_sq_sum": sum(x ** 2 for x in initial.values()),
            "min_distance": min(pair_min.values(), default=float("inf")),
            "min_distance_per_pair": pair_min, "samples": int(len(times))}


def cmd_plan(cfg, out):
    times, states, controls = sim.planned_trajectory(cfg)
    files = [io.write_plan(out / "plan.csv", times, states, controls),
             io.write_json(out / "plan_metrics.json", plan_metrics(cfg, times, states))]
    return files


def cmd_track(cfg, out):
    trace = sim.run(cfg)
    s = cfg.stride
    report = sim.monitor_vhat(trace)
    summary = sim.metrics(trace)
    summary["vhat"] = {"initial": report.initial, "max": report.maximum, "delta": report.delta,
                       "bounded": report.bounded, "finite": report.finite,
                       "cost_finite": report.cost_finite,
                       "collision_free": report.collision_free}
    summary["strategy"] = cfg.strategy
    summary["variant"] = cfg.variant
    return [io.write_track(out / "track.csv", trace, s),
            io.write_distances(out / "distances.csv", trace, s),
            io.write_penalties(out / "penalties.csv", trace, s),
            io.write_vhat(out / "vhat.csv", trace, s),
            io.write_physical(out / "physical.csv", trace, s),
            io.write_json(out / "metrics.json", summary)]


def cmd_weights_demo(out, steps=20, step=0.1):
    files = []
    cases = dict(collision.WEIGHTS_DEMO_SCENARIOS)
    cases["zero_velocity"] = dict(cases["scenario1"], v1=[0.0, 0.0, 0.0])
    for name, params in cases.items():
        d = collision.weights_demo(**params, steps=steps, step=step)
        rows = zip(range(steps), d["t"], d["distance"], d["alpha"], d["beta"], d["xi"])
        files.append(io.write_csv(out / f"weights_{name}.csv",
                                  ["step", "t", "distance", "alpha", "beta", "xi"], rows))
    return files


def _sweep_job(job):
    path, strategy, overrides, out = job
    try:
        cfg = config.load(path).with_overrides(strategy=strategy, **overrides)
        target = _out_dir(Path(out) / f"{cfg.name}_{strategy}")
        cmd_track(cfg, target)
        return path, strategy, EXIT_OK, ""
    except Exception as exc:  # reported per job, mapped to an exit code
        return path, strategy, exit_code_for(exc), str(exc)


def cmd_sweep(args, out):
    cap = int(os.environ.get("FLATFORM_THREADS", os.cpu_count() or 1))
    overrides = {"dt": args.dt, "t_f": args.tf, "stride": args.stride, "variant": args.variant}
    jobs = [(f, s, overrides, str(out)) for f in args.fixtures for s in args.strategies]
    workers = max(1, min(cap, len(jobs)))
    if workers == 1:
        results = [_sweep_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, jobs))
    rows = [(f, s, code, msg) for f, s, code, msg in results]
    io.write_csv(out / "sweep.csv", ["config", "strategy", "exit_code", "message"], rows)
    return [out / "sweep.csv"], max((r[2] for r in rows), default=EXIT_OK)


def exit_code_for(exc):
    if isinstance(exc, (ConfigError, DomainError)):
        return EXIT_PARSE
    if isinstance(exc, CollisionViolationError):
        return EXIT_COLLISION
    if isinstance(exc, SingularityError):
        return EXIT_SINGULAR
    if isinstance(exc, (NumericalError, FloatingPointError, np.linalg.LinAlgError)):
        return EXIT_NUMERICAL
    raise exc


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    manifest = io.RunManifest(command=args.command, config=str(args.config),
                              out_dir=str(args.out), overrides=_overrides(args),
                              version=tool_version())
    code = EXIT_OK
    out = None
    try:
        out = _out_dir(args.out)
        if args.command == "weights-demo":
            files = cmd_weights_demo(out, args.steps, args.step)
        elif args.command == "sweep":
            files, code = cmd_sweep(args, out)
        else:
            strategy = "none" if args.command == "track" else None
            cfg = _load(args, strategy)
            manifest.config_hash = config.config_hash(cfg)
            files = cmd_plan(cfg, out) if args.command == "plan" else cmd_track(cfg, out)
        manifest.files = [Path(f).name for f in files]
    except Exception as exc:
        code = exit_code_for(exc)
        manifest.status = f"error: {exc}"
        print(f"flatform: {exc}", file=sys.stderr)
    if out is not None:
        manifest.write(out / "manifest.json")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
