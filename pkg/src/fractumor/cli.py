"""Command-line front end: ``fractumor solve|convergence|stability|tables``.

Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import subprocess
import sys
import time
from pathlib import Path

from . import __version__
from .driver import ConfigError, Simulation, SolverConfig
from .parabolic import StepFailure
from .persist import (SnapshotError, apply_overrides, config_text, load_snapshot, read_config,
                      save_snapshot, write_trajectory_csv)
from .verify import SPACE_LEVELS, TIME_LEVELS, reproduce_tables, run_convergence_study, \
    stability_study

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("fractumor")


class UsageError(Exception):
    pass


def version_string():
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).parent, capture_output=True, text=True,
                             timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"not a comma-separated list of numbers: {text!r}") from None


def _ints(text):
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise UsageError(f"levels must be integers: {text!r}")
    return [int(v) for v in vals]


def effective_config(args, **fixed) -> SolverConfig:
    config = read_config(args.config) if args.config else SolverConfig()
    config = apply_overrides(config, args.set or [])
    if fixed:
        config = config.replace(**fixed)
    return config.validate()


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(path, config, wall, command, extra=None):
    lines = [f"# fractumor {version_string()}", f"# command: {command}",
             f"# wall_time_s: {wall:.3f}", f"# config_hash: {config.digest()}"]
    for k, v in (extra or {}).items():
        lines.append(f"# {k}: {v}")
    Path(path).write_text("\n".join(lines) + "\n" + config_text(config))


def cmd_solve(args):
    config = effective_config(args)
    out = _outdir(args)
    sim = Simulation(config)
    state = None
    if args.resume:
        state = load_snapshot(args.resume, config)
    t0 = time.perf_counter()
    result = sim.run(state=state)
    wall = time.perf_counter() - t0
    write_trajectory_csv(sim, result.trajectory, out / "trajectory.csv")
    save_snapshot(result.state, out / "final.snapshot", config)
    s = result.summary
    write_manifest(out / "manifest.txt", config, wall, "solve", {
        "steps": s["steps"], "R_final": repr(s["R_final"]),
        "clamped_fraction": s["clamped_fraction"], "max_condition": f"{s['max_condition']:.3e}",
    })
    print(f"solved {s['steps']} steps, R(T) = {s['R_final']:.10g}, output in {out}")
    return EXIT_OK


def cmd_convergence(args):
    fixed = {} if args.alpha is None else {"alpha": args.alpha}
    config = effective_config(args, **fixed)
    levels = _ints(args.levels)
    if len(levels) < 2:
        raise UsageError("need at least two levels to estimate orders")
    if args.vary == "space" and config.mms == "example-1" and not args.keep_family:
        # polynomial exact fields sit inside the trial space; use the layered family
        config = config.replace(mms="boundary-layer")
    out = _outdir(args)
    t0 = time.perf_counter()
    study = run_convergence_study(config, args.vary, levels, reference=args.reference,
                                  workers=args.jobs, out_dir=out)
    write_manifest(out / "manifest.txt", config, time.perf_counter() - t0,
                   f"convergence --vary {args.vary} --levels {args.levels}",
                   {"reference": study.reference})
    for k, errs in study.errors.items():
        print(k, " ".join(f"{e:.4e}" for e in errs))
    return EXIT_OK


def cmd_stability(args):
    config = effective_config(args)
    eps = _floats(args.epsilon)
    if not eps or any(e <= 0 for e in eps):
        raise UsageError("epsilon values must be positive")
    out = _outdir(args)
    t0 = time.perf_counter()
    reports = stability_study(config, eps, out / "stability.csv")
    write_manifest(out / "manifest.txt", config, time.perf_counter() - t0,
                   f"stability --epsilon {args.epsilon}")
    for r in reports:
        print(f"epsilon={r.epsilon:g} deviation={r.deviation:.4e}")
    return EXIT_OK


def cmd_tables(args):
    config = effective_config(args)
    out = _outdir(args)
    t0 = time.perf_counter()
    reproduce_tables(out, config, _ints(args.time_levels), _ints(args.space_levels),
                     workers=args.jobs)
    write_manifest(out / "manifest.txt", config, time.perf_counter() - t0, "tables")
    print(f"tables written to {out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="fractumor", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--out", default=out_default, help="output directory")

    p = sub.add_parser("solve", help="run one simulation")
    common(p, "solve-out")
    p.add_argument("--resume", help="continue from a saved snapshot")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("convergence", help="time or space convergence study")
    common(p, "convergence-out")
    p.add_argument("--vary", choices=("time", "space"), required=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--levels", required=True, help="comma-separated M or N values")
    p.add_argument("--reference", choices=("exact", "trajectory"),
                   help="error reference (default: exact for time, fine-N run for space)")
    p.add_argument("--keep-family", action="store_true",
                   help="do not switch to the layered family for space studies")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("stability", help="perturbed-forcing deviation report")
    common(p, "stability-out")
    p.add_argument("--epsilon", required=True, help="comma-separated perturbation sizes")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("tables", help="time-error, time-order and space-error tables")
    common(p, "tables-out")
    p.add_argument("--time-levels", default=",".join(map(str, TIME_LEVELS)))
    p.add_argument("--space-levels", default=",".join(map(str, SPACE_LEVELS)))
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_tables)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SnapshotError, UsageError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepFailure, FloatingPointError, ArithmeticError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
