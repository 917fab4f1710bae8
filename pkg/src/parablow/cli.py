"""Command-line driver.

    parablow solve --config run.cfg [--out DIR] [--battery DIR]

Exit status: 0 when the run reached T or decayed, 2 when it blew up (an
expected outcome, not a failure), 1 on any error. In battery mode every
``*.cfg`` in the directory runs in its own process and writes to
``<out>/<config stem>/``; the status is 1 if any run failed, else 0.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, load_config, make_initial
from .output import emit
from .run import integrate
from .spatial import EigenSolveError, build_operator

EXIT_OK, EXIT_ERROR, EXIT_BLOWUP = 0, 1, 2


def run_config(cfg):
    """Build the operator and initial data for ``cfg`` and integrate."""
    op = build_operator(cfg.domain())
    params = cfg.params(op)
    u0, v0 = make_initial(cfg, op)
    report = integrate(
        op,
        params,
        u0,
        v0,
        cfg.T,
        dt=cfg.dt,
        opts=cfg.step_options(),
        decay_floor=cfg.decay_floor,
        snapshot_every=cfg.cadence,
    )
    return report, params, op


def exit_code(report):
    if report.outcome == "error":
        return EXIT_ERROR
    return EXIT_BLOWUP if report.blew_up else EXIT_OK


def solve_one(config_path, out_dir=None):
    """Run one config and write its outputs; returns ``(exit code, message)``."""
    try:
        cfg = load_config(config_path)
        out = out_dir or cfg.out or Path(config_path).with_suffix("").as_posix() + "_out"
        report, params, op = run_config(cfg)
        emit(report, params, op, out)
    except (ConfigError, EigenSolveError, OSError, ValueError) as exc:
        return EXIT_ERROR, f"{config_path}: {exc}"
    msg = f"{config_path}: outcome={report.outcome} t={report.final.t:.6g} steps={len(report.steps)}"
    if report.message:
        msg += f" ({report.message})"
    return exit_code(report), msg


def _battery_job(args):
    return solve_one(*args)


def solve_battery(directory, out_dir=None, workers=None):
    configs = sorted(Path(directory).glob("*.cfg"))
    if not configs:
        return EXIT_ERROR, [f"{directory}: no *.cfg files"]
    base = Path(out_dir) if out_dir else Path(directory) / "out"
    jobs = [(str(c), str(base / c.stem)) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_battery_job, jobs))
    status = EXIT_ERROR if any(code == EXIT_ERROR for code, _ in results) else EXIT_OK
    return status, [msg for _, msg in results]


def build_parser():
    parser = argparse.ArgumentParser(prog="parablow", description="Implicit solver for the coupled quasilinear blow-up system.")
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", help="run a configuration")
    src = solve.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="key=value configuration file")
    src.add_argument("--battery", help="directory of *.cfg files run in parallel")
    solve.add_argument("--out", help="output directory (overrides the config's out key)")
    solve.add_argument("--workers", type=int, default=None, help="battery worker processes")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.battery:
        code, messages = solve_battery(args.battery, args.out, args.workers)
    else:
        code, msg = solve_one(args.config, args.out)
        messages = [msg]
    stream = sys.stderr if code == EXIT_ERROR else sys.stdout
    for msg in messages:
        print(msg, file=stream)
    return code


if __name__ == "__main__":
    sys.exit(main())
