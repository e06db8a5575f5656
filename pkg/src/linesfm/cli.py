"""Command line front end: single runs, seed batches, and the self-check.

Exit codes: 0 success, 1 configuration or I/O error, 2 run aborted on a
geometric singularity (partial outputs are still written), 3 self-check
oracle failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import checks
from .errors import ConfigError
from .config import load_config
from .simulate import (
    RunSummary,
    TrajectoryLog,
    aggregate_summaries,
    batch_run,
    simulate,
    summarize_run,
)

logger = logging.getLogger("linesfm")

CSV_COLUMNS = (
    "t",
    "theta",
    "phi",
    "eta1",
    "eta2",
    "theta_hat",
    "phi_hat",
    "eta1_hat",
    "eta2_hat",
    "err_theta",
    "err_phi",
    "err_eta1",
    "err_eta2",
    "nu_x",
    "nu_y",
    "nu_z",
    "omega_x",
    "omega_y",
    "omega_z",
    "sig1_sq",
    "sig2_sq",
    "plucker_err",
)

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    level_name = os.environ.get("SIM_LOG_LEVEL", "info").lower()
    level = _LOG_LEVELS.get(level_name, logging.INFO)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(message)s")
    if level_name not in _LOG_LEVELS:
        logger.warning("unknown SIM_LOG_LEVEL %r, using info", level_name)


def write_trajectory_csv(log: TrajectoryLog, path: Path) -> None:
    """Fixed-schema per-step CSV, full-precision scientific notation."""
    n = len(log)
    data = np.empty((n, len(CSV_COLUMNS)))
    data[:, 0] = log.t
    data[:, 1:5] = log.true_states
    data[:, 5:9] = log.est_states
    data[:, 9:13] = log.state_errors()
    data[:, 13:19] = log.twists
    data[:, 19:21] = log.eigen_sq
    data[:, 21] = log.plucker_errs
    np.savetxt(path, data, delimiter=",", fmt="%.17e", header=",".join(CSV_COLUMNS), comments="")


def write_world_csv(log: TrajectoryLog, path: Path) -> None:
    """Camera path and line segment endpoints for 3D plotting, one labelled
    point per row."""
    from .reports import _line_endpoints, estimated_world_line

    rows = []
    if log.line_world is not None:
        a, b = _line_endpoints(log.line_world)
        rows.append(("true_line", 0.0, *a))
        rows.append(("true_line", 0.0, *b))
    est = estimated_world_line(log)
    if est is not None:
        t_end = float(log.t[-1])
        a, b = _line_endpoints(est)
        rows.append(("est_line", t_end, *a))
        rows.append(("est_line", t_end, *b))
    for k in range(len(log)):
        rows.append(("camera_path", float(log.t[k]), *log.cam_positions[k]))
    with open(path, "w") as fh:
        fh.write("kind,t,x,y,z\n")
        for kind, t, x, y, z in rows:
            fh.write(f"{kind},{t:.17e},{x:.17e},{y:.17e},{z:.17e}\n")


def _summary_dict(summary: RunSummary) -> dict:
    failure = None
    if summary.failure is not None:
        failure = {
            "kind": summary.failure.kind,
            "time": summary.failure.time,
            "message": summary.failure.message,
        }
    return {
        "seed": summary.seed,
        "converged": summary.converged,
        "time_to_converge": summary.time_to_converge,
        "final_plucker_error": summary.final_plucker_error,
        "failure": failure,
    }


def _write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return 1
    try:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        logger.error("cannot create output directory: %s", exc)
        return 1

    log = simulate(cfg)
    summary = summarize_run(log, cfg.seed, args.threshold)
    write_trajectory_csv(log, out_dir / "trajectory.csv")
    write_world_csv(log, out_dir / "world_lines.csv")
    _write_json(_summary_dict(summary), out_dir / "summary.json")
    if not args.no_plots:
        from . import reports

        reports.render_run_figures(log, cfg, out_dir)
    if log.failure is not None:
        logger.error(
            "run aborted at t=%.3f s: %s (%s)",
            log.failure.time,
            log.failure.kind,
            log.failure.message,
        )
        return 2
    logger.info(
        "run complete: %d steps, final error %.3e, converged=%s",
        len(log) - 1,
        summary.final_plucker_error if summary.final_plucker_error is not None else float("nan"),
        summary.converged,
    )
    return 0


def _parse_seed_range(text: str):
    match = re.fullmatch(r"(-?\d+)\.\.(-?\d+)", text.strip())
    if match is None:
        raise ConfigError(f"--seeds must look like A..B, got {text!r}")
    first, last = int(match.group(1)), int(match.group(2))
    if last < first:
        raise ConfigError(f"empty seed range {text!r}")
    return range(first, last + 1)


def cmd_batch(args) -> int:
    try:
        cfg = load_config(args.config)
        seeds = _parse_seed_range(args.seeds)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return 1
    try:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        logger.error("cannot create output directory: %s", exc)
        return 1

    summaries = batch_run(cfg, seeds, args.threshold, workers=args.workers)
    for summary in summaries:
        _write_json(_summary_dict(summary), out_dir / f"summary_{summary.seed:04d}.json")
    aggregate = aggregate_summaries(summaries)
    aggregate["seeds"] = [seeds.start, seeds.stop - 1]
    aggregate["threshold"] = args.threshold
    _write_json(aggregate, out_dir / "aggregate.json")
    if not args.no_plots:
        from . import reports

        reports.render_batch_histogram(
            [s.final_plucker_error for s in summaries], out_dir / "fig_batch_errors.png"
        )
    logger.info(
        "batch complete: %d seeds, convergence rate %.2f",
        len(summaries),
        aggregate["convergence_rate"],
    )
    return 0


def cmd_check(args) -> int:
    results = checks.run_all()
    width = max(len(r.name) for r in results)
    all_ok = True
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{result.name:<{width}}  {status}  {result.detail}")
        all_ok = all_ok and result.passed
    print(f"{len(results)} oracles, {'all passed' if all_ok else 'FAILURES present'}")
    return 0 if all_ok else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linesfm",
        description="Closed-loop active estimation of 3D line parameters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one scenario and write its outputs")
    run_p.add_argument("--config", required=True, help="scenario configuration file")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument(
        "--threshold",
        type=float,
        default=1e-2,
        help="convergence threshold on the line error (default 1e-2)",
    )
    run_p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    run_p.set_defaults(func=cmd_run)

    batch_p = sub.add_parser("batch", help="execute a range of seeds and aggregate")
    batch_p.add_argument("--config", required=True)
    batch_p.add_argument("--out", required=True)
    batch_p.add_argument("--seeds", required=True, help="inclusive seed range A..B")
    batch_p.add_argument("--threshold", type=float, default=1e-2)
    batch_p.add_argument("--workers", type=int, default=1, help="parallel workers (default 1)")
    batch_p.add_argument("--no-plots", action="store_true")
    batch_p.set_defaults(func=cmd_batch)

    check_p = sub.add_parser("check", help="run the cross-representation oracle suite")
    check_p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 is reserved for singularity aborts
        return 0 if exc.code in (0, None) else 1
    return args.func(args)


def run_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run_main()
