"""Command-line entry point: ``mapqkd {sweep,figure,validate,optimize-alpha}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Optional, Sequence

from . import harness
from .core import ConfigurationError

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_CONFIG_ERROR = 2

log = logging.getLogger("mapqkd")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _jobs(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("jobs must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (sweep, optimize-alpha, validate) or directory (figure)")
    common.add_argument("--seed", type=_seed, default=0, help="seed for Monte Carlo suites (default 0)")
    common.add_argument("--jobs", type=_jobs, default=1, help="worker processes for sweep rows")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="mapqkd", description="Key-rate engine for memory-assisted "
                                     "phase-matching QKD repeater chains.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", parents=[common], help="run a parameter sweep from a config file")
    p.add_argument("config")

    p = sub.add_parser("figure", parents=[common], help="reproduce the data behind one figure")
    p.add_argument("figure_id", choices=harness.FIGURE_IDS)
    p.add_argument("--points", type=int, default=harness.DEFAULT_POINTS)

    p = sub.add_parser("validate", parents=[common], help="run a validation suite")
    p.add_argument("suite", choices=harness.VALIDATION_SUITES)
    p.add_argument("--trials", type=int, default=1_000_000, help="Monte Carlo trials per check")

    p = sub.add_parser("optimize-alpha", parents=[common], help="grid-search alpha over a sweep config")
    p.add_argument("config")
    p.add_argument("--points", type=int, default=harness.DEFAULT_POINTS)
    return parser


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(out)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _run(args) -> int:
    if args.command == "sweep":
        spec = harness.load_config(args.config)
        rows = harness.run_sweep(spec, args.jobs)
        _emit(harness.rows_to_csv(rows, spec.columns()), args.out or spec.output_path)
        return EXIT_OK
    if args.command == "optimize-alpha":
        spec = harness.load_config(args.config)
        rows = harness.optimize_alpha(spec, args.points)
        lead = [] if spec.sweep_var == "L_total" else [spec.sweep_var]
        columns = lead + ["L_km", "alpha", "raw_rate", "skf", "skr_per_use", "skr_per_sec"]
        _emit(harness.rows_to_csv(rows, columns), args.out or spec.output_path)
        return EXIT_OK
    if args.command == "figure":
        out_dir = args.out or "."
        tables = harness.run_figure(args.figure_id, out_dir, args.jobs, args.points)
        for name in tables:
            print(os.path.join(out_dir, f"{args.figure_id}_{name}.csv"))
        return EXIT_OK
    if args.command == "validate":
        report = harness.run_validation(args.suite, args.seed, args.trials)
        _emit(harness.report_to_json(report), args.out)
        return EXIT_OK if report["passed"] else EXIT_VALIDATION_FAILED
    raise AssertionError(args.command)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad usage, which matches the config-error code
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _run(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
