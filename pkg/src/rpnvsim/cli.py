"""Command line entry point.

    rpnvsim <experiment> [--config FILE] [--out DIR] [--jobs N] [--seed S]
    rpnvsim validate --config FILE

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import (EXPERIMENTS, ConfigError, config_hash, default_config,
                     load_config, regime_warnings)
from .experiments import ExperimentError, run
from .propagate import KrylovConvergenceError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpnvsim",
        description="Simulate single-molecule radical-pair sensing with an NV spin.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", default=None, help="JSON config file (defaults used if omitted)")
        p.add_argument("--out", default=None, help="output directory (default: config output.directory)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")

    v = sub.add_parser("validate", help="validate a config file and print diagnostics")
    v.add_argument("--config", default=None, help="JSON config file")

    d = sub.add_parser("print-config", help="print the default configuration")
    d.add_argument("--experiment", default="signal", choices=EXPERIMENTS)
    return parser


def _cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    warnings = regime_warnings(cfg)
    print(f"config ok (sha256 {config_hash(cfg)[:12]})")
    for w in warnings:
        print(f"warning: {w}")
    return EXIT_OK


def _cmd_print_config(args) -> int:
    cfg = load_config(None, experiment=args.experiment)
    json.dump(cfg, sys.stdout, sort_keys=True, indent=2)
    print()
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return _cmd_validate(args)
    if args.command == "print-config":
        return _cmd_print_config(args)

    try:
        cfg = load_config(args.config, experiment=args.command, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    for warning in regime_warnings(cfg):
        print(f"warning: {warning}", file=sys.stderr)

    out_dir = args.out if args.out is not None else cfg["output"]["directory"]
    try:
        bundle = run(cfg, jobs=args.jobs)
    except (ExperimentError, KrylovConvergenceError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        print("partial-results: none written", file=sys.stderr)
        return EXIT_NUMERIC
    paths = bundle.write(out_dir, formats=tuple(cfg["output"]["formats"]))
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
