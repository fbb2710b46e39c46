"""Command-line entry point: ``polysmooth {run,validate,oracle}``.

Exit status is 0 on success, 1 when a command fails, and 2 for usage errors
or unreadable config files.
"""

import argparse
import logging
import sys
from pathlib import Path

from .config import format_config, load_config, parse_strategies
from .exceptions import ConfigError, PolysmoothError
from .experiment import run_experiment, write_reports
from .oracle import run_oracle_suite

ORACLE_TOLERANCE = 1e-8
ISSERLIS_TOLERANCE = 1e-10


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="polysmooth", description="Gaussian filters and RTS smoothers for polynomial models."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo experiment and write CSV reports")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--runs", type=_positive_int, help="override the number of runs")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--steps", type=_positive_int, help="override the number of time steps")
    run.add_argument("--out", type=Path, help="output directory (default: config 'output')")
    run.add_argument("--strategies", help="comma-separated subset of gi,ckf,ukf,ekf")
    run.add_argument("--workers", type=_positive_int, help="process count (default: POLYSMOOTH_WORKERS or CPU count)")

    val = sub.add_parser("validate", help="check a config and print the effective settings")
    val.add_argument("--config", required=True, type=Path)

    orc = sub.add_parser("oracle", help="compare exact moments against quadrature and Isserlis")
    orc.add_argument("--dim", type=_positive_int, default=3)
    orc.add_argument("--degree", type=int, default=6)
    orc.add_argument("--cases", type=_positive_int, default=200)
    orc.add_argument("--seed", type=int, default=0)
    return parser


def _load(path, parser):
    if not path.is_file():
        parser.error(f"config file not found: {path}")
    return load_config(path)


def _overrides(config, args):
    changes = {}
    for key in ("runs", "seed", "steps"):
        if getattr(args, key) is not None:
            changes[key] = getattr(args, key)
    if args.strategies is not None:
        changes["strategies"] = parse_strategies(args.strategies)
    if args.out is not None:
        changes["output"] = str(args.out)
    return config.replace(**changes) if changes else config


def _cmd_run(args, parser):
    config = _overrides(_load(args.config, parser), args)
    report = run_experiment(config, workers=args.workers)
    paths = write_reports(report, config.output)
    for m in report.methods:
        for kind, avg, ret in (
            ("filter", report.filter_average, report.filter_ret),
            ("smoother", report.smoother_average, report.smoother_ret),
        ):
            values = " ".join(f"{v:.4f}" for v in avg[m])
            print(f"{m:4s} {kind:8s} rmse {values}  ret {ret[m]:.2f}  diverged {report.diverged[m]}")
    print("wrote " + ", ".join(str(p) for p in paths))
    return 0


def _cmd_validate(args, parser):
    config = _load(args.config, parser)
    model = config.validate()
    sys.stdout.write(format_config(config))
    print(f"# ok: {model.state_dim} states, {model.measurement_dim} measurements")
    return 0


def _cmd_oracle(args, parser):
    if args.degree < 0:
        parser.error("--degree must be >= 0")
    report = run_oracle_suite(args.dim, args.degree, args.cases, seed=args.seed)
    ok = report.max_quadrature_error <= ORACLE_TOLERANCE and report.max_isserlis_error <= ISSERLIS_TOLERANCE
    print(f"cases {report.cases}")
    print(f"max relative error vs quadrature {report.max_quadrature_error:.3e}")
    print(f"max relative error vs isserlis   {report.max_isserlis_error:.3e} ({report.isserlis_cases} zero-mean cases)")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


_COMMANDS = {"run": _cmd_run, "validate": _cmd_validate, "oracle": _cmd_oracle}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _COMMANDS[args.command](args, parser)
    except ConfigError as exc:
        print(f"polysmooth: config error: {exc}", file=sys.stderr)
        return 1
    except PolysmoothError as exc:
        print(f"polysmooth: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
