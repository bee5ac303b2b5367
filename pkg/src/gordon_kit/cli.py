"""Command line entry point: ``gordon-kit <mode> --config <path> ...``."""

import argparse
import os
import sys

from .config import MODES, ConfigError, ConfigParseError, load_config
from .errors import PrecisionBudgetError, WindowError
from .report import write_report
from .runner import EXIT_DECLINED, EXIT_ERROR, EXIT_OK, run
from .spectrum import ConvergenceError


def build_parser():
    p = argparse.ArgumentParser(
        prog="gordon-kit",
        description="Eigenvalue-free disks for Jacobi and Sturm-Liouville operators.",
    )
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", required=True, help="JSON or TOML run configuration")
    p.add_argument("--out", help="report path (default: config output.path, else stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="overrides output.format")
    p.add_argument("--threads", type=int, default=1, help="worker threads for z-grid scans")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("gordon-kit: --threads must be positive", file=sys.stderr)
        return EXIT_ERROR
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"gordon-kit: cannot read config: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ConfigParseError as exc:
        print(f"gordon-kit: {args.config}: parse error at {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ConfigError as exc:
        print(f"gordon-kit: {args.config}: invalid field {exc}", file=sys.stderr)
        return EXIT_ERROR
    if cfg.mode != args.mode:
        print(f"gordon-kit: config mode {cfg.mode!r} does not match {args.mode!r}", file=sys.stderr)
        return EXIT_ERROR
    fmt = args.format or cfg.out_format
    out = args.out or cfg.out_path
    try:
        report = run(cfg, threads=args.threads, base_dir=os.path.dirname(os.path.abspath(args.config)))
    except ConfigError as exc:
        print(f"gordon-kit: {args.config}: invalid field {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (WindowError, PrecisionBudgetError, ConvergenceError, ValueError, OSError) as exc:
        print(f"gordon-kit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        text = write_report(report, out, fmt)
    except OSError as exc:
        print(f"gordon-kit: cannot write report: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if out is None or out == "-":
        sys.stdout.write(text)
    if report.declined:
        print("gordon-kit: certification declined (report written)", file=sys.stderr)
        return EXIT_DECLINED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
