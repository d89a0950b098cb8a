"""Command line entry point: run, validate and list experiments."""

from __future__ import annotations

import argparse
import os
import sys

from .._errors import DivergentIntegralError, DomainError, NonConvergenceError
from .config import EXPERIMENTS, ConfigError, load
from .runner import run

EXIT_OK, EXIT_FAILED, EXIT_INVALID = 0, 1, 2


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="hilbertops",
        description="Numerical experiments for Hilbert-type operators from L^p(0, inf) to l^p.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="worker processes for grid points (default: available cores)")
    r.add_argument("--out", help="output path (overrides output.path in the config)")
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("--config", required=True)
    sub.add_parser("list", help="list the available experiments")
    return ap


def _load(path):
    try:
        return load(path), None
    except ConfigError as exc:
        return None, exc.errors
    except OSError as exc:
        return None, [f"cannot read {path}: {exc.strerror}"]


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list":
        for name, (desc, crits) in EXPERIMENTS.items():
            print(f"{name:16s} criteria {','.join(crits):6s} {desc}")
        return EXIT_OK
    cfg, errors = _load(args.config)
    if errors:
        for e in errors:
            print(f"{args.config}: {e}", file=sys.stderr)
        return EXIT_INVALID
    if args.command == "validate":
        print(f"{args.config}: ok ({cfg.experiment})")
        return EXIT_OK
    if args.jobs < 1:
        print("--jobs must be at least 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        report = run(cfg, jobs=args.jobs)
    except (DomainError, DivergentIntegralError) as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NonConvergenceError as exc:
        print(f"{args.config}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAILED
    out = args.out or cfg.output_path
    text = report.to_json()
    if cfg.output_format == "csv" and report.table:
        if not out:
            print("csv output needs output.path or --out", file=sys.stderr)
            return EXIT_INVALID
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.to_csv())
        sys.stdout.write(text)
    elif out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for c in report.criteria:
        print(f"{'PASS' if c['passed'] else 'FAIL'} criterion {c['id']}: {c['name']}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
