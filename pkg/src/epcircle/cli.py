"""Command line driver.

Exit status: 0 on success, 2 on breakdown or a failed check, 1 on a
configuration or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import runner
from .config import ConfigError, load

log = logging.getLogger("epcircle")


def _out_dir(cfg, override) -> Path:
    out = Path(override if override is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    cfg = load(args.config)
    outcome = runner.execute_run(cfg)
    out = runner.write_outputs(outcome, args.output_dir)
    verdict = outcome.summary["verdict"]
    line = f"{verdict['status']}"
    if verdict["status"] == "breakdown":
        line += f" at t={verdict['t']:.6g} ({verdict['reason']})"
    print(f"{line}; wrote {out}")
    return outcome.exit_code


def cmd_convergence(args) -> int:
    cfg = load(args.config)
    table = runner.convergence_study(cfg, dts=args.dts, ns=args.ns, workers=args.workers)
    out = _out_dir(cfg, args.output_dir)
    table.write_csv(out / "convergence.csv")
    label = "order" if table.kind == "dt" else "ratio"
    print(f"{'resolution':>12} {'status':>10} {'error':>12} {label:>10} pass")
    for r in table.rows:
        print(f"{r.resolution:>12} {r.status:>10} {r.error:12.4e} {r.observed:10.4g} {str(r.passed).lower()}")
    return runner.EXIT_OK if table.passed else runner.EXIT_FAIL


def cmd_compare_backends(args) -> int:
    cfg = load(args.config)
    try:
        comparison = runner.compare_backends(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = _out_dir(cfg, args.output_dir)
    comparison.write_csv(out / "comparison.csv")
    with open(out / "comparison.json", "w") as fh:
        json.dump(comparison.to_json(), fh, indent=2)
        fh.write("\n")
    msg = f"max discrepancy {comparison.max_discrepancy:.3e} (tol {runner.BACKEND_TOL:g})"
    if comparison.max_oracle_error is not None:
        msg += f"; max oracle error {comparison.max_oracle_error:.3e} (tol {runner.ORACLE_TOL:g})"
    print(("pass: " if comparison.passed else "FAIL: ") + msg)
    return runner.EXIT_OK if comparison.passed else runner.EXIT_FAIL


def cmd_catalog(args) -> int:
    json.dump(runner.catalog_json(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return runner.EXIT_OK


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epcircle", description="Pseudospectral solver for Euler-Poincare flows on the circle"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate one configuration")
    p.add_argument("config", help="run configuration (JSON)")
    p.add_argument("-o", "--output-dir", help="override output_dir from the config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("convergence", help="self-convergence study in dt or n")
    p.add_argument("config")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--dts", type=_positive_float, nargs="+", help="time steps (at least 3)")
    group.add_argument("--ns", type=int, nargs="+", help="grid sizes (at least 3)")
    p.add_argument("-j", "--workers", type=int, default=None, help="worker processes")
    p.add_argument("-o", "--output-dir")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("compare-backends", help="Eulerian against Lagrangian backend")
    p.add_argument("config")
    p.add_argument("-o", "--output-dir")
    p.set_defaults(func=cmd_compare_backends)

    p = sub.add_parser("catalog", help="list equation presets as JSON")
    p.set_defaults(func=cmd_catalog)
    return parser


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = _show_warning
            return args.func(args)
    except (ValueError, OSError) as exc:  # ConfigError is a ValueError
        print(f"error: {exc}", file=sys.stderr)
        return runner.EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
