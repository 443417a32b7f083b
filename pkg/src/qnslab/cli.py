"""Command-line interface.

Subcommands map onto the verification surfaces: run, sweep, bohm-check,
acoustic-test, euler-test, rate-fit.  Exit codes: 0 success, 2 config
error, 3 numerical abort, 4 IO error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .checks import acoustic_check, bohm_form_check, euler_check
from .diagnostics import rate_fit
from .harness import ConfigError, parse_config, run_single, run_sweep
from .qnsio import SnapshotError, read_csv_columns

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _load_config(args):
    if not args.config:
        raise ConfigError("missing --config")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise IOError(f"cannot read config {args.config}: {exc}") from exc
    cfg = parse_config(text)
    if args.output:
        cfg.output_dir = args.output
    return cfg


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("QNS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"QNS_THREADS must be an integer, got {env!r}")
    return 1


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    if cfg.epsilon is None:
        raise ConfigError("run needs a single epsilon (use sweep for a ladder)")
    out = Path(cfg.output_dir)
    res = run_single(cfg, csv_path=out / "diagnostics.csv")
    if res.aborted:
        print(f"ABORTED: {res.aborted}")
        print(f"partial diagnostics in {out / 'diagnostics.csv'}")
        return EXIT_NUMERICAL
    last = res.reports[-1]
    print(f"run complete: t = {last.t:g}, {len(res.reports)} reports, "
          f"{res.wall_seconds:.2f} s")
    print(f"  terminal relative entropy = {last.rel_entropy:.6e}")
    print(f"  energy inequality: {'PASS' if res.energy_ok else 'FAIL'} "
          f"(max E+D-E0 = {res.ledger.max_violation():.3e})")
    print(f"diagnostics written to {out / 'diagnostics.csv'}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    result = run_sweep(cfg, threads=_threads(args), synthetic=args.synthetic)
    print(f"sweep over epsilon ladder {result.epsilons}"
          + (" (synthetic)" if result.synthetic else ""))
    for name, fit in result.fits.items():
        verdict = "PASS" if result.rate_verdicts[name] else "FAIL"
        print(f"  {name:12s}: slope = {fit.slope:+.4f} (threshold "
              f"{result.rate_threshold:.4f}, residual {fit.residual:.2e}) {verdict}")
    if not result.synthetic:
        for eps, run, ok in zip(result.epsilons, result.runs, result.energy_verdicts):
            state = "ABORTED" if run.aborted else ("PASS" if ok else "FAIL")
            print(f"  energy inequality at eps = {eps:g}: {state} "
                  f"({run.wall_seconds:.2f} s)")
        print(f"  density band ||n-1||_Llambda/eps within x{10:g}: "
              f"{'PASS' if result.density_band_ok else 'FAIL'} "
              f"(ratios {['%.4g' % r for r in result.density_ratios]})")
    print(f"summary written to {Path(cfg.output_dir) / 'sweep_summary.csv'}")
    if result.failed:
        return EXIT_NUMERICAL
    return EXIT_OK


def _print_battery(name, passed, lines) -> int:
    print(f"{name}:")
    for line in lines:
        print(line)
    print(f"{name}: {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_NUMERICAL


def _cmd_rate_fit(args) -> int:
    try:
        header, cols = read_csv_columns(args.csv)
    except OSError as exc:
        raise IOError(f"cannot read {args.csv}: {exc}") from exc
    if not header or "epsilon" not in header[0]:
        raise ConfigError(f"{args.csv}: first column must be epsilon, got {header[:1]}")
    eps = cols[header[0]]
    printed = False
    for name in header[1:]:
        vals = cols[name]
        if len(vals) != len(eps) or len(eps) < 3 or min(vals, default=0.0) <= 0:
            print(f"  {name:12s}: skipped (needs >= 3 positive values)")
            continue
        fit = rate_fit(eps, vals)
        print(f"  {name:12s}: slope = {fit.slope:+.4f}, intercept = {fit.intercept:+.4f}, "
              f"log-residual = {fit.residual:.3e}")
        printed = True
    if not printed:
        raise ConfigError(f"{args.csv}: no fittable columns")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnslab",
        description="Quantum Navier-Stokes limit laboratory on the 2-torus",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="path to a key = value config file")
        p.add_argument("--output", help="override the configured output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="sweep parallelism (QNS_THREADS as fallback)")

    p_run = sub.add_parser("run", help="single run with diagnostics CSV")
    add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="epsilon-ladder rate study")
    add_common(p_sweep)
    p_sweep.add_argument("--synthetic", action="store_true",
                         help="bypass the solver; exercise fit/report plumbing")

    p_bohm = sub.add_parser("bohm-check", help="quantum-force form equivalence battery")
    p_bohm.add_argument("--fields", type=int, default=20)
    p_bohm.add_argument("--grid-n", type=int, default=128)
    p_bohm.add_argument("--seed", type=int, default=0)

    sub.add_parser("acoustic-test", help="acoustic conservation and oracle battery")
    sub.add_parser("euler-test", help="Euler reference validity battery")

    p_fit = sub.add_parser("rate-fit", help="log-log slopes of a sweep summary CSV")
    p_fit.add_argument("csv", help="CSV whose first column is epsilon")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "bohm-check":
            passed, lines = bohm_form_check(
                n_fields=args.fields, grid_n=args.grid_n, seed=args.seed
            )
            return _print_battery("bohm-check", passed, lines)
        if args.command == "acoustic-test":
            passed, lines = acoustic_check()
            return _print_battery("acoustic-test", passed, lines)
        if args.command == "euler-test":
            passed, lines = euler_check()
            return _print_battery("euler-test", passed, lines)
        if args.command == "rate-fit":
            return _cmd_rate_fit(args)
        parser.error(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SnapshotError, IOError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
