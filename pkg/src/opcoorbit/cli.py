"""Command-line entry point: ``opcoorbit <command> [options]``.

Exit status is 0 on success, 2 on configuration errors or dimension
mismatches, 3 when the analysis system is not a frame, and 1 when
``selftest`` finds a failing check.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .errors import ConfigError, DimensionMismatch, NotAFrame
from .experiments import (WINDOWS, ExperimentConfig, cmd_decay_study, cmd_denoise, cmd_localization_report,
                          cmd_scenarios, cmd_underspread, selftest)

COMMANDS = ("underspread", "denoise", "scenarios", "decay", "localize", "selftest")


def _number_list(cast):
    def parse(text):
        try:
            return tuple(cast(v) for v in text.replace(",", " ").split())
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opcoorbit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"opcoorbit {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--n", type=int, help="signal dimension N (default 144; selftest 16)")
    parser.add_argument("--a", type=int, help="time step of the lattice")
    parser.add_argument("--b", type=int, help="frequency step of the lattice")
    parser.add_argument("--window", choices=WINDOWS, help="analysis window family")
    parser.add_argument("--rank", type=int, help="window rank (multi_gaussian, eigenfunctions)")
    parser.add_argument("--alpha", type=_number_list(float), help="decay orders, e.g. 1,2,3")
    parser.add_argument("--snr-db", type=float, help="noise level for denoise (default 10)")
    parser.add_argument("--k-grid", type=_number_list(int), help="K values to report, e.g. 20,100,500")
    parser.add_argument("--p-grid", type=_number_list(float), help="quasi-norm exponents")
    parser.add_argument("--seed", type=_number_list(int), help="one or more seeds, e.g. 0,1,2")
    parser.add_argument("--trials", type=int, help="white-noise probes per K")
    parser.add_argument("--threads", type=int, help="parallel jobs (BLAS then runs single-threaded)")
    parser.add_argument("--reproducible", action="store_true", help="byte-identical outputs, no timestamps")
    parser.add_argument("--out", help="output directory (OPCOORBIT_OUT overrides)")
    return parser


def config_from_args(args) -> ExperimentConfig:
    out = os.environ.get("OPCOORBIT_OUT") or args.out
    return ExperimentConfig.for_command(
        args.command, n=args.n, a=args.a, b=args.b, window=args.window, rank=args.rank,
        alpha=args.alpha, snr_db=args.snr_db, k_grid=args.k_grid, p_grid=args.p_grid,
        seeds=args.seed, trials=args.trials, threads=args.threads,
        reproducible=args.reproducible or None, output_dir=out,
    )


def _print_report(result, command):
    if command == "underspread":
        for seed, rep in result["reports"].items():
            cells = "  ".join(f"K={k}: {e:.4g}" for k, e in zip(rep.ks, rep.app_err))
            print(f"seed {seed}  |Lambda|={result['coefficients']}  {cells}")
    elif command == "denoise":
        for seed, run in result["runs"].items():
            print(f"seed {seed}  K*={run['k_star']}  clean min {run['clean_min']:.4g}  "
                  f"clean full {run['clean_full']:.4g}  zeroed {100 * run['zeroed_at_k_star']:.1f}%")
    elif command == "scenarios":
        k10 = result["coefficients"] // 10
        for (seed, sid), r in result["results"].items():
            print(f"seed {seed}  test {int(sid):2d}  AppErr(K={k10}) = {r['errors'][k10]:.4g}")
    elif command == "decay":
        for (seed, label), curves in result["results"].items():
            cells = "  ".join(f"r{rank}: {c['errors'][min(200, c['errors'].size - 1)]:.4g}"
                              for rank, c in curves.items())
            print(f"seed {seed}  alpha={label}  AppErr(200)  {cells}")
    elif command == "localize":
        print(f"s_hat={result['s_hat']}  r2={result['r2']}")
        if "max_abs_deviation" in result:
            print(f"max |entry - |V_g g|| = {result['max_abs_deviation']:.3e}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        if config.command == "selftest":
            checks = selftest(config)
            for name, ok, detail in checks:
                print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
            return 0 if all(ok for _, ok, _ in checks) else 1
        runner = {
            "underspread": cmd_underspread,
            "denoise": cmd_denoise,
            "scenarios": cmd_scenarios,
            "decay": cmd_decay_study,
            "localize": cmd_localization_report,
        }[config.command]
        result = runner(config)
    except NotAFrame as exc:
        print(f"opcoorbit: not a frame: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, DimensionMismatch, ValueError) as exc:
        print(f"opcoorbit: {exc}", file=sys.stderr)
        return 2
    _print_report(result, config.command)
    print(f"outputs written to {config.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
