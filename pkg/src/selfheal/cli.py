"""Command line: ``selfheal {run,baseline,oracle-report,accept}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from .adversary import STRATEGIES, ConfigError
from .experiments.figures import emit_figures
from .experiments.grid import ExperimentGrid, run_grid


def _fraction(text: str) -> float:
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a fraction: {text!r}") from None


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with ExperimentGrid fields; flags override it")
    p.add_argument("--n", type=int, nargs="+")
    p.add_argument("--f", type=_fraction, nargs="+", help="bad fractions, e.g. 1/16 0.125")
    p.add_argument("--check", type=int, choices=(1, 2))
    p.add_argument("--sends", type=int)
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--strategy", choices=sorted(STRATEGIES))
    p.add_argument("--force-check", action="store_true", default=None)
    p.add_argument("--placement", choices=("uniform", "balanced"))
    p.add_argument("--window", type=int, help="smoothing width for curves (SENDs)")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--no-plots", action="store_true")


def grid_from_args(args: argparse.Namespace, **fixed) -> ExperimentGrid:
    base: dict = {"n_values": (14_116,), "f_values": (1 / 16,), "seeds": (1,)}
    if args.config:
        base.update(json.loads(args.config.read_text()))
    flag_map = {
        "n": "n_values", "f": "f_values", "seeds": "seeds", "check": "check_variant",
        "sends": "num_sends", "strategy": "strategy", "force_check": "force_check",
        "placement": "placement", "window": "window", "workers": "workers",
    }
    for flag, key in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            base[key] = value
    if getattr(args, "baseline", False):
        base["baseline"] = True
    base.update(fixed)
    base["out_dir"] = str(args.out)
    grid = ExperimentGrid.from_dict(base)
    return grid


def _print_aggregates(rows: list[dict]) -> None:
    cols = [
        ("n", "{:>7}"), ("f", "{:>8.5f}"), ("t", "{:>6}"),
        ("baseline_mean_messages", "{:>10.0f}"), ("selfheal_steady_messages", "{:>9.1f}"),
        ("reduction_factor", "{:>7.1f}"), ("selfheal_corruptions", "{:>9.0f}"), ("selfheal_updates", "{:>8.0f}"),
    ]
    heads = ["n", "f", "t", "baseline", "steady", "factor", "corrupt", "updates"]
    widths = [7, 8, 6, 10, 9, 7, 9, 8]
    print("  ".join(h.rjust(w) for h, w in zip(heads, widths)))
    for row in rows:
        cells = []
        for (key, fmt), w in zip(cols, widths):
            v = row.get(key)
            cells.append("-".rjust(w) if v is None else fmt.format(v))
        print("  ".join(cells))


def cmd_run(args: argparse.Namespace, **fixed) -> int:
    grid = grid_from_args(args, **fixed)
    result = run_grid(grid)
    if not args.no_plots:
        emit_figures(result, grid.out_dir, grid.window)
    else:
        emit_figures(result, grid.out_dir, grid.window, render=False)
    _print_aggregates(result.aggregates())
    for tag, err in sorted(result.failures.items()):
        print(f"failed: {tag}: {err}", file=sys.stderr)
    print(f"wrote {grid.out_dir}")
    return 1 if result.failures else 0


def cmd_baseline(args: argparse.Namespace) -> int:
    return cmd_run(args, baseline=True, self_healing=False)


def cmd_oracle_report(args: argparse.Namespace) -> int:
    from .oracles import report_lines

    for line in report_lines(tuple(args.n) if args.n else (14_116, 30_509)):
        print(line)
    return 0


def cmd_accept(args: argparse.Namespace) -> int:
    from .acceptance import Scale, run_acceptance

    scale = Scale.quick() if args.quick else Scale()
    if args.sends:
        scale = replace(scale, long_sends=args.sends)
    results = run_acceptance(args.only, scale, log=print if args.verbose else None)
    lines = [c.line() for c in results]
    if not args.verbose:
        print("\n".join(lines))
    passed = sum(c.passed for c in results)
    print(f"{passed}/{len(results)} criteria passed")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "acceptance.txt").write_text("\n".join(lines) + "\n")
    return 0 if passed == len(results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selfheal", description="Self-healing quorum routing simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment grid and write CSV, JSON and figures")
    _add_grid_flags(p)
    p.add_argument("--baseline", action="store_true", help="also run the all-to-all baseline")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("baseline", help="run only the all-to-all baseline")
    _add_grid_flags(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("oracle-report", help="print the closed-form and DP oracle values")
    p.add_argument("--n", type=int, nargs="+")
    p.set_defaults(func=cmd_oracle_report)

    p = sub.add_parser("accept", help="run the acceptance suite and print a pass/fail table")
    p.add_argument("--only", type=int, nargs="+", choices=range(1, 11), metavar="K")
    p.add_argument("--quick", action="store_true", help="short runs; for smoke testing, not a verdict")
    p.add_argument("--sends", type=int, help="override the long-run length")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_accept)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        parser.exit(2, f"selfheal: config error: {e}\n")


if __name__ == "__main__":
    sys.exit(main())
