"""Command-line driver: suite runs, gradient checks, and listings.

Exit codes: 0 success, 1 failed gradient check, 2 configuration error,
3 I/O error while writing results.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources

from .bench import parse_config, run_suite, write_report
from .errors import ConfigError
from .nets import MlpSpec, run_gradient_check
from .optimizers import ALGORITHMS, default_hyper_table
from .rng import Prng
from .tasks import BUILTIN_TASK_REGIMES, RECOMMENDED_S_MAX

GRADCHECK_TOLERANCE = 1e-6


def _default_config_text() -> str:
    return (
        resources.files("optbench").joinpath("data/default_config.json").read_text()
    )


def cmd_run(args) -> int:
    if args.config is None:
        text = _default_config_text()
        source = "<built-in default config>"
    else:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
            return 2
        source = args.config
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        print(f"error: {source} is not valid JSON: {exc}", file=sys.stderr)
        return 2
    try:
        config = parse_config(raw)
    except ConfigError as exc:
        print(f"error: invalid config {source}: {exc}", file=sys.stderr)
        return 2

    if args.workers is not None:
        config.workers = args.workers
    out_dir = args.out or os.environ.get("OPT_BENCH_OUT") or config.out_dir
    config.out_dir = out_dir

    if args.dry_run:
        if any("lr_grid" in t.overrides for t in config.tasks):
            shape = f"{len(config.tasks)} tasks, per-task grids"
        else:
            shape = (
                f"{len(config.tasks)} tasks x {len(config.optimizers)} optimizers x "
                f"{len(config.lr_grid)} grid values x {config.seeds} seeds"
            )
        print(f"{config.cell_count()} cells ({shape}); nothing written")
        return 0

    def progress(done, total):
        if done % max(1, total // 20) == 0 or done == total:
            print(f"  {done}/{total} cells", file=sys.stderr)

    report = run_suite(config, progress=progress)
    try:
        paths = write_report(report, out_dir)
    except OSError as exc:
        print(f"error: cannot write results to {out_dir}: {exc}", file=sys.stderr)
        return 3

    print(f"{'optimizer':<12} {'A_bar':>8} {'dA_bar':>8}")
    for opt, a, da in sorted(report.overall, key=lambda t: -t[1]):
        print(f"{opt:<12} {a:8.4f} {da:8.4f}")
    for msg in report.regime_warnings:
        print(f"warning: {msg}")
    print("wrote " + ", ".join(paths))
    return 0


def cmd_gradcheck(args) -> int:
    try:
        layer_sizes = tuple(int(v) for v in args.layers.split(","))
        head = "softmax" if args.loss == "cross_entropy" else "linear"
        spec = MlpSpec(layer_sizes, args.activation, head, args.loss)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    dev, worst = run_gradient_check(
        spec, Prng(args.seed), draws=args.draws, corrupt=args.corrupt
    )
    status = "OK" if dev < GRADCHECK_TOLERANCE else "FAIL"
    print(
        f"gradcheck {status}: max relative deviation {dev:.3e} "
        f"(worst coordinate {worst}, {args.draws} draws, tolerance {GRADCHECK_TOLERANCE:g})"
    )
    return 0 if dev < GRADCHECK_TOLERANCE else 1


def cmd_list(_args) -> int:
    print("algorithms:")
    table = default_hyper_table()
    for algo in ALGORITHMS:
        pairs = ", ".join(f"{k}={v!r}" for k, v in table[algo].items())
        print(f"  {algo:<10} {pairs}")
    print()
    print("recommended core s_max by batch regime:")
    for regime, value in RECOMMENDED_S_MAX.items():
        print(f"  {regime:<13} s_max={value:g}")
    print()
    print("tasks:")
    for name, regime in BUILTIN_TASK_REGIMES.items():
        print(f"  {name:<18} regime={regime}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opt-bench",
        description="Deterministic optimizer benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a benchmark suite from a JSON config")
    p_run.add_argument("--config", help="path to JSON config (default: built-in suite)")
    p_run.add_argument("--dry-run", action="store_true", help="print cell count and exit")
    p_run.add_argument("--workers", type=int, help="parallel worker processes")
    p_run.add_argument("--out", help="output directory (overrides OPT_BENCH_OUT and config)")
    p_run.set_defaults(func=cmd_run)

    p_gc = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p_gc.add_argument("--layers", default="2,4,3", help="comma-separated layer sizes")
    p_gc.add_argument("--activation", default="tanh", choices=("tanh", "relu"))
    p_gc.add_argument("--loss", default="mse", choices=("mse", "cross_entropy"))
    p_gc.add_argument("--draws", type=int, default=20)
    p_gc.add_argument("--seed", type=int, default=1)
    p_gc.add_argument(
        "--corrupt",
        action="store_true",
        help="perturb one analytic gradient entry (negative-control hook)",
    )
    p_gc.set_defaults(func=cmd_gradcheck)

    p_list = sub.add_parser("list", help="show algorithms, defaults, and tasks")
    p_list.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
