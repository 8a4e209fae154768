"""Multi-seed benchmark protocol with grid scan and accuracy scoring.

A suite is a grid of cells (task, optimizer, step parameter, seed).
Every cell derives its random stream from the master seed plus the task
name and seed index only, so all optimizers see identical datasets,
initial weights, and batch orders for a given seed, and results do not
depend on which other cells run or in what order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, NumericFailure
from .nets import loss_and_grad
from .optimizers import OptimizerSpec, make_optimizer
from .rng import Prng, derive_rng, mean_std
from .tasks import BUILTIN_TASKS, TaskInstance, evaluate_test_error

DEFAULT_LR_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)

# a failed run is scored at `factor x worst finite error` on its task
# (relative mode), or at a fixed constant
PENALTY_FALLBACK = 1000.0


@dataclass
class ErrorTrace:
    """Per-epoch test errors of one training run."""

    errors: np.ndarray
    failed: bool
    seed: int
    wall_time: float
    params_checksum: str
    epochs_requested: int


def run_training(
    task: TaskInstance,
    opt_spec: OptimizerSpec,
    rng: Prng,
    seed: int = 0,
    stop_below: float | None = None,
    on_step=None,
) -> ErrorTrace:
    """Train once and record the test error after every epoch.

    Divergence (non-finite loss, gradient, or error) marks the run
    failed instead of raising.  `stop_below` ends the run early once the
    test error falls under the threshold (used by convergence checks);
    without it the trace has exactly `task.epochs` entries.  `on_step`
    is called as on_step(optimizer, params, grad) after every update,
    for trajectory inspection.
    """
    t_start = time.perf_counter()
    params = task.initial_params(rng)
    opt = make_optimizer(opt_spec, task.layout())
    errors: list[float] = []
    failed = False
    # divergence shows up as non-finite values and is handled as data
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(task.epochs):
            try:
                if task.kind == "analytic":
                    grad = task.objective.grad(params.values)
                    opt.step(params, grad)
                    if on_step is not None:
                        on_step(opt, params, grad)
                else:
                    epoch_rng = Prng(rng.next_u64())
                    n = len(task.train_set)
                    b = task.resolved_batch_size()
                    if b == n:
                        batches = [task.train_set]
                    else:
                        # same permutation next_batch() would derive
                        order = np.array(Prng(epoch_rng.state).shuffled_indices(n))
                        batches = [
                            task.train_set.take(order[pos * b : (pos + 1) * b])
                            for pos in range(task.batches_per_epoch())
                        ]
                    for batch in batches:
                        _, grad = loss_and_grad(task.model_spec, params, batch)
                        opt.step(params, grad)
                        if on_step is not None:
                            on_step(opt, params, grad)
                err = evaluate_test_error(task, params)
                if not math.isfinite(err):
                    raise NumericFailure("non-finite test error")
            except (NumericFailure, FloatingPointError, OverflowError):
                failed = True
                break
            errors.append(err)
            if stop_below is not None and err < stop_below:
                break
    checksum = hashlib.sha256(params.values.tobytes()).hexdigest()[:16]
    return ErrorTrace(
        errors=np.asarray(errors, dtype=np.float64),
        failed=failed,
        seed=seed,
        wall_time=time.perf_counter() - t_start,
        params_checksum=checksum,
        epochs_requested=task.epochs,
    )


def min_test_error(trace: ErrorTrace, penalty: float = PENALTY_FALLBACK) -> float:
    """Early-stopping error: minimum over epochs, or the penalty for a
    failed run (a failed run's earlier finite epochs do not count)."""
    if trace.failed:
        return float(penalty)
    return float(np.min(trace.errors))


def grid_select(
    results: dict[float, list[float]], select_by: str = "mean"
) -> tuple[float, float, float]:
    """Pick the step parameter from per-value E_min samples.

    "mean" selects the lowest mean (ties: lower std, then smaller
    value); "std" selects the lowest standard deviation (ties: lower
    mean, then smaller value).
    """
    if not results:
        raise ValueError("empty grid results")
    if select_by not in ("mean", "std"):
        raise ConfigError(f"select_by must be 'mean' or 'std', got {select_by!r}")
    stats = []
    for lr in sorted(results):
        vals = results[lr]
        if not vals:
            raise ValueError(f"no seeds recorded for value {lr}")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # single-seed std=0 is fine here
            m, s = mean_std(vals)
        stats.append((lr, m, s))
    if select_by == "mean":
        best = min(stats, key=lambda t: (t[1], t[2], t[0]))
    else:
        best = min(stats, key=lambda t: (t[2], t[1], t[0]))
    return best


def accuracy_scores(
    errors: dict[str, tuple[float, float]]
) -> dict[str, tuple[float, float]]:
    """Relative accuracy per optimizer: best error divided by own error,
    with first-order uncertainty propagation."""
    if not errors:
        raise ValueError("no optimizer errors to score")
    floored = {}
    for name, (e, de) in errors.items():
        if e < 0.0:
            raise ValueError(f"error metric for {name!r} must be nonnegative")
        floored[name] = (max(e, 1e-12), de)
    best = min(e for e, _ in floored.values())
    return {
        name: (best / e, best / (e * e) * de) for name, (e, de) in floored.items()
    }


def overall_score(per_task: dict[str, tuple[float, float]]) -> tuple[float, float]:
    """Arithmetic mean of task accuracies with independent-error
    propagation."""
    if not per_task:
        raise ValueError("no task scores")
    n = len(per_task)
    a_bar = math.fsum(a for a, _ in per_task.values()) / n
    da_bar = math.sqrt(math.fsum(da * da for _, da in per_task.values())) / n
    return a_bar, da_bar


# -- suite configuration ------------------------------------------------------

_TASK_OVERRIDE_KEYS = {
    "epochs",
    "dim",
    "train_size",
    "test_size",
    "batch_size",
    "noise_sigma",
    "stop_below",
    "lr_grid",
}

# override keys consumed by the runner rather than the task factory
_RUNNER_KEYS = {"stop_below", "lr_grid"}


@dataclass(frozen=True)
class TaskConfig:
    name: str
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in BUILTIN_TASKS:
            raise ConfigError(
                f"unknown task {self.name!r}; choose from {', '.join(BUILTIN_TASKS)}"
            )
        unknown = set(self.overrides) - _TASK_OVERRIDE_KEYS
        if unknown:
            raise ConfigError(
                f"unknown task override {sorted(unknown)[0]!r} for {self.name}"
            )
        if "lr_grid" in self.overrides and (
            not self.overrides["lr_grid"]
            or any(v <= 0 for v in self.overrides["lr_grid"])
        ):
            raise ConfigError(f"lr_grid for {self.name} must be positive values")

    def build(self, rng: Prng) -> TaskInstance:
        kwargs = {k: v for k, v in self.overrides.items() if k not in _RUNNER_KEYS}
        return BUILTIN_TASKS[self.name](rng, **kwargs)

    @property
    def stop_below(self) -> float | None:
        return self.overrides.get("stop_below")

    def grid(self, default: tuple[float, ...]) -> tuple[float, ...]:
        """Task-specific step-parameter grid, e.g. tightened per regime."""
        if "lr_grid" in self.overrides:
            return tuple(float(v) for v in self.overrides["lr_grid"])
        return default


@dataclass
class SuiteConfig:
    tasks: list[TaskConfig]
    optimizers: list[OptimizerSpec]
    master_seed: int = 1
    lr_grid: tuple[float, ...] = DEFAULT_LR_GRID
    seeds: int = 20
    select_by: str = "mean"
    penalty_mode: str = "relative"
    penalty_value: float = 10.0
    workers: int = 1
    out_dir: str = "bench_out"

    def __post_init__(self):
        if not self.tasks:
            raise ConfigError("config needs at least one task")
        if not self.optimizers:
            raise ConfigError("config needs at least one optimizer")
        names = [s.name for s in self.optimizers]
        if len(set(names)) != len(names):
            raise ConfigError("optimizer labels must be unique")
        if self.seeds < 1:
            raise ConfigError("seeds must be >= 1")
        if not self.lr_grid or any(v <= 0 for v in self.lr_grid):
            raise ConfigError("lr_grid values must be positive")
        if self.select_by not in ("mean", "std"):
            raise ConfigError(f"select_by must be 'mean' or 'std', got {self.select_by!r}")
        if self.penalty_mode not in ("relative", "constant"):
            raise ConfigError("penalty_mode must be 'relative' or 'constant'")
        if self.penalty_value <= 0:
            raise ConfigError("penalty_value must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def cell_count(self) -> int:
        return sum(
            len(self.optimizers) * len(t.grid(self.lr_grid)) * self.seeds
            for t in self.tasks
        )


_CONFIG_KEYS = {
    "master_seed",
    "tasks",
    "optimizers",
    "lr_grid",
    "seeds",
    "select_by",
    "penalty_mode",
    "penalty_value",
    "workers",
    "out_dir",
}


def parse_config(raw: dict) -> SuiteConfig:
    """Validate a JSON-shaped dict; unknown keys anywhere are rejected."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config key {sorted(unknown)[0]!r}")
    if "tasks" not in raw or "optimizers" not in raw:
        raise ConfigError("config must define 'tasks' and 'optimizers'")

    tasks = []
    for entry in raw["tasks"]:
        if isinstance(entry, str):
            tasks.append(TaskConfig(entry))
        elif isinstance(entry, dict):
            entry = dict(entry)
            name = entry.pop("name", None)
            if name is None:
                raise ConfigError("task entry missing 'name'")
            tasks.append(TaskConfig(name, entry))
        else:
            raise ConfigError("task entries must be names or objects")

    optimizers = []
    for entry in raw["optimizers"]:
        if isinstance(entry, str):
            optimizers.append(OptimizerSpec(entry))
        elif isinstance(entry, dict):
            entry = dict(entry)
            algo = entry.pop("algorithm", None)
            if algo is None:
                raise ConfigError("optimizer entry missing 'algorithm'")
            label = entry.pop("label", None)
            optimizers.append(OptimizerSpec(algo, entry, label))
        else:
            raise ConfigError("optimizer entries must be algorithm names or objects")

    kwargs = {}
    for key in ("master_seed", "seeds", "select_by", "penalty_mode",
                "penalty_value", "workers", "out_dir"):
        if key in raw:
            kwargs[key] = raw[key]
    if "lr_grid" in raw:
        kwargs["lr_grid"] = tuple(float(v) for v in raw["lr_grid"])
    return SuiteConfig(tasks=tasks, optimizers=optimizers, **kwargs)


def config_echo(config: SuiteConfig) -> dict:
    """JSON-ready dict that parse_config maps back to the same config."""
    return {
        "master_seed": config.master_seed,
        "tasks": [
            {"name": t.name, **t.overrides} for t in config.tasks
        ],
        "optimizers": [
            {
                "algorithm": s.algorithm,
                **({"label": s.label} if s.label else {}),
                **s.overrides,
            }
            for s in config.optimizers
        ],
        "lr_grid": list(config.lr_grid),
        "seeds": config.seeds,
        "select_by": config.select_by,
        "penalty_mode": config.penalty_mode,
        "penalty_value": config.penalty_value,
        "workers": config.workers,
        "out_dir": config.out_dir,
    }


# -- suite execution ----------------------------------------------------------


@dataclass(frozen=True)
class _CellSpec:
    task: TaskConfig
    opt: OptimizerSpec
    lr: float
    seed: int
    master_seed: int


@dataclass
class CellResult:
    task: str
    optimizer: str
    lr: float
    seed: int
    trace: ErrorTrace
    e_min: float = math.nan  # penalty-adjusted, filled during aggregation


def _run_cell(cell: _CellSpec) -> CellResult:
    rng = derive_rng(cell.master_seed, cell.task.name, cell.seed)
    task = cell.task.build(rng)
    trace = run_training(
        task,
        cell.opt.with_step_parameter(cell.lr),
        rng,
        seed=cell.seed,
        stop_below=cell.task.stop_below,
    )
    return CellResult(cell.task.name, cell.opt.name, cell.lr, cell.seed, trace)


@dataclass
class TaskOptimizerSummary:
    task: str
    optimizer: str
    selected_lr: float
    e_min_mean: float
    e_min_std: float
    accuracy: float
    accuracy_err: float


@dataclass
class BenchmarkReport:
    config: dict
    cells: list[CellResult]
    summaries: list[TaskOptimizerSummary]
    overall: list[tuple[str, float, float]]
    regime_warnings: list[str]
    penalties: dict[str, float]

    def summary_for(self, task: str, optimizer: str) -> TaskOptimizerSummary:
        for s in self.summaries:
            if s.task == task and s.optimizer == optimizer:
                return s
        raise KeyError((task, optimizer))


def run_suite(config: SuiteConfig, progress=None) -> BenchmarkReport:
    """Execute every cell, apply the grid selection per (task,
    optimizer), and score.  Output is a pure function of the cell set:
    aggregation sorts by task, optimizer, lr, and seed first."""
    cells = [
        _CellSpec(tc, spec, lr, seed, config.master_seed)
        for tc in config.tasks
        for spec in config.optimizers
        for lr in tc.grid(config.lr_grid)
        for seed in range(config.seeds)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = []
            for i, res in enumerate(pool.map(_run_cell, cells, chunksize=4)):
                results.append(res)
                if progress:
                    progress(i + 1, len(cells))
    else:
        results = []
        for i, cell in enumerate(cells):
            results.append(_run_cell(cell))
            if progress:
                progress(i + 1, len(cells))
    return aggregate(config, results)


def aggregate(config: SuiteConfig, results: list[CellResult]) -> BenchmarkReport:
    results = sorted(results, key=lambda r: (r.task, r.optimizer, r.lr, r.seed))
    task_names = [t.name for t in config.tasks]
    opt_names = [s.name for s in config.optimizers]
    algo_by_name = {s.name: s.algorithm for s in config.optimizers}
    regime_by_task = {}
    for tc in config.tasks:
        probe = tc.build(derive_rng(config.master_seed, tc.name, 0))
        regime_by_task[tc.name] = probe.regime

    # penalty per task, then E_min per cell
    penalties: dict[str, float] = {}
    for task in task_names:
        finite = [
            float(np.min(r.trace.errors))
            for r in results
            if r.task == task and not r.trace.failed and r.trace.errors.size
        ]
        if config.penalty_mode == "constant":
            penalties[task] = config.penalty_value
        elif finite and max(finite) > 0:
            penalties[task] = config.penalty_value * max(finite)
        else:
            penalties[task] = PENALTY_FALLBACK
    for r in results:
        r.e_min = min_test_error(r.trace, penalties[r.task])

    summaries: list[TaskOptimizerSummary] = []
    regime_warnings: list[str] = []
    per_task_scores: dict[str, dict[str, tuple[float, float]]] = {}
    for task in task_names:
        errors: dict[str, tuple[float, float]] = {}
        selections: dict[str, tuple[float, float, float]] = {}
        for opt in opt_names:
            by_lr: dict[float, list[float]] = {}
            for r in results:
                if r.task == task and r.optimizer == opt:
                    by_lr.setdefault(r.lr, []).append(r.e_min)
            lr, mean, std = grid_select(by_lr, config.select_by)
            selections[opt] = (lr, mean, std)
            errors[opt] = (mean, std)
            # the regime guidance for s_max is stated for the core
            # optimizer; flag selections that contradict it
            if algo_by_name[opt] == "core":
                regime = regime_by_task[task]
                if (regime == "mini_batch" and lr > 1e-2) or (
                    regime == "batch" and lr < 1e-1
                ):
                    regime_warnings.append(
                        f"regime mismatch: {opt} selected s_max={lr:g} on "
                        f"{task} ({regime} regime)"
                    )
        scores = accuracy_scores(errors)
        per_task_scores[task] = scores
        for opt in opt_names:
            lr, mean, std = selections[opt]
            a, da = scores[opt]
            summaries.append(
                TaskOptimizerSummary(task, opt, lr, mean, std, a, da)
            )

    overall = []
    for opt in opt_names:
        a_bar, da_bar = overall_score(
            {task: per_task_scores[task][opt] for task in task_names}
        )
        overall.append((opt, a_bar, da_bar))

    for msg in regime_warnings:
        print(f"warning: {msg}", file=sys.stderr)

    return BenchmarkReport(
        config=config_echo(config),
        cells=results,
        summaries=summaries,
        overall=overall,
        regime_warnings=regime_warnings,
        penalties=penalties,
    )


# -- report files -------------------------------------------------------------


def write_report(report: BenchmarkReport, out_dir) -> list[str]:
    """Write traces.csv, summary.csv, overall.csv, and summary.json.

    All numbers are repr-formatted so reruns are byte-identical."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    path = out / "traces.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["task", "optimizer", "lr", "seed", "epoch", "test_error"])
        for r in report.cells:
            for epoch, err in enumerate(r.trace.errors, start=1):
                w.writerow(
                    [r.task, r.optimizer, repr(r.lr), r.seed, epoch, repr(float(err))]
                )
    paths.append(str(path))

    path = out / "summary.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["task", "optimizer", "selected_lr", "e_min_mean", "e_min_std", "A_i", "dA_i"]
        )
        for s in report.summaries:
            w.writerow(
                [
                    s.task,
                    s.optimizer,
                    repr(s.selected_lr),
                    repr(s.e_min_mean),
                    repr(s.e_min_std),
                    repr(s.accuracy),
                    repr(s.accuracy_err),
                ]
            )
    paths.append(str(path))

    path = out / "overall.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["optimizer", "A_bar", "dA_bar"])
        for opt, a, da in report.overall:
            w.writerow([opt, repr(a), repr(da)])
    paths.append(str(path))

    path = out / "summary.json"
    doc = {
        "config": report.config,
        "penalties": report.penalties,
        "summary": [asdict(s) for s in report.summaries],
        "overall": [
            {"optimizer": opt, "A_bar": a, "dA_bar": da}
            for opt, a, da in report.overall
        ],
        "regime_warnings": report.regime_warnings,
    }
    with open(path, "w", newline="") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(str(path))
    return paths
