"""Desk-scale optimization problems covering the three batch regimes.

Two analytic objectives (quadratic bowl, Rosenbrock valley) and three
supervised tasks (full-batch sine regression, 10%-batch sine regression,
mini-batch Gaussian-cluster classification).  Regime is determined by
the batch fraction and selects the recommended maximal step size.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .nets import Batch, MlpSpec, forward, init_params
from .params import GroupLayout, ParamStore
from .rng import Prng

REGIMES = ("mini_batch", "intermediate", "batch")
ERROR_METRICS = ("loss_value", "rmse", "misclassification_rate")

# regime-dependent recommendation for the maximal step size
RECOMMENDED_S_MAX = {"mini_batch": 1e-3, "intermediate": 1e-2, "batch": 1.0}

# batch fractions up to this bound count as mini-batch learning; the
# reference workloads sit at <=2% (mini-batch) vs >=5% (intermediate)
_MINI_BATCH_BOUND = 0.02
_INTERMEDIATE_BOUND = 0.25


def infer_regime(batch_fraction: float) -> str:
    if batch_fraction >= 1.0:
        return "batch"
    if batch_fraction <= _MINI_BATCH_BOUND:
        return "mini_batch"
    if batch_fraction <= _INTERMEDIATE_BOUND:
        return "intermediate"
    return "batch"


@dataclass(frozen=True)
class QuadraticObjective:
    """L(w) = sum_i c_i (w_i - a_i)^2, minimum 0 at w = a."""

    curvatures: np.ndarray
    centers: np.ndarray

    def loss(self, w: np.ndarray) -> float:
        diff = w - self.centers
        return float(np.sum(self.curvatures * diff * diff))

    def grad(self, w: np.ndarray) -> np.ndarray:
        return 2.0 * self.curvatures * (w - self.centers)


@dataclass(frozen=True)
class RosenbrockObjective:
    """L(w1, w2) = (1 - w1)^2 + 100 (w2 - w1^2)^2, minimum 0 at (1, 1)."""

    def loss(self, w: np.ndarray) -> float:
        w1, w2 = w
        return float((1.0 - w1) ** 2 + 100.0 * (w2 - w1 * w1) ** 2)

    def grad(self, w: np.ndarray) -> np.ndarray:
        w1, w2 = w
        inner = w2 - w1 * w1
        return np.array(
            [-2.0 * (1.0 - w1) - 400.0 * w1 * inner, 200.0 * inner]
        )


@dataclass
class TaskInstance:
    name: str
    kind: str  # "analytic" | "supervised"
    regime: str
    error_metric: str
    epochs: int
    batch_size: int | str = "full"
    model_spec: MlpSpec | None = None
    train_set: Batch | None = None
    test_set: Batch | None = None
    objective: object | None = None
    start: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("analytic", "supervised"):
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.error_metric not in ERROR_METRICS:
            raise ValueError(f"unknown error metric {self.error_metric!r}")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.kind == "analytic":
            if self.objective is None or self.start is None:
                raise ValueError("analytic task needs objective and start")
            return
        if self.model_spec is None or self.train_set is None or self.test_set is None:
            raise ValueError("supervised task needs model spec and datasets")
        n = len(self.train_set)
        b = self.resolved_batch_size()
        if not 1 <= b <= n:
            raise ValueError(f"batch size {b} not in [1, {n}]")
        inferred = infer_regime(b / n)
        if inferred != self.regime:
            raise ValueError(
                f"regime {self.regime!r} inconsistent with batch fraction "
                f"{b / n:.4f} (implies {inferred!r})"
            )

    def resolved_batch_size(self) -> int:
        if self.kind == "analytic":
            return 1
        if self.batch_size == "full":
            return len(self.train_set)
        return int(self.batch_size)

    def batches_per_epoch(self) -> int:
        if self.kind == "analytic":
            return 1
        return math.ceil(len(self.train_set) / self.resolved_batch_size())

    def layout(self) -> GroupLayout:
        if self.kind == "analytic":
            return GroupLayout([("w", self.start.size)])
        return self.model_spec.layout()

    def initial_params(self, rng: Prng) -> ParamStore:
        if self.kind == "analytic":
            return ParamStore(self.start.copy(), self.layout())
        return init_params(self.model_spec, rng)


def next_batch(task: TaskInstance, epoch_rng: Prng, position: int) -> Batch:
    """Batch at `position` in the epoch's shuffled partition.

    The permutation is drawn from a copy of epoch_rng, so the same rng
    state and position always name the same batch and epoch_rng itself
    is never advanced.  The final short batch is kept.
    """
    if task.kind != "supervised":
        raise ValueError("analytic tasks have no batches")
    n = len(task.train_set)
    b = task.resolved_batch_size()
    if not 0 <= position < task.batches_per_epoch():
        raise ValueError(f"position {position} out of range")
    if b == n:
        return task.train_set
    perm = Prng(epoch_rng.state).shuffled_indices(n)
    return task.train_set.take(perm[position * b : (position + 1) * b])


def evaluate_test_error(task: TaskInstance, params: ParamStore) -> float:
    """Task error metric over the full test set (analytic: current loss)."""
    if task.kind == "analytic":
        return task.objective.loss(params.values)
    out = forward(task.model_spec, params, task.test_set.inputs)
    if task.error_metric == "rmse":
        diff = out - task.test_set.targets
        return float(np.sqrt(np.mean(diff * diff)))
    pred = np.argmax(out, axis=1)
    return float(np.mean(pred != task.test_set.targets))


def export_dataset_csv(task: TaskInstance, path) -> None:
    """Write train+test rows as feature columns plus target and split."""
    if task.kind != "supervised":
        raise ValueError("only supervised tasks have datasets")
    width = task.train_set.inputs.shape[1]
    classes = task.train_set.targets.ndim == 1
    if classes:
        target_cols = ["target"]
    elif task.train_set.targets.shape[1] == 1:
        target_cols = ["target"]
    else:
        target_cols = [f"target{i}" for i in range(task.train_set.targets.shape[1])]
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{i}" for i in range(width)] + target_cols + ["split"])
        for split, batch in (("train", task.train_set), ("test", task.test_set)):
            for i in range(len(batch)):
                if classes:
                    target = [str(int(batch.targets[i]))]
                else:
                    target = [repr(float(v)) for v in batch.targets[i]]
                writer.writerow(
                    [repr(float(v)) for v in batch.inputs[i]] + target + [split]
                )


# -- task factories ----------------------------------------------------------


def make_quadratic(dim: int, rng: Prng, epochs: int = 500) -> TaskInstance:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    curv = np.array([rng.uniform(0.5, 5.0) for _ in range(dim)])
    centers = np.array([rng.uniform(-1.0, 1.0) for _ in range(dim)])
    start = np.array([rng.uniform(-2.0, 2.0) for _ in range(dim)])
    return TaskInstance(
        name="quadratic",
        kind="analytic",
        regime="batch",
        error_metric="loss_value",
        epochs=epochs,
        objective=QuadraticObjective(curv, centers),
        start=start,
    )


def make_rosenbrock(epochs: int = 500) -> TaskInstance:
    return TaskInstance(
        name="rosenbrock",
        kind="analytic",
        regime="batch",
        error_metric="loss_value",
        epochs=epochs,
        objective=RosenbrockObjective(),
        start=np.array([-1.2, 1.0]),
    )


def _sine_batch(rng: Prng, size: int, noise_sigma: float) -> Batch:
    x = np.array([rng.uniform(-math.pi, math.pi) for _ in range(size)])
    t = np.sin(x)
    if noise_sigma > 0.0:
        t = t + noise_sigma * np.array([rng.normal() for _ in range(size)])
    return Batch(x.reshape(-1, 1), t.reshape(-1, 1))


def make_sine_regression(
    rng: Prng,
    train_size: int = 100,
    test_size: int = 100,
    batch_size: int | str = "full",
    noise_sigma: float = 0.0,
    epochs: int = 2000,
    name: str = "sine_batch",
) -> TaskInstance:
    train = _sine_batch(rng, train_size, noise_sigma)
    test = _sine_batch(rng, test_size, noise_sigma)
    b = train_size if batch_size == "full" else int(batch_size)
    return TaskInstance(
        name=name,
        kind="supervised",
        regime=infer_regime(b / train_size),
        error_metric="rmse",
        epochs=epochs,
        batch_size=batch_size,
        model_spec=MlpSpec((1, 16, 16, 1), "tanh", "linear", "mse"),
        train_set=train,
        test_set=test,
    )


def make_intermediate_regression(rng: Prng, epochs: int = 200) -> TaskInstance:
    """Sine regression at a 10% batch fraction."""
    return make_sine_regression(
        rng,
        train_size=200,
        test_size=100,
        batch_size=20,
        epochs=epochs,
        name="sine_intermediate",
    )


_CLUSTER_MEANS = ((1.5, 1.5), (-1.5, 1.5), (-1.5, -1.5), (1.5, -1.5))
_CLUSTER_SIGMA = 0.5


def _cluster_batch(rng: Prng, size: int) -> Batch:
    xs = np.empty((size, 2))
    labels = np.empty(size, dtype=np.int64)
    for i in range(size):
        k = i % len(_CLUSTER_MEANS)
        mx, my = _CLUSTER_MEANS[k]
        xs[i, 0] = mx + _CLUSTER_SIGMA * rng.normal()
        xs[i, 1] = my + _CLUSTER_SIGMA * rng.normal()
        labels[i] = k
    return Batch(xs, labels)


def make_cluster_classification(rng: Prng, epochs: int = 25) -> TaskInstance:
    """Four well-separated 2-D Gaussian clusters, mini-batch regime.

    The epoch budget is short on purpose: the task saturates quickly,
    and past ~40 epochs the per-epoch minimum hides the instability of
    oversized steps, washing out the regime signal the benchmark is
    meant to expose.
    """
    train = _cluster_batch(rng, 512)
    test = _cluster_batch(rng, 512)
    return TaskInstance(
        name="clusters",
        kind="supervised",
        regime="mini_batch",
        error_metric="misclassification_rate",
        epochs=epochs,
        batch_size=8,
        model_spec=MlpSpec((2, 32, 4), "relu", "softmax", "cross_entropy"),
        train_set=train,
        test_set=test,
    )


BUILTIN_TASKS = {
    "quadratic": lambda rng, **kw: make_quadratic(kw.pop("dim", 10), rng, **kw),
    "rosenbrock": lambda rng, **kw: make_rosenbrock(**kw),
    "sine_batch": lambda rng, **kw: make_sine_regression(rng, **kw),
    "sine_intermediate": lambda rng, **kw: make_intermediate_regression(rng, **kw),
    "clusters": lambda rng, **kw: make_cluster_classification(rng, **kw),
}

BUILTIN_TASK_REGIMES = {
    "quadratic": "batch",
    "rosenbrock": "batch",
    "sine_batch": "batch",
    "sine_intermediate": "intermediate",
    "clusters": "mini_batch",
}
