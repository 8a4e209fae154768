"""Optimizer construction and the algorithm registry."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from ..errors import ConfigError
from ..params import GroupLayout
from .base import StepOptimizer
from .baselines import (
    BASELINE_ALGORITHMS,
    AdadeltaOptimizer,
    AdagradOptimizer,
    AdamaxOptimizer,
    AdamOptimizer,
    BaselineHyper,
    BaselineOptimizer,
    MomentumOptimizer,
    NagOptimizer,
    RmspropOptimizer,
    RpropOptimizer,
    SgdOptimizer,
)
from .core import CoreHyper, CoreOptimizer, CoreState, beta1_schedule

ALGORITHMS = ("core",) + BASELINE_ALGORITHMS

_BASELINE_CLASSES = {
    "sgd": SgdOptimizer,
    "momentum": MomentumOptimizer,
    "nag": NagOptimizer,
    "adam": AdamOptimizer,
    "adamax": AdamaxOptimizer,
    "rmsprop": RmspropOptimizer,
    "adagrad": AdagradOptimizer,
    "adadelta": AdadeltaOptimizer,
    "rprop": RpropOptimizer,
}

# algorithms whose main step parameter is the maximal step size rather
# than a learning rate
STEP_SIZE_ALGORITHMS = ("core", "rprop")


@dataclass(frozen=True)
class OptimizerSpec:
    """Algorithm tag plus hyperparameter overrides; label names the
    column in benchmark reports (defaults to the algorithm)."""

    algorithm: str
    overrides: dict = field(default_factory=dict)
    label: str | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; "
                              f"choose from {', '.join(ALGORITHMS)}")

    @property
    def name(self) -> str:
        return self.label or self.algorithm

    def with_step_parameter(self, value: float) -> "OptimizerSpec":
        """Rebind the scanned parameter: s_max for step-size algorithms
        (s0 stays put and clamps), gamma for the rest."""
        key = "s_max" if self.algorithm in STEP_SIZE_ALGORITHMS else "gamma"
        merged = dict(self.overrides)
        merged[key] = value
        return OptimizerSpec(self.algorithm, merged, self.label)


def make_optimizer(spec: OptimizerSpec, layout: GroupLayout) -> StepOptimizer:
    """Allocate zeroed state sized to the layout and return the stepper."""
    if spec.algorithm == "core":
        known = {f.name for f in fields(CoreHyper)}
        unknown = set(spec.overrides) - known
        if unknown:
            raise ConfigError(f"unknown hyperparameter {sorted(unknown)[0]!r} for core")
        return CoreOptimizer(layout, CoreHyper(**spec.overrides))
    hyper = BaselineHyper.with_defaults(spec.algorithm, **spec.overrides)
    return _BASELINE_CLASSES[spec.algorithm](layout, hyper)


def default_hyper_table() -> dict[str, dict]:
    """Default hyperparameters per algorithm, for listing and audit."""
    out: dict[str, dict] = {}
    core = CoreHyper()
    out["core"] = {f.name: getattr(core, f.name) for f in fields(core)}
    for algo in BASELINE_ALGORITHMS:
        hyper = BaselineHyper.with_defaults(algo)
        relevant = {
            "sgd": ("gamma",),
            "momentum": ("gamma", "mu"),
            "nag": ("gamma", "mu"),
            "adam": ("gamma", "beta1", "beta2", "epsilon"),
            "adamax": ("gamma", "beta1", "beta2", "epsilon"),
            "rmsprop": ("gamma", "beta2", "epsilon"),
            "adagrad": ("gamma", "epsilon"),
            "adadelta": ("gamma", "beta2", "epsilon"),
            "rprop": ("eta_minus", "eta_plus", "s_min", "s_max", "s0"),
        }[algo]
        row = {name: getattr(hyper, name) for name in relevant}
        row["weight_decay"] = hyper.weight_decay
        out[algo] = row
    return out


__all__ = [
    "ALGORITHMS",
    "STEP_SIZE_ALGORITHMS",
    "BaselineHyper",
    "BaselineOptimizer",
    "CoreHyper",
    "CoreOptimizer",
    "CoreState",
    "OptimizerSpec",
    "StepOptimizer",
    "beta1_schedule",
    "default_hyper_table",
    "make_optimizer",
]
