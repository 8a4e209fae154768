"""The nine classic first-order baselines behind the same step API.

Update rules follow the common framework conventions: momentum buffers
start from the raw first gradient, RMSprop/AdaDelta skip bias
correction, AdaMax tracks the infinity norm, RPROP backtracks by zeroing
the stored gradient on sign reversal.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ..errors import ConfigError
from ..params import GroupLayout
from . import kernels
from .base import StepOptimizer

BASELINE_ALGORITHMS = (
    "sgd",
    "momentum",
    "nag",
    "adam",
    "adamax",
    "rmsprop",
    "adagrad",
    "adadelta",
    "rprop",
)

DECAY_MODES = ("none", "coupled", "decoupled")

# per-algorithm defaults applied on top of the field defaults below
_ALGO_DEFAULTS: dict[str, dict] = {
    "sgd": {},
    "momentum": {"mu": 0.9},
    "nag": {"mu": 0.9},
    "adam": {"beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8},
    "adamax": {"beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8},
    "rmsprop": {"beta2": 0.99, "epsilon": 1e-8},
    "adagrad": {"epsilon": 1e-10},
    "adadelta": {"beta2": 0.9, "epsilon": 1e-6},
    "rprop": {
        "eta_minus": 0.5,
        "eta_plus": 1.2,
        "s_min": 1e-6,
        "s_max": 1.0,
        "s0": 1e-3,
    },
}


@dataclass
class BaselineHyper:
    algorithm: str
    gamma: float = 1e-3
    mu: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    eta_minus: float = 0.5
    eta_plus: float = 1.2
    s_min: float = 1e-6
    s_max: float = 1.0
    s0: float = 1e-3
    weight_decay: float = 0.0
    decay_mode: str = "none"
    maximize: bool = False

    def __post_init__(self):
        if self.algorithm not in BASELINE_ALGORITHMS:
            raise ConfigError(f"unknown baseline algorithm {self.algorithm!r}")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ValueError("beta1/beta2 must be in [0, 1)")
        if not 0.0 < self.eta_minus <= 1.0 or self.eta_plus < 1.0:
            raise ValueError("need eta_minus in (0, 1] and eta_plus >= 1")
        if not 0.0 < self.s_min <= self.s_max:
            raise ValueError("need 0 < s_min <= s_max")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.decay_mode not in DECAY_MODES:
            raise ConfigError(f"unknown decay_mode {self.decay_mode!r}")
        if self.decay_mode == "decoupled" and self.algorithm == "rprop":
            raise ConfigError("decoupled weight decay needs a learning rate; "
                              "rprop supports only coupled")
        self.s0 = min(max(self.s0, self.s_min), self.s_max)

    @classmethod
    def with_defaults(cls, algorithm: str, **overrides) -> "BaselineHyper":
        kwargs = dict(_ALGO_DEFAULTS.get(algorithm, {}))
        known = {f.name for f in fields(cls)} - {"algorithm"}
        for key, value in overrides.items():
            if key not in known:
                raise ConfigError(
                    f"unknown hyperparameter {key!r} for {algorithm}"
                )
            kwargs[key] = value
        return cls(algorithm=algorithm, **kwargs)


class BaselineOptimizer(StepOptimizer):
    """One class per algorithm below; this base adds the weight decay
    modes shared by all of them (coupled adds d*w to the gradient before
    the moments, decoupled subtracts d*gamma*w from the weights after
    the update, both using the pre-update weights)."""

    def __init__(self, layout: GroupLayout, hyper: BaselineHyper):
        super().__init__(layout)
        if hyper.algorithm != self.algorithm:
            raise ValueError(f"hyper is for {hyper.algorithm!r}, not {self.algorithm!r}")
        self.hyper = hyper

    def step(self, params, grad):
        hyp = self.hyper
        if hyp.decay_mode == "none" or hyp.weight_decay == 0.0:
            return super().step(params, grad)
        grad = self._check_grad(grad)
        if hyp.decay_mode == "coupled":
            if self.maximize:
                # sign inversion first, then the decay term joins the gradient
                grad = -grad + hyp.weight_decay * params.values
                return self._step_no_flip(params, grad)
            return super().step(params, grad + hyp.weight_decay * params.values)
        # decoupled
        dec = (hyp.weight_decay * hyp.gamma) * params.values
        delta = super().step(params, grad)
        params.values -= dec
        delta -= dec
        return delta

    def _step_no_flip(self, params, grad):
        flip, self.hyper.maximize = self.hyper.maximize, False
        try:
            return super().step(params, grad)
        finally:
            self.hyper.maximize = flip


class SgdOptimizer(BaselineOptimizer):
    algorithm = "sgd"

    def _state_vectors(self):
        return {}

    def _apply(self, w, grad):
        kernels.sgd_step(w, grad, self._delta, self.hyper.gamma)


class MomentumOptimizer(BaselineOptimizer):
    algorithm = "momentum"

    def __init__(self, layout, hyper):
        super().__init__(layout, hyper)
        self.m = np.zeros(self.n)

    def _state_vectors(self):
        return {"m": self.m}

    def _apply(self, w, grad):
        kernels.momentum_step(
            w, grad, self.m, self._delta, self.hyper.gamma, self.hyper.mu,
            self.tau == 1,
        )


class NagOptimizer(MomentumOptimizer):
    algorithm = "nag"

    def _apply(self, w, grad):
        kernels.nag_step(
            w, grad, self.m, self._delta, self.hyper.gamma, self.hyper.mu,
            self.tau == 1,
        )


class AdamOptimizer(BaselineOptimizer):
    algorithm = "adam"

    def __init__(self, layout, hyper):
        super().__init__(layout, hyper)
        self.m = np.zeros(self.n)
        self.h = np.zeros(self.n)
        self.last_u = np.zeros(self.n)

    def _state_vectors(self):
        return {"m": self.m, "h": self.h}

    def _apply(self, w, grad):
        hyp = self.hyper
        bc1 = 1.0 - hyp.beta1**self.tau
        bc2 = 1.0 - hyp.beta2**self.tau
        kernels.adam_step(
            w, grad, self.m, self.h, self._delta, self.last_u,
            hyp.gamma, hyp.beta1, hyp.beta2, hyp.epsilon, bc1, bc2,
        )


class AdamaxOptimizer(BaselineOptimizer):
    algorithm = "adamax"

    def __init__(self, layout, hyper):
        super().__init__(layout, hyper)
        self.m = np.zeros(self.n)
        self.k = np.zeros(self.n)

    def _state_vectors(self):
        return {"m": self.m, "k": self.k}

    def _apply(self, w, grad):
        hyp = self.hyper
        bc1 = 1.0 - hyp.beta1**self.tau
        kernels.adamax_step(
            w, grad, self.m, self.k, self._delta,
            hyp.gamma, hyp.beta1, hyp.beta2, hyp.epsilon, bc1,
        )


class RmspropOptimizer(BaselineOptimizer):
    algorithm = "rmsprop"

    def __init__(self, layout, hyper):
        super().__init__(layout, hyper)
        self.h = np.zeros(self.n)

    def _state_vectors(self):
        return {"h": self.h}

    def _apply(self, w, grad):
        hyp = self.hyper
        kernels.rmsprop_step(
            w, grad, self.h, self._delta, hyp.gamma, hyp.beta2, hyp.epsilon
        )


class AdagradOptimizer(BaselineOptimizer):
    algorithm = "adagrad"

    def __init__(self, layout, hyper):
        super().__init__(layout, hyper)
        self.b = np.zeros(self.n)

    def _state_vectors(self):
        return {"b": self.b}

    def _apply(self, w, grad):
        kernels.adagrad_step(
            w, grad, self.b, self._delta, self.hyper.gamma, self.hyper.epsilon
        )


class AdadeltaOptimizer(BaselineOptimizer):
    algorithm = "adadelta"

    def __init__(self, layout, hyper):
        super().__init__(layout, hyper)
        self.h = np.zeros(self.n)
        self.l = np.zeros(self.n)

    def _state_vectors(self):
        return {"h": self.h, "l": self.l}

    def _apply(self, w, grad):
        hyp = self.hyper
        kernels.adadelta_step(
            w, grad, self.h, self.l, self._delta, hyp.gamma, hyp.beta2, hyp.epsilon
        )


class RpropOptimizer(BaselineOptimizer):
    algorithm = "rprop"

    def __init__(self, layout, hyper):
        super().__init__(layout, hyper)
        self.g_prev = np.zeros(self.n)
        self.s = np.full(self.n, hyper.s0)

    def _state_vectors(self):
        return {"g_prev": self.g_prev, "s": self.s}

    def _apply(self, w, grad):
        hyp = self.hyper
        kernels.rprop_step(
            w, grad, self.g_prev, self.s, self._delta,
            hyp.eta_minus, hyp.eta_plus, hyp.s_min, hyp.s_max,
        )
