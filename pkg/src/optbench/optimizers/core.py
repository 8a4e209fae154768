"""Continual resilient optimizer.

Combines bias-corrected gradient moving averages with sign-driven
per-weight step sizes, a step-scheduled first-moment decay, importance
score based weight freezing per group, and update-proportional weight
decay.  All state is per weight; groups only scope the freezing quota
and the decay strength.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..params import GroupLayout
from . import kernels
from .base import StepOptimizer


def beta1_schedule(tau: int, beta1_a: float, beta1_b: float, beta1_c: float) -> float:
    """First-moment decay at update counter tau (tau >= 1).

    Starts at beta1_a, relaxes to beta1_b under a Gaussian of width
    beta1_c in (tau - 1).
    """
    if tau < 1:
        raise ValueError("tau starts at 1")
    return beta1_b + (beta1_a - beta1_b) * math.exp(-(((tau - 1) / beta1_c) ** 2))


@dataclass
class CoreHyper:
    """Recommended defaults; s_max is the regime-dependent main knob
    (1e-3 mini-batch, 1e-2 intermediate, 1 batch)."""

    beta1_a: float = 0.7375
    beta1_b: float = 0.8125
    beta1_c: float = 250.0
    beta2: float = 0.99
    epsilon: float = 1e-8
    eta_minus: float = 0.7375
    eta_plus: float = 1.2
    s_min: float = 1e-6
    s_max: float = 1.0
    s0: float = 1e-3
    d: float | dict[str, float] = 0.1
    t_hist: int = 250
    p_frozen: float | dict[str, float] = 0.0
    maximize: bool = False

    def __post_init__(self):
        for name in ("beta1_a", "beta1_b", "beta2"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {v}")
        if self.beta1_c <= 0:
            raise ValueError("beta1_c must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < self.eta_minus <= 1.0:
            raise ValueError("eta_minus must be in (0, 1]")
        if self.eta_plus < 1.0:
            raise ValueError("eta_plus must be >= 1")
        if not 0.0 < self.s_min <= self.s_max:
            raise ValueError("need 0 < s_min <= s_max")
        if self.t_hist < 1:
            raise ValueError("t_hist must be a positive integer")
        # the initial step size is clamped into the admissible band
        self.s0 = min(max(self.s0, self.s_min), self.s_max)
        for v in self._group_values(self.d):
            if not 0.0 <= v < 1.0 / self.s_max:
                raise ValueError(f"d must be in [0, 1/s_max), got {v}")
        for v in self._group_values(self.p_frozen):
            if not 0.0 <= v < 1.0:
                raise ValueError(f"p_frozen must be in [0, 1), got {v}")

    @staticmethod
    def _group_values(v) -> list[float]:
        return list(v.values()) if isinstance(v, dict) else [v]


@dataclass
class CoreState:
    """Per-weight persistent state; frozen_mask mirrors the last P."""

    g: np.ndarray
    h: np.ndarray
    s: np.ndarray
    S: np.ndarray
    g_prev: np.ndarray
    frozen_mask: np.ndarray
    tau: int = 0

    @classmethod
    def zeros(cls, n: int, s0: float) -> "CoreState":
        return cls(
            g=np.zeros(n),
            h=np.zeros(n),
            s=np.full(n, float(s0)),
            S=np.zeros(n),
            g_prev=np.zeros(n),
            frozen_mask=np.zeros(n, dtype=bool),
        )


class CoreOptimizer(StepOptimizer):
    algorithm = "core"

    def __init__(self, layout: GroupLayout, hyper: CoreHyper | None = None):
        super().__init__(layout)
        self.hyper = hyper or CoreHyper()
        self.state = CoreState.zeros(self.n, self.hyper.s0)
        self._d = layout.per_weight(self.hyper.d)
        self._P = np.ones(self.n, dtype=np.float64)
        self.last_u = np.zeros(self.n, dtype=np.float64)
        # groups with a nonzero freezing quota: (offset, length, n_frozen)
        p = self.hyper.p_frozen
        self._freeze_groups = []
        for g in layout:
            frac = p.get(g.name, 0.0) if isinstance(p, dict) else p
            n_frozen = math.floor(frac * g.length)
            if n_frozen > 0:
                self._freeze_groups.append((g.offset, g.length, n_frozen))

    def _state_vectors(self):
        st = self.state
        return {
            "g": st.g,
            "h": st.h,
            "s": st.s,
            "S": st.S,
            "g_prev": st.g_prev,
            "frozen_mask": st.frozen_mask,
        }

    def _update_plasticity(self, tau: int) -> None:
        """Freeze the top-scoring weights per group once past t_hist.

        Ranking uses the importance scores from before the current step;
        ties freeze the lower index first (stable sort).
        """
        self._P.fill(1.0)
        st = self.state
        st.frozen_mask.fill(False)
        if tau <= self.hyper.t_hist:
            return
        for offset, length, n_frozen in self._freeze_groups:
            scores = st.S[offset : offset + length]
            top = np.argsort(-scores, kind="stable")[:n_frozen]
            self._P[offset + top] = 0.0
            st.frozen_mask[offset + top] = True

    def _apply(self, w: np.ndarray, grad: np.ndarray) -> None:
        hyp = self.hyper
        st = self.state
        tau = self.tau
        st.tau = tau
        b1t = beta1_schedule(tau, hyp.beta1_a, hyp.beta1_b, hyp.beta1_c)
        bc1 = 1.0 - b1t**tau
        bc2 = 1.0 - hyp.beta2**tau
        if self._freeze_groups:
            self._update_plasticity(tau)
        kernels.core_step(
            w, grad, st.g, st.h, st.s, st.S, st.g_prev, self._P, self._d,
            self._delta, self.last_u,
            tau, b1t, bc1, bc2, hyp.beta2, hyp.epsilon,
            hyp.eta_minus, hyp.eta_plus, hyp.s_min, hyp.s_max,
            hyp.t_hist, 1.0 / hyp.t_hist,
        )

    def load_state(self, text: str) -> None:
        super().load_state(text)
        self.state.tau = self.tau
