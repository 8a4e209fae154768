"""Shared step-optimizer plumbing: validation and state snapshots."""

from __future__ import annotations

import numpy as np

from ..errors import NumericFailure
from ..params import GroupLayout, ParamStore
from .kernels import all_finite

SNAPSHOT_HEADER = "optbench-optimizer-state v1"


class StepOptimizer:
    """Base for all optimizers: owns per-weight state sized to a layout.

    Subclasses set ``algorithm`` and implement ``_apply(w, grad)`` which
    mutates ``w`` in place and fills ``self._delta``.  State arrays that
    should survive a checkpoint are listed in ``_state_vectors``.
    """

    algorithm: str = ""

    def __init__(self, layout: GroupLayout):
        self.layout = layout
        self.n = layout.total
        self.tau = 0
        self._delta = np.zeros(self.n, dtype=np.float64)

    def _state_vectors(self) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def _apply(self, w: np.ndarray, grad: np.ndarray) -> None:
        raise NotImplementedError

    @property
    def maximize(self) -> bool:
        return getattr(self.hyper, "maximize", False)

    def _check_grad(self, grad) -> np.ndarray:
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != (self.n,):
            raise ValueError(
                f"gradient length {grad.shape} does not match {self.n} weights"
            )
        if not all_finite(grad):
            raise NumericFailure("non-finite gradient passed to optimizer")
        return grad

    def step(self, params: ParamStore, grad: np.ndarray) -> np.ndarray:
        """Advance one update; returns the applied weight delta."""
        grad = self._check_grad(grad)
        if self.maximize:
            grad = -grad
        self.tau += 1
        self._apply(params.values, grad)
        return self._delta

    # -- text snapshot (checkpoint/restart) --------------------------------

    def dump_state(self) -> str:
        """Plain-text state: one line per field as `name count values...`.

        Floats are written with repr so the round trip is exact; boolean
        masks are written as 0/1.
        """
        lines = [SNAPSHOT_HEADER, f"algorithm 1 {self.algorithm}", f"tau 1 {self.tau}"]
        for name, vec in self._state_vectors().items():
            if vec.dtype == np.bool_:
                vals = " ".join("1" if v else "0" for v in vec)
            else:
                vals = " ".join(repr(float(v)) for v in vec)
            lines.append(f"{name} {vec.size} {vals}")
        return "\n".join(lines) + "\n"

    def load_state(self, text: str) -> None:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != SNAPSHOT_HEADER:
            raise ValueError("not an optimizer state snapshot")
        fields: dict[str, list[str]] = {}
        for ln in lines[1:]:
            parts = ln.split()
            name, count, vals = parts[0], int(parts[1]), parts[2:]
            if len(vals) != count:
                raise ValueError(f"field {name!r}: expected {count} values")
            fields[name] = vals
        if fields.pop("algorithm") != [self.algorithm]:
            raise ValueError("snapshot is for a different algorithm")
        self.tau = int(fields.pop("tau")[0])
        vectors = self._state_vectors()
        if set(fields) != set(vectors):
            raise ValueError(
                f"snapshot fields {sorted(fields)} do not match {sorted(vectors)}"
            )
        for name, vals in fields.items():
            vec = vectors[name]
            if len(vals) != vec.size:
                raise ValueError(f"field {name!r}: length mismatch")
            if vec.dtype == np.bool_:
                vec[:] = [v == "1" for v in vals]
            else:
                vec[:] = [float(v) for v in vals]
