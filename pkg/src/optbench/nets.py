"""Small fully connected networks with analytic backpropagation.

Forward/backward are plain numpy; a central-finite-difference gradient
serves as the independent oracle for the analytic gradients.  Weight
matrices use the (fan_in, fan_out) convention, activations row-wise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericFailure
from .params import GroupLayout, ParamStore
from .rng import Prng

HIDDEN_ACTIVATIONS = ("tanh", "relu")
OUTPUT_HEADS = ("linear", "softmax")
LOSS_KINDS = ("mse", "cross_entropy")


@dataclass(frozen=True)
class MlpSpec:
    layer_sizes: tuple[int, ...]
    hidden_activation: str = "tanh"
    output_head: str = "linear"
    loss_kind: str = "mse"

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least input and output layer sizes")
        if any(s <= 0 for s in self.layer_sizes):
            raise ValueError("layer sizes must be positive")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ValueError(f"unknown activation {self.hidden_activation!r}")
        if self.output_head not in OUTPUT_HEADS:
            raise ValueError(f"unknown output head {self.output_head!r}")
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss {self.loss_kind!r}")
        if (self.output_head == "softmax") != (self.loss_kind == "cross_entropy"):
            raise ValueError("softmax pairs with cross_entropy, linear with mse")

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    def layout(self) -> GroupLayout:
        groups = []
        for l in range(self.n_layers):
            fan_in, fan_out = self.layer_sizes[l], self.layer_sizes[l + 1]
            groups.append((f"W{l + 1}", fan_in * fan_out))
            groups.append((f"b{l + 1}", fan_out))
        return GroupLayout(groups)


@dataclass
class Batch:
    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        if self.inputs.ndim != 2:
            raise ValueError("inputs must be a 2-D matrix (rows = samples)")
        self.targets = np.asarray(self.targets)
        if self.targets.dtype.kind in "iu":
            if self.targets.ndim != 1:
                raise ValueError("class targets must be a 1-D index vector")
        else:
            self.targets = self.targets.astype(np.float64)
            if self.targets.ndim != 2:
                raise ValueError("regression targets must be a 2-D matrix")
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise ValueError("inputs and targets row counts differ")

    def __len__(self):
        return self.inputs.shape[0]

    def take(self, indices) -> "Batch":
        return Batch(self.inputs[indices], self.targets[indices])


def init_params(spec: MlpSpec, rng: Prng) -> ParamStore:
    """Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] weights, zero biases.

    Weights are drawn one at a time in layout order so that the result
    depends only on the seed, not on array library internals.
    """
    layout = spec.layout()
    values = np.zeros(layout.total, dtype=np.float64)
    for l in range(spec.n_layers):
        fan_in = spec.layer_sizes[l]
        bound = 1.0 / np.sqrt(fan_in)
        w = layout.group(f"W{l + 1}")
        for i in range(w.length):
            values[w.offset + i] = rng.uniform(-bound, bound)
    return ParamStore(values, layout)


def _weights(spec: MlpSpec, params: ParamStore, layer: int):
    fan_in, fan_out = spec.layer_sizes[layer], spec.layer_sizes[layer + 1]
    W = params.view(f"W{layer + 1}").reshape(fan_in, fan_out)
    b = params.view(f"b{layer + 1}")
    return W, b


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _forward_cached(spec: MlpSpec, params: ParamStore, inputs: np.ndarray):
    """Returns (activations per layer, output). Raises on non-finite."""
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.layer_sizes[0]:
        raise ValueError(
            f"inputs must have width {spec.layer_sizes[0]}, got shape {x.shape}"
        )
    acts = [x]
    a = x
    with np.errstate(over="ignore", invalid="ignore"):
        for l in range(spec.n_layers):
            W, b = _weights(spec, params, l)
            z = a @ W + b
            if not np.all(np.isfinite(z)):
                raise NumericFailure("non-finite pre-activation", l + 1)
            if l < spec.n_layers - 1:
                a = np.tanh(z) if spec.hidden_activation == "tanh" else np.maximum(z, 0.0)
            else:
                a = _softmax(z) if spec.output_head == "softmax" else z
            acts.append(a)
    return acts, a


def forward(spec: MlpSpec, params: ParamStore, inputs: np.ndarray) -> np.ndarray:
    return _forward_cached(spec, params, inputs)[1]


def loss_and_grad(
    spec: MlpSpec, params: ParamStore, batch: Batch
) -> tuple[float, np.ndarray]:
    """Mean loss over the batch and its gradient in layout order.

    MSE averages the squared error over every (sample, output) entry;
    cross-entropy averages the negative log-likelihood over samples.
    """
    if len(batch) == 0:
        raise ValueError("batch must be nonempty")
    acts, out = _forward_cached(spec, params, batch.inputs)
    n = out.shape[0]

    if spec.loss_kind == "mse":
        diff = out - batch.targets
        loss = float(np.mean(diff * diff))
        # linear head: dL/dz_last directly
        delta = (2.0 / diff.size) * diff
    else:
        probs = out
        picked = probs[np.arange(n), batch.targets]
        # probabilities are positive by construction of softmax
        loss = float(-np.mean(np.log(picked)))
        delta = probs.copy()
        delta[np.arange(n), batch.targets] -= 1.0
        delta /= n
    if not np.isfinite(loss):
        raise NumericFailure("non-finite loss", spec.n_layers)

    grad = np.empty(params.layout.total, dtype=np.float64)
    grad_store = ParamStore(grad, params.layout)
    for l in range(spec.n_layers - 1, -1, -1):
        a_prev = acts[l]
        gW = grad_store.view(f"W{l + 1}")
        gW[:] = (a_prev.T @ delta).ravel()
        grad_store.view(f"b{l + 1}")[:] = delta.sum(axis=0)
        if l > 0:
            W, _ = _weights(spec, params, l)
            da = delta @ W.T
            a_here = acts[l]
            if spec.hidden_activation == "tanh":
                delta = da * (1.0 - a_here * a_here)
            else:
                delta = da * (a_here > 0.0)
    return loss, grad


def finite_diff_grad(
    spec: MlpSpec, params: ParamStore, batch: Batch, h: float = 1e-6
) -> np.ndarray:
    """Central-difference gradient (L(w+h) - L(w-h)) / (2h) per coordinate.

    The two loss evaluations run in extended precision where the
    platform has one, so the difference is not swamped by rounding at
    small h.  Works on a copy; params are untouched.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    dtype = (
        np.longdouble
        if np.finfo(np.longdouble).eps < np.finfo(np.float64).eps
        else np.float64
    )
    values = params.values.astype(dtype)
    inputs = batch.inputs.astype(dtype)
    targets = batch.targets if batch.targets.dtype.kind in "iu" else batch.targets.astype(dtype)
    layout = params.layout
    hh = dtype(h)
    grad = np.empty(values.size, dtype=np.float64)
    for i in range(values.size):
        orig = values[i]
        values[i] = orig + hh
        lp = _loss_flat(spec, layout, values, inputs, targets)
        values[i] = orig - hh
        lm = _loss_flat(spec, layout, values, inputs, targets)
        values[i] = orig
        grad[i] = float((lp - lm) / (dtype(2.0) * hh))
    return grad


def _loss_flat(spec, layout, values, inputs, targets):
    """Loss from a flat coefficient vector, in the vector's dtype."""
    a = inputs
    for l in range(spec.n_layers):
        fan_in, fan_out = spec.layer_sizes[l], spec.layer_sizes[l + 1]
        g = layout.group(f"W{l + 1}")
        W = values[g.offset : g.offset + g.length].reshape(fan_in, fan_out)
        g = layout.group(f"b{l + 1}")
        b = values[g.offset : g.offset + g.length]
        z = a @ W + b
        if l < spec.n_layers - 1:
            a = np.tanh(z) if spec.hidden_activation == "tanh" else np.maximum(z, 0)
        elif spec.output_head == "softmax":
            shifted = z - z.max(axis=1, keepdims=True)
            e = np.exp(shifted)
            a = e / e.sum(axis=1, keepdims=True)
        else:
            a = z
    if spec.loss_kind == "mse":
        diff = a - targets
        return np.mean(diff * diff)
    picked = a[np.arange(a.shape[0]), targets]
    return -np.mean(np.log(picked))


def max_relative_gradient_deviation(
    spec: MlpSpec, params: ParamStore, batch: Batch, h: float = 1e-6
) -> tuple[float, int]:
    """Worst relative analytic-vs-central-difference deviation.

    Returns (max_i |g_a - g_fd| / max(1e-8, |g_a| + |g_fd|), argmax i).
    """
    _, ga = loss_and_grad(spec, params, batch)
    gf = finite_diff_grad(spec, params, batch, h)
    dev = np.abs(ga - gf) / np.maximum(1e-8, np.abs(ga) + np.abs(gf))
    worst = int(np.argmax(dev))
    return float(dev[worst]), worst


def random_check_draw(spec: MlpSpec, rng: Prng, batch_rows: int = 5):
    """Random (params, batch) pair for gradient checking.

    ReLU networks are redrawn until no pre-activation sits within 1e-4
    of the kink, where the central difference is not meaningful.
    """
    for _ in range(200):
        params = init_params(spec, rng)
        inputs = np.array(
            [[rng.normal() for _ in range(spec.layer_sizes[0])] for _ in range(batch_rows)]
        )
        if spec.loss_kind == "mse":
            # modest target scale keeps the loss offset small, so the
            # central difference is not dominated by cancellation error
            targets = np.array(
                [[0.3 * rng.normal() for _ in range(spec.layer_sizes[-1])] for _ in range(batch_rows)]
            )
        else:
            targets = np.array(
                [rng.below(spec.layer_sizes[-1]) for _ in range(batch_rows)],
                dtype=np.int64,
            )
        batch = Batch(inputs, targets)
        if spec.hidden_activation != "relu":
            return params, batch
        acts, _ = _forward_cached(spec, params, inputs)
        near_kink = False
        a = inputs
        for l in range(spec.n_layers - 1):
            W, b = _weights(spec, params, l)
            z = a @ W + b
            if np.any(np.abs(z) < 1e-4):
                near_kink = True
                break
            a = acts[l + 1]
        if not near_kink:
            return params, batch
    raise RuntimeError("could not draw a ReLU check point away from kinks")


def run_gradient_check(
    spec: MlpSpec,
    rng: Prng,
    draws: int = 20,
    h: float = 1e-6,
    corrupt: bool = False,
) -> tuple[float, int]:
    """Worst deviation over `draws` random (params, batch) pairs.

    With corrupt=True one analytic gradient entry is perturbed per draw
    as a negative control, so the check must fail.
    """
    worst_dev, worst_idx = 0.0, 0
    for _ in range(draws):
        params, batch = random_check_draw(spec, rng)
        if corrupt:
            _, ga = loss_and_grad(spec, params, batch)
            gf = finite_diff_grad(spec, params, batch, h)
            ga = ga.copy()
            ga[0] += 1.0e-3
            dev = np.abs(ga - gf) / np.maximum(1e-8, np.abs(ga) + np.abs(gf))
            idx = int(np.argmax(dev))
            d = float(dev[idx])
        else:
            d, idx = max_relative_gradient_deviation(spec, params, batch, h)
        if d > worst_dev:
            worst_dev, worst_idx = d, idx
    return worst_dev, worst_idx
