"""Scikit-learn style estimators wrapping the networks and optimizers.

MlpRegressor and MlpClassifier expose the training loop through the
familiar fit/predict/get_params surface so the optimizers compose with
pipelines, grid search, and cross-validation.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .nets import Batch, MlpSpec, forward, init_params, loss_and_grad
from .optimizers import OptimizerSpec, make_optimizer
from .rng import Prng


class _MlpBase(BaseEstimator):
    def __init__(
        self,
        hidden_layer_sizes=(16, 16),
        activation="tanh",
        optimizer="core",
        optimizer_params=None,
        epochs=200,
        batch_size=None,
        seed=0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.activation = activation
        self.optimizer = optimizer
        self.optimizer_params = optimizer_params
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed

    def _fit_loop(self, spec: MlpSpec, train: Batch) -> None:
        rng = Prng(self.seed)
        params = init_params(spec, rng)
        opt = make_optimizer(
            OptimizerSpec(self.optimizer, dict(self.optimizer_params or {})),
            spec.layout(),
        )
        n = len(train)
        b = n if self.batch_size is None else int(self.batch_size)
        if not 1 <= b <= n:
            raise ValueError(f"batch_size must be in [1, {n}], got {b}")
        losses = []
        for _ in range(int(self.epochs)):
            if b == n:
                order = np.arange(n)
            else:
                order = np.array(Prng(rng.next_u64()).shuffled_indices(n))
            epoch_loss = 0.0
            for pos in range(0, n, b):
                batch = train.take(order[pos : pos + b])
                loss, grad = loss_and_grad(spec, params, batch)
                opt.step(params, grad)
                epoch_loss += loss * len(batch)
            losses.append(epoch_loss / n)
        self.spec_ = spec
        self.params_ = params
        self.loss_curve_ = losses
        self.n_features_in_ = spec.layer_sizes[0]

    def _forward(self, X) -> np.ndarray:
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return forward(self.spec_, self.params_, X)


class MlpRegressor(_MlpBase, RegressorMixin):
    """Small MLP regressor trained with any of the packaged optimizers."""

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, multi_output=True)
        y2 = y.reshape(-1, 1) if y.ndim == 1 else y
        self._y_was_1d_ = y.ndim == 1
        spec = MlpSpec(
            (X.shape[1], *map(int, self.hidden_layer_sizes), y2.shape[1]),
            self.activation,
            "linear",
            "mse",
        )
        self._fit_loop(spec, Batch(X, y2))
        return self

    def predict(self, X):
        out = self._forward(X)
        return out.ravel() if self._y_was_1d_ else out


class MlpClassifier(_MlpBase, ClassifierMixin):
    """Small MLP softmax classifier trained with the packaged optimizers."""

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise ValueError("need at least two classes")
        spec = MlpSpec(
            (X.shape[1], *map(int, self.hidden_layer_sizes), self.classes_.size),
            self.activation,
            "softmax",
            "cross_entropy",
        )
        self._fit_loop(spec, Batch(X, encoded.astype(np.int64)))
        return self

    def predict_proba(self, X):
        return self._forward(X)

    def predict(self, X):
        return self.classes_[np.argmax(self._forward(X), axis=1)]
