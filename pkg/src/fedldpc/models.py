"""Small classifiers over flat parameter vectors.

Every model exposes ``loss_and_grad(w, X, y) -> (loss, grad)`` with the mean
cross-entropy over the batch, plus ``predict`` and ``init``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rngmod


def _softmax_xent(logits: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    z = logits - logits.max(axis=1, keepdims=True)
    ez = np.exp(z)
    p = ez / ez.sum(axis=1, keepdims=True)
    n = y.shape[0]
    logp = z[np.arange(n), y] - np.log(ez.sum(axis=1))
    dlogits = p
    dlogits[np.arange(n), y] -= 1.0
    return float(-logp.mean()), dlogits / n


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "logistic_regression"
    input_dim: int = 2
    classes: int = 2
    hidden_dim: int = 0

    def __post_init__(self):
        if self.kind not in ("logistic_regression", "mlp_one_hidden"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.input_dim < 1 or self.classes < 2:
            raise ValueError("need input_dim >= 1 and classes >= 2")
        if self.kind == "mlp_one_hidden" and self.hidden_dim < 1:
            raise ValueError("mlp_one_hidden needs hidden_dim >= 1")

    @property
    def num_params(self) -> int:
        d, c, h = self.input_dim, self.classes, self.hidden_dim
        if self.kind == "logistic_regression":
            return d * c + c
        return d * h + h + h * c + c

    def build(self) -> "Model":
        if self.kind == "logistic_regression":
            return LogisticRegression(self)
        return OneHiddenMLP(self)


class Model:
    spec: ModelSpec

    def loss_and_grad(self, w, X, y) -> tuple[float, np.ndarray]:
        raise NotImplementedError

    def logits(self, w, X) -> np.ndarray:
        raise NotImplementedError

    def init(self, seed: int) -> np.ndarray:
        raise NotImplementedError

    def predict(self, w, X) -> np.ndarray:
        return self.logits(w, X).argmax(axis=1)

    def loss(self, w, X, y) -> float:
        return _softmax_xent(self.logits(w, X), y)[0]

    def accuracy(self, w, X, y) -> float:
        return float((self.predict(w, X) == y).mean())


class LogisticRegression(Model):
    """Multinomial logistic regression; parameters are ``[W (d x c), b (c)]``."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec

    def _unpack(self, w):
        d, c = self.spec.input_dim, self.spec.classes
        return w[: d * c].reshape(d, c), w[d * c:]

    def logits(self, w, X):
        W, b = self._unpack(w)
        return X @ W + b

    def loss_and_grad(self, w, X, y):
        W, b = self._unpack(w)
        loss, dz = _softmax_xent(X @ W + b, y)
        return loss, np.concatenate([(X.T @ dz).ravel(), dz.sum(axis=0)])

    def init(self, seed: int) -> np.ndarray:
        return np.zeros(self.spec.num_params)


class OneHiddenMLP(Model):
    """``tanh`` hidden layer followed by a linear softmax layer."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec

    def _unpack(self, w):
        d, h, c = self.spec.input_dim, self.spec.hidden_dim, self.spec.classes
        i = 0
        W1 = w[i:i + d * h].reshape(d, h); i += d * h
        b1 = w[i:i + h]; i += h
        W2 = w[i:i + h * c].reshape(h, c); i += h * c
        return W1, b1, W2, w[i:i + c]

    def logits(self, w, X):
        W1, b1, W2, b2 = self._unpack(w)
        return np.tanh(X @ W1 + b1) @ W2 + b2

    def loss_and_grad(self, w, X, y):
        W1, b1, W2, b2 = self._unpack(w)
        a = np.tanh(X @ W1 + b1)
        loss, dz = _softmax_xent(a @ W2 + b2, y)
        da = (dz @ W2.T) * (1.0 - a * a)
        return loss, np.concatenate([
            (X.T @ da).ravel(), da.sum(axis=0), (a.T @ dz).ravel(), dz.sum(axis=0),
        ])

    def init(self, seed: int) -> np.ndarray:
        d, h, c = self.spec.input_dim, self.spec.hidden_dim, self.spec.classes
        gen = rngmod.stream(seed, rngmod.MODEL_INIT)
        W1 = gen.normal(0.0, 1.0 / np.sqrt(d), (d, h))
        W2 = gen.normal(0.0, 1.0 / np.sqrt(h), (h, c))
        return np.concatenate([W1.ravel(), np.zeros(h), W2.ravel(), np.zeros(c)])


class QuadraticModel(Model):
    """``f(w) = 0.5 * ||w - center||**2`` regardless of data; a test fixture."""

    def __init__(self, center: np.ndarray):
        self.center = np.asarray(center, dtype=np.float64)
        self.spec = ModelSpec("logistic_regression", input_dim=1, classes=2)

    def loss_and_grad(self, w, X, y):
        diff = w - self.center
        return 0.5 * float(diff @ diff), diff

    def logits(self, w, X):
        return np.zeros((len(X), 2))

    def init(self, seed: int) -> np.ndarray:
        return np.zeros_like(self.center)


def finite_difference_grad(model: Model, w: np.ndarray, X, y, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of the mean loss."""
    g = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (model.loss_and_grad(w + e, X, y)[0] - model.loss_and_grad(w - e, X, y)[0]) / (2 * h)
    return g
