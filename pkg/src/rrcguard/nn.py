"""Minimal dense-network engine: forward pass, MSE backprop, input gradients.

All arithmetic is float64. The heavy loops live in :mod:`rrcguard._kernels`
(compiled when available, numpy otherwise); this module owns the model
types, validation, training loop and serialization.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import RejectedInputError, TrainingDivergedError
from .rng import RngStream, derive_seed

FORMAT_VERSION = 1


class Activation(enum.Enum):
    IDENTITY = "identity"
    TANH = "tanh"
    RELU = "relu"

    @property
    def code(self) -> int:
        return _ACT_CODES[self]


_ACT_CODES = {Activation.IDENTITY: 0, Activation.TANH: 1, Activation.RELU: 2}


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: Activation = Activation.IDENTITY

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64, order="C", ndmin=2)
        self.biases = np.array(self.biases, dtype=np.float64, ndmin=1)
        self.activation = Activation(self.activation)
        if self.weights.ndim != 2 or self.biases.ndim != 1:
            raise RejectedInputError("weights must be 2-d and biases 1-d")
        if self.weights.shape[0] != self.biases.shape[0]:
            raise RejectedInputError(
                f"weights have {self.weights.shape[0]} rows but biases has "
                f"{self.biases.shape[0]} entries"
            )

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class MlpModel:
    """Stack of dense layers.

    Any chain of layers is accepted; :meth:`check_autoencoder` enforces the
    compress-then-reconstruct shape used by the detector.
    """

    layers: list[DenseLayer]

    def __post_init__(self):
        if not self.layers:
            raise RejectedInputError("a model needs at least one layer")
        for k in range(len(self.layers) - 1):
            if self.layers[k].out_dim != self.layers[k + 1].in_dim:
                raise RejectedInputError(
                    f"layer {k} outputs {self.layers[k].out_dim} values but "
                    f"layer {k + 1} expects {self.layers[k + 1].in_dim}"
                )
        self._refresh()

    def _refresh(self):
        self._Ws = [layer.weights for layer in self.layers]
        self._bs = [layer.biases for layer in self.layers]
        self._acts = np.array([layer.activation.code for layer in self.layers], dtype=np.int64)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.layers[0].in_dim,) + tuple(layer.out_dim for layer in self.layers)

    @property
    def input_dim(self) -> int:
        return self.dims[0]

    @property
    def output_dim(self) -> int:
        return self.dims[-1]

    @property
    def bottleneck_dim(self) -> int:
        return min(self.dims)

    @property
    def bottleneck_index(self) -> int:
        """Position in ``dims`` (and in the activation trace) of the bottleneck."""
        return int(np.argmin(self.dims))

    def check_autoencoder(self) -> None:
        if self.output_dim != self.input_dim:
            raise RejectedInputError("autoencoder output must match its input dimension")
        if not self.bottleneck_dim < self.input_dim:
            raise RejectedInputError("autoencoder bottleneck must be narrower than the input")

    def copy(self) -> "MlpModel":
        return MlpModel(
            [DenseLayer(l.weights.copy(), l.biases.copy(), l.activation) for l in self.layers]
        )

    def is_finite(self) -> bool:
        return all(
            np.isfinite(l.weights).all() and np.isfinite(l.biases).all() for l in self.layers
        )

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "dims": list(self.dims),
            "layers": [
                {
                    "weights": l.weights.tolist(),
                    "biases": l.biases.tolist(),
                    "activation": l.activation.value,
                }
                for l in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MlpModel":
        version = doc.get("format_version")
        if version != FORMAT_VERSION:
            raise RejectedInputError(f"unsupported model format_version {version!r}")
        model = cls(
            [
                DenseLayer(l["weights"], l["biases"], Activation(l["activation"]))
                for l in doc["layers"]
            ]
        )
        if list(model.dims) != list(doc["dims"]):
            raise RejectedInputError("declared dims do not match the layer shapes")
        return model

    def to_json(self) -> str:
        # json writes floats with repr(), which round-trips float64 exactly
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MlpModel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 1000
    batch_size: int = 16
    seed: int = 0
    init_scale: float | None = None  # None -> 1/sqrt(fan_in) per layer

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise RejectedInputError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise RejectedInputError("epochs and batch_size must be at least 1")
        if self.init_scale is not None and not self.init_scale > 0:
            raise RejectedInputError("init_scale must be positive")


def build_autoencoder(
    dims: Sequence[int] = (5, 4, 2, 4, 5),
    seed: int = 0,
    init_scale: float | None = None,
    hidden: Activation = Activation.TANH,
    output: Activation = Activation.IDENTITY,
) -> MlpModel:
    """Seeded autoencoder; weights and biases ~ U(-s, s), s = 1/sqrt(fan_in)."""
    rng = RngStream(derive_seed(seed, "init"))
    layers = []
    for k in range(len(dims) - 1):
        fan_in, fan_out = dims[k], dims[k + 1]
        s = init_scale if init_scale is not None else 1.0 / math.sqrt(fan_in)
        w = rng.uniform((fan_out, fan_in), -s, s)
        b = rng.uniform(fan_out, -s, s)
        act = output if k == len(dims) - 2 else hidden
        layers.append(DenseLayer(w, b, act))
    model = MlpModel(layers)
    model.check_autoencoder()
    return model


def _as_batch(model: MlpModel, X) -> np.ndarray:
    X = np.array(X, dtype=np.float64, ndmin=2, order="C")
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise RejectedInputError(
            f"expected vectors of length {model.input_dim}, got shape {X.shape}"
        )
    return X


def forward(model: MlpModel, x) -> tuple[np.ndarray, list[np.ndarray]]:
    """Reconstruct a single vector; also return every layer's activation.

    ``activations[0]`` is the input and ``activations[-1]`` the output.
    """
    X = _as_batch(model, x)
    if X.shape[0] != 1:
        raise RejectedInputError("forward takes one vector; use forward_batch")
    if not np.isfinite(X).all():
        raise RejectedInputError("input contains non-finite values")
    trace = _kernels.forward_trace(model._Ws, model._bs, model._acts, X)
    acts = [a[0].copy() for a in trace]
    return acts[-1], acts


def forward_batch(model: MlpModel, X) -> np.ndarray:
    return _kernels.forward_batch(model._Ws, model._bs, model._acts, _as_batch(model, X))


def train_step(model: MlpModel, batch, lr: float) -> float:
    """One gradient-descent step on mean squared reconstruction error.

    The loss (mean over rows and coordinates) is measured before the update.
    """
    X = _as_batch(model, batch)
    if X.shape[0] == 0:
        raise RejectedInputError("empty batch")
    if not lr > 0:
        raise RejectedInputError("learning rate must be positive")
    loss = _kernels.train_step(model._Ws, model._bs, model._acts, X, float(lr))
    if not math.isfinite(loss) or not model.is_finite():
        raise TrainingDivergedError(f"training diverged (loss={loss}); lower the learning rate")
    return loss


def mse(model: MlpModel, X) -> float:
    X = _as_batch(model, X)
    r = forward_batch(model, X) - X
    return float(np.mean(r * r))


def train(model: MlpModel, data, config: TrainConfig) -> list[float]:
    """Mini-batch gradient descent over ``data``; returns per-epoch mean loss.

    Row order is reshuffled each epoch from a stream derived from
    ``config.seed``, so identical configs give bit-identical weights.
    """
    X = _as_batch(model, data)
    if X.shape[0] == 0:
        raise RejectedInputError("no training rows")
    rng = RngStream(derive_seed(config.seed, "shuffle"))
    history = []
    for _ in range(config.epochs):
        order = rng.permutation(X.shape[0])
        losses = []
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            losses.append(train_step(model, X[idx], config.learning_rate) * len(idx))
        history.append(sum(losses) / X.shape[0])
    return history


def fit_autoencoder(
    data, config: TrainConfig, dims: Sequence[int] = (5, 4, 2, 4, 5)
) -> tuple[MlpModel, list[float]]:
    model = build_autoencoder(dims, seed=config.seed, init_scale=config.init_scale)
    history = train(model, data, config)
    return model, history


@dataclass(frozen=True)
class EuclideanDistance:
    """``score(x, x_hat) = ||x - x_hat||_2``, the detector's anomaly score."""

    def __call__(self, x, x_hat) -> float:
        r = np.asarray(x, dtype=np.float64) - np.asarray(x_hat, dtype=np.float64)
        return float(np.sqrt(np.dot(r, r)))


EUCLIDEAN = EuclideanDistance()


def distance_batch(model: MlpModel, X) -> np.ndarray:
    return _kernels.distance_batch(model._Ws, model._bs, model._acts, _as_batch(model, X))


def distance_and_grad(model: MlpModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise reconstruction distance and its gradient w.r.t. each row."""
    return _kernels.distance_and_grad(model._Ws, model._bs, model._acts, _as_batch(model, X))


def input_gradient(model: MlpModel, x, score: EuclideanDistance = EUCLIDEAN) -> np.ndarray:
    """Gradient of ``score(x, forward(x))`` with respect to ``x``.

    Backpropagates through both the distance and the network. At zero
    distance the score is not differentiable and the zero vector is returned.
    """
    if not isinstance(score, EuclideanDistance):
        raise RejectedInputError("only the Euclidean reconstruction distance is supported")
    _, g = distance_and_grad(model, x)
    if g.shape[0] != 1:
        raise RejectedInputError("input_gradient takes one vector")
    return g[0]


def finite_diff_gradient(f: Callable[[np.ndarray], float], x, h: float = 1e-5) -> np.ndarray:
    """Central differences ``(f(x + h e_j) - f(x - h e_j)) / 2h``."""
    if not h > 0:
        raise RejectedInputError("step h must be positive")
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e.flat[j] = h
        g.flat[j] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g
