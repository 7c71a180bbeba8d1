"""Feedforward network with reLu hidden layers and a sigmoid output unit.

Trained on mean squared error with Adam. Weights are stored as
``(fan_in, fan_out)`` matrices so a batch ``X`` of shape ``(n, dims[0])``
propagates as ``X @ W + b``.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ParameterError

FULL_DIMS = (20, 1000, 500, 250, 1)
DESK_DIMS = (20, 200, 100, 50, 1)


@dataclass
class MlpModel:
    dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def predict(self, x) -> np.ndarray:
        """Batch probabilities for ``x`` of shape ``(n, dims[0])``."""
        return forward(self, x)

    def params(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def copy(self) -> "MlpModel":
        return MlpModel(tuple(self.dims), [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases])


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, model: MlpModel, **kw) -> "AdamState":
        return cls([np.zeros_like(p) for p in model.params()],
                   [np.zeros_like(p) for p in model.params()], **kw)


@dataclass
class TrainConfig:
    epochs: int = 50
    learning_rate: float = 1e-3
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ParameterError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ParameterError("learning rate must be positive")
        if self.batch_size < 1:
            raise ParameterError("batch size must be >= 1")


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    loss: float = field(default=float("nan"))

    def params(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]


def init(dims=FULL_DIMS, seed: int = 0) -> MlpModel:
    """He-normal weights (variance 2/fan_in), zero biases."""
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2 or min(dims) < 1:
        raise ParameterError(f"invalid layer dimensions {dims}")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0xA11])))
    weights = [rng.standard_normal((a, b)) * np.sqrt(2.0 / a) for a, b in zip(dims[:-1], dims[1:])]
    biases = [np.zeros(b) for b in dims[1:]]
    return MlpModel(dims, weights, biases)


def sigmoid(z):
    # split by sign so exp never overflows
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activations(model: MlpModel, x: np.ndarray) -> list[np.ndarray]:
    acts = [x]
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = acts[-1] @ w + b
        acts.append(sigmoid(z) if i == last else np.maximum(z, 0.0))
    return acts


def _as_batch(model: MlpModel, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.dims[0]:
        raise ParameterError(f"input width {x.shape[1]} != model input {model.dims[0]}")
    if not np.all(np.isfinite(x)):
        raise ParameterError("non-finite input")
    return x, single


def forward(model: MlpModel, x):
    """Probability that the hypothesis holds, for one vector or a batch of rows."""
    x, single = _as_batch(model, x)
    p = _activations(model, x)[-1][:, 0]
    return float(p[0]) if single else p


def grad(model: MlpModel, x, labels) -> Gradients:
    """Backpropagated gradients of mean((forward(x) - label)**2) over the batch."""
    x, _ = _as_batch(model, x)
    y = np.asarray(labels, dtype=np.float64).reshape(-1, 1)
    if x.shape[0] == 0 or y.shape[0] != x.shape[0]:
        raise ParameterError("batch must be nonempty with one label per row")
    acts = _activations(model, x)
    p = acts[-1]
    err = p - y
    n = x.shape[0]
    delta = (2.0 / n) * err * p * (1.0 - p)
    gw: list[np.ndarray] = [None] * len(model.weights)
    gb: list[np.ndarray] = [None] * len(model.weights)
    for i in range(len(model.weights) - 1, -1, -1):
        gw[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ model.weights[i].T) * (acts[i] > 0)
    return Gradients(gw, gb, float(np.mean(err * err)))


def adam_step(model: MlpModel, state: AdamState, grads: Gradients, learning_rate: float = 1e-3) -> None:
    """In-place Adam update with bias correction."""
    params, gs = model.params(), grads.params()
    if len(state.m) != len(params) or any(m.shape != p.shape for m, p in zip(state.m, params)) \
            or any(g.shape != p.shape for g, p in zip(gs, params)):
        raise ParameterError("optimizer state / gradient shapes do not match the model")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, gs, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= learning_rate * (m / c1) / (np.sqrt(v / c2) + state.eps)


def train(model: MlpModel, features, labels, config: TrainConfig | None = None,
          log=None) -> tuple[MlpModel, list[float]]:
    """Mini-batch Adam on MSE. Returns the model (updated in place) and per-epoch mean loss.

    ``log`` is an optional writable stream receiving one ``epoch<TAB>loss<TAB>seconds``
    line per epoch.
    """
    config = config or TrainConfig()
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.shape[0] == 0:
        raise ParameterError("empty training set")
    if x.ndim != 2 or x.shape[1] != model.dims[0]:
        raise ParameterError(f"feature width {x.shape[-1]} != model input {model.dims[0]}")
    if not np.all((y == 0) | (y == 1)):
        raise ParameterError("labels must be 0 or 1")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(config.seed), 0x7A1])))
    state = AdamState.zeros_like(model)
    history = []
    n, bs = x.shape[0], config.batch_size
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, bs):
            idx = order[s:s + bs]
            g = grad(model, x[idx], y[idx])
            adam_step(model, state, g, config.learning_rate)
            total += g.loss * idx.size
        history.append(total / n)
        if log is not None:
            print(f"{epoch + 1}\t{history[-1]:.17g}\t{time.perf_counter() - t0:.3f}", file=log)
    return model, history


# Model file: magic, version u16, layer count u16, dims u32..., then per layer
# row-major (fan_in, fan_out) float64 weights followed by float64 biases.
_MAGIC = b"FTNW"
_VERSION = 1


def save_model(model: MlpModel, path) -> None:
    parts = [struct.pack("<4sHH", _MAGIC, _VERSION, len(model.dims)),
             struct.pack(f"<{len(model.dims)}I", *model.dims)]
    for w, b in zip(model.weights, model.biases):
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_model(path) -> MlpModel:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise FormatError(f"{path}: truncated model header")
    magic, version, nd = struct.unpack_from("<4sHH", raw)
    if magic != _MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported model version {version} (reader supports {_VERSION})")
    pos = 8
    if len(raw) < pos + 4 * nd or nd < 2:
        raise FormatError(f"{path}: truncated layer dimensions")
    dims = struct.unpack_from(f"<{nd}I", raw, pos)
    pos += 4 * nd
    expected = pos + 8 * sum(a * b + b for a, b in zip(dims[:-1], dims[1:]))
    if len(raw) != expected:
        raise FormatError(f"{path}: size {len(raw)} does not match dims {dims} (expected {expected})")
    weights, biases = [], []
    for a, b in zip(dims[:-1], dims[1:]):
        weights.append(np.frombuffer(raw, "<f8", a * b, pos).reshape(a, b).astype(np.float64))
        pos += 8 * a * b
        biases.append(np.frombuffer(raw, "<f8", b, pos).astype(np.float64))
        pos += 8 * b
    return MlpModel(tuple(dims), weights, biases)
