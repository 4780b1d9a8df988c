"""Dense softmax classifier trained from scratch with AdaMax.

Plain numpy throughout: explicit forward/backward passes over two hidden
layers, softmax cross-entropy, and the AdaMax update (first moment plus an
elementwise infinity-norm second moment). Training is deterministic given
the seed: weight init, the train/validation split and every reshuffle come
from one generator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, NormalizerStats, fit_normalizer, normalize
from .errors import (InvalidConfigurationError, ModelFormatError,
                     UnsupportedVersionError)

MODEL_FORMAT_VERSION = 1
_PROB_FLOOR = 1e-30
_ADAMAX_FLOOR = 1e-30
_ACTIVATIONS = ("relu", "identity")


@dataclass
class MlpModel:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]   # (fan_in, fan_out) per affine layer
    biases: list[np.ndarray]
    activation: str
    normalizer: NormalizerStats
    zeta: int
    xi: int

    @property
    def parameters(self) -> list[np.ndarray]:
        return list(self.weights) + list(self.biases)


def init_model(layer_sizes, rng, activation: str = "relu",
               normalizer: NormalizerStats | None = None,
               zeta: int = 0, xi: int = 0) -> MlpModel:
    """Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases."""
    if activation not in _ACTIVATIONS:
        raise InvalidConfigurationError(f"unknown activation {activation!r}")
    sizes = tuple(int(s) for s in layer_sizes)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    if normalizer is None:
        normalizer = NormalizerStats(means=np.zeros(sizes[0]), stds=np.ones(sizes[0]))
    return MlpModel(layer_sizes=sizes, weights=weights, biases=biases,
                    activation=activation, normalizer=normalizer, zeta=zeta, xi=xi)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    return z


def _activate_grad(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0.0).astype(float)
    return np.ones_like(z)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_cached(model: MlpModel, x: np.ndarray):
    """Returns (pre-activations, post-activations, probabilities)."""
    pre, post = [], [x]
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        pre.append(z)
        h = softmax(z) if i == last else _activate(z, model.activation)
        post.append(h)
    return pre, post, h


def forward(model: MlpModel, x) -> np.ndarray:
    """Class probabilities for one normalized input vector or a batch."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if x.shape[-1] != model.layer_sizes[0]:
        raise InvalidConfigurationError(
            f"input length {x.shape[-1]} does not match model ({model.layer_sizes[0]})")
    probs = _forward_cached(model, np.atleast_2d(x))[2]
    return probs[0] if single else probs


def loss(probabilities, label: int) -> float:
    """Cross entropy of one prediction: -ln p[label], probability floored."""
    p = max(float(np.asarray(probabilities)[label]), _PROB_FLOOR)
    return -float(np.log(p))


def mean_loss(probabilities: np.ndarray, labels: np.ndarray) -> float:
    picked = np.maximum(probabilities[np.arange(len(labels)), labels], _PROB_FLOOR)
    return float(-np.mean(np.log(picked)))


def _backward_from_cache(model: MlpModel, pre, post, probs, labels):
    n = probs.shape[0]
    delta = probs.copy()
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    grads_w = [np.empty(0)] * len(model.weights)
    grads_b = [np.empty(0)] * len(model.biases)
    for i in range(len(model.weights) - 1, -1, -1):
        grads_w[i] = post[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * _activate_grad(pre[i - 1], model.activation)
    return grads_w, grads_b


def backward(model: MlpModel, inputs: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy gradient over a batch for every weight and bias."""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    labels = np.asarray(labels, dtype=int)
    if x.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    pre, post, probs = _forward_cached(model, x)
    return _backward_from_cache(model, pre, post, probs, labels)


@dataclass
class AdaMaxState:
    """Per-parameter first moment, infinity-norm second moment, step count."""

    m: list[np.ndarray]
    u: list[np.ndarray]
    t: int
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999

    @classmethod
    def for_params(cls, params, learning_rate: float,
                   beta1: float = 0.9, beta2: float = 0.999) -> "AdaMaxState":
        return cls(m=[np.zeros_like(p) for p in params],
                   u=[np.zeros_like(p) for p in params],
                   t=0, learning_rate=learning_rate, beta1=beta1, beta2=beta2)


def adamax_step(state: AdaMaxState, params, grads):
    """One AdaMax update, in place:
    m <- b1*m + (1-b1)*g;  u <- max(b2*u, |g|);
    p <- p - (lr/(1-b1^t)) * m/u  (u floored to avoid 0/0)."""
    state.t += 1
    scale = state.learning_rate / (1.0 - state.beta1 ** state.t)
    for m, u, p, g in zip(state.m, state.u, params, grads):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        np.maximum(state.beta2 * u, np.abs(g), out=u)
        p -= scale * m / np.maximum(u, _ADAMAX_FLOOR)
    return params, state


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-5
    epochs: int = 200
    batch_size: int = 128
    seed: int = 0
    validation_fraction: float = 0.1
    hidden_sizes: tuple[int, ...] = (128, 64)
    activation: str = "relu"

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidConfigurationError("epochs must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise InvalidConfigurationError("validation fraction must lie in (0, 1)")
        if self.batch_size < 1:
            raise InvalidConfigurationError("batch size must be >= 1")


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_loss: float
    val_accuracy: float


def accuracy(model: MlpModel, features_raw: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of rows whose argmax probability matches the label."""
    probs = forward(model, normalize(features_raw, model.normalizer))
    return float(np.mean(np.argmax(np.atleast_2d(probs), axis=1) == labels))


def predict_index(model: MlpModel, features_raw) -> int:
    probs = forward(model, normalize(np.asarray(features_raw, dtype=float),
                                     model.normalizer))
    return int(np.argmax(probs))


def train(dataset: Dataset, config: TrainConfig) -> tuple[MlpModel, list[EpochMetrics]]:
    """Train a classifier on the dataset; returns the fitted model (with the
    normalizer estimated on the training split only) and per-epoch metrics."""
    if dataset.n == 0:
        raise ValueError("cannot train on an empty dataset")
    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(dataset.n)
    n_val = max(1, int(round(dataset.n * config.validation_fraction)))
    if n_val >= dataset.n:
        raise InvalidConfigurationError("validation split leaves no training data")
    val_idx, train_idx = perm[:n_val], perm[n_val:]

    stats = fit_normalizer(dataset.features[train_idx])
    x_train = normalize(dataset.features[train_idx], stats)
    y_train = dataset.labels[train_idx]
    x_val = normalize(dataset.features[val_idx], stats)
    y_val = dataset.labels[val_idx]

    sizes = (dataset.features.shape[1], *config.hidden_sizes, dataset.zeta)
    model = init_model(sizes, rng, activation=config.activation,
                       normalizer=stats, zeta=dataset.zeta, xi=dataset.xi)
    state = AdaMaxState.for_params(model.parameters, config.learning_rate)

    n_train = x_train.shape[0]
    metrics = []
    for epoch in range(config.epochs):
        order = rng.permutation(n_train)
        total_loss = 0.0
        for start in range(0, n_train, config.batch_size):
            batch = order[start:start + config.batch_size]
            xb, yb = x_train[batch], y_train[batch]
            pre, post, probs = _forward_cached(model, xb)
            total_loss += mean_loss(probs, yb) * len(batch)
            grads_w, grads_b = _backward_from_cache(model, pre, post, probs, yb)
            adamax_step(state, model.parameters, list(grads_w) + list(grads_b))
        val_probs = forward(model, x_val)
        val_acc = float(np.mean(np.argmax(val_probs, axis=1) == y_val))
        metrics.append(EpochMetrics(epoch=epoch, train_loss=total_loss / n_train,
                                    val_accuracy=val_acc))
    return model, metrics


def save_model(model: MlpModel, path) -> None:
    payload = {
        "version": MODEL_FORMAT_VERSION,
        "zeta": model.zeta,
        "xi": model.xi,
        "layer_sizes": list(model.layer_sizes),
        "activation": model.activation,
        "normalizer": {"means": model.normalizer.means.tolist(),
                       "stds": model.normalizer.stds.tolist()},
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def _require(payload: dict, key: str):
    if key not in payload:
        raise ModelFormatError(key, "model file is missing a required field")
    return payload[key]


def load_model(path) -> MlpModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError("<document>", f"model file is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ModelFormatError("<document>", "model file must hold a JSON object")
    version = _require(payload, "version")
    if version != MODEL_FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"model format version {version!r} is not supported (expected {MODEL_FORMAT_VERSION})")
    sizes = tuple(int(s) for s in _require(payload, "layer_sizes"))
    if len(sizes) < 2:
        raise ModelFormatError("layer_sizes", "need at least input and output layers")
    activation = _require(payload, "activation")
    if activation not in _ACTIVATIONS:
        raise ModelFormatError("activation", f"unknown activation {activation!r}")
    norm = _require(payload, "normalizer")
    try:
        means = np.asarray(norm["means"], dtype=float)
        stds = np.asarray(norm["stds"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError("normalizer", f"malformed normalizer block: {exc}") from exc
    if means.shape != (sizes[0],) or stds.shape != (sizes[0],):
        raise ModelFormatError("normalizer", "normalizer length does not match input layer")
    weights_raw = _require(payload, "weights")
    biases_raw = _require(payload, "biases")
    if len(weights_raw) != len(sizes) - 1 or len(biases_raw) != len(sizes) - 1:
        raise ModelFormatError("weights", "layer count does not match layer_sizes")
    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        try:
            w = np.asarray(weights_raw[i], dtype=float)
            b = np.asarray(biases_raw[i], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ModelFormatError(f"weights[{i}]", f"malformed layer: {exc}") from exc
        if w.shape != (fan_in, fan_out):
            raise ModelFormatError(f"weights[{i}]",
                                   f"shape {w.shape} does not match ({fan_in}, {fan_out})")
        if b.shape != (fan_out,):
            raise ModelFormatError(f"biases[{i}]",
                                   f"shape {b.shape} does not match ({fan_out},)")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ModelFormatError(f"weights[{i}]", "non-finite parameter value")
        weights.append(w)
        biases.append(b)
    return MlpModel(layer_sizes=sizes, weights=weights, biases=biases,
                    activation=activation,
                    normalizer=NormalizerStats(means=means, stds=stds),
                    zeta=int(_require(payload, "zeta")), xi=int(_require(payload, "xi")))
