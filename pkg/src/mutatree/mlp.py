"""Fully connected binary classifier trained from scratch with Adam.

ReLU hidden layers, a single sigmoid output unit, binary cross-entropy loss
computed on logits for numerical stability. All arithmetic is float64 so
analytic gradients can be checked against finite differences tightly.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

# Reference architecture scaled down 8x for desk-size corpora; the full-width
# stack is available through MlpConfig.
DEFAULT_LAYER_WIDTHS = (64, 32, 16, 32, 16, 32, 16)
REFERENCE_LAYER_WIDTHS = (512, 256, 128, 256, 128, 256, 128)


@dataclass(frozen=True)
class MlpConfig:
    layer_widths: tuple[int, ...] = DEFAULT_LAYER_WIDTHS
    learning_rate: float = 1e-3
    epochs: int = 20
    batch_size: int = 128
    seed: int = 0
    validation_fraction: float = 0.2
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if any(w < 1 for w in self.layer_widths):
            raise ValueError("layer widths must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("bad epochs/batch_size")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in [0, 1)")


@dataclass
class MlpModel:
    layer_widths: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    history: dict = field(default_factory=dict)

    @property
    def input_width(self) -> int:
        return self.weights[0].shape[0]

    def forward_logits(self, X: np.ndarray) -> np.ndarray:
        a = np.atleast_2d(X)
        if a.shape[1] != self.input_width:
            raise ValueError(
                f"input width {a.shape[1]} does not match model width {self.input_width}"
            )
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ W + b, 0.0)
        return (a @ self.weights[-1] + self.biases[-1]).ravel()

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        p = _sigmoid(self.forward_logits(X))
        return np.clip(p, 1e-12, 1.0 - 1e-12)

    def predict_proba_one(self, x: np.ndarray) -> float:
        return float(self.predict_proba(x)[0])

    def predict(self, X: np.ndarray, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(int)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_loss(logits: np.ndarray, y: np.ndarray) -> float:
    # mean(softplus(z) - y*z), the logit form of binary cross-entropy
    z = logits
    softplus = np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    return float(np.mean(softplus - y * z))


def init_mlp(input_width: int, config: MlpConfig) -> MlpModel:
    """He-initialized network, deterministic under config.seed."""
    rng = np.random.default_rng(config.seed)
    widths = [input_width, *config.layer_widths, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        weights.append(rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(
        layer_widths=tuple(config.layer_widths),
        weights=weights,
        biases=biases,
        adam_beta1=config.adam_beta1,
        adam_beta2=config.adam_beta2,
    )


def compute_gradients(
    model: MlpModel, X: np.ndarray, y: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray], float]:
    """Analytic batch gradients of the mean BCE loss (plus the loss value)."""
    X = np.atleast_2d(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    activations = [X]
    a = X
    for W, b in zip(model.weights[:-1], model.biases[:-1]):
        a = np.maximum(a @ W + b, 0.0)
        activations.append(a)
    logits = (a @ model.weights[-1] + model.biases[-1]).ravel()
    loss = bce_loss(logits, y)
    n = y.size
    delta = ((_sigmoid(logits) - y) / n)[:, None]
    grads_w: list[np.ndarray] = [np.empty(0)] * len(model.weights)
    grads_b: list[np.ndarray] = [np.empty(0)] * len(model.biases)
    for layer in range(len(model.weights) - 1, -1, -1):
        grads_w[layer] = activations[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer].T) * (activations[layer] > 0.0)
    return grads_w, grads_b, loss


class _AdamState:
    def __init__(self, model: MlpModel, config: MlpConfig):
        self.m_w = [np.zeros_like(W) for W in model.weights]
        self.v_w = [np.zeros_like(W) for W in model.weights]
        self.m_b = [np.zeros_like(b) for b in model.biases]
        self.v_b = [np.zeros_like(b) for b in model.biases]
        self.t = 0
        self.config = config

    def step(self, model: MlpModel, grads_w: list[np.ndarray], grads_b: list[np.ndarray]) -> None:
        cfg = self.config
        self.t += 1
        b1t = 1.0 - cfg.adam_beta1**self.t
        b2t = 1.0 - cfg.adam_beta2**self.t
        for i in range(len(model.weights)):
            for params, grad, m, v in (
                (model.weights, grads_w, self.m_w, self.v_w),
                (model.biases, grads_b, self.m_b, self.v_b),
            ):
                m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * grad[i]
                v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * grad[i] ** 2
                m_hat = m[i] / b1t
                v_hat = v[i] / b2t
                params[i] = params[i] - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_epsilon)


def train_mlp(
    X: np.ndarray | Sequence[Sequence[float]],
    y: np.ndarray | Sequence[int],
    config: MlpConfig = MlpConfig(),
) -> MlpModel:
    """Adam-optimized BCE training, deterministic under config.seed.

    A validation_fraction share of the (shuffled) data is held out and its
    loss tracked per epoch in model.history. Raises RuntimeError naming the
    epoch if the training loss stops being finite.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("X and y shapes disagree")
    if y.size < 2 or np.unique(y).size < 2:
        raise ValueError("need both classes to train")
    rng = np.random.default_rng(config.seed)
    model = init_mlp(X.shape[1], config)

    order = rng.permutation(y.size)
    n_val = int(round(config.validation_fraction * y.size))
    val_idx, train_idx = order[:n_val], order[n_val:]
    X_train, y_train = X[train_idx], y[train_idx]
    X_val, y_val = X[val_idx], y[val_idx]

    state = _AdamState(model, config)
    train_losses, val_losses = [], []
    for epoch in range(config.epochs):
        perm = rng.permutation(y_train.size)
        epoch_loss = 0.0
        for start in range(0, y_train.size, config.batch_size):
            batch = perm[start : start + config.batch_size]
            grads_w, grads_b, loss = compute_gradients(model, X_train[batch], y_train[batch])
            if not math.isfinite(loss):
                raise RuntimeError(f"diverged at epoch {epoch}: non-finite loss")
            state.step(model, grads_w, grads_b)
            epoch_loss += loss * batch.size
        train_losses.append(epoch_loss / max(y_train.size, 1))
        if y_val.size:
            val_losses.append(bce_loss(model.forward_logits(X_val), y_val))
    model.history = {"train_loss": train_losses, "val_loss": val_losses}
    return model


MLP_FORMAT = "mutatree-mlp"


def _encode(arr: np.ndarray) -> dict:
    return {
        "shape": list(arr.shape),
        "data": base64.b64encode(np.ascontiguousarray(arr, dtype=np.float64).tobytes()).decode("ascii"),
    }


def _decode(obj: dict) -> np.ndarray:
    return np.frombuffer(base64.b64decode(obj["data"]), dtype=np.float64).reshape(obj["shape"]).copy()


def mlp_to_json(model: MlpModel) -> dict:
    return {
        "format": MLP_FORMAT,
        "version": 1,
        "layer_widths": list(model.layer_widths),
        "adam_beta1": model.adam_beta1,
        "adam_beta2": model.adam_beta2,
        "weights": [_encode(W) for W in model.weights],
        "biases": [_encode(b) for b in model.biases],
    }


def mlp_from_json(obj: dict) -> MlpModel:
    if obj.get("format") != MLP_FORMAT:
        raise ValueError(f"not an MLP document: {obj.get('format')!r}")
    return MlpModel(
        layer_widths=tuple(obj["layer_widths"]),
        weights=[_decode(o) for o in obj["weights"]],
        biases=[_decode(o) for o in obj["biases"]],
        adam_beta1=float(obj["adam_beta1"]),
        adam_beta2=float(obj["adam_beta2"]),
    )


def save_mlp(model: MlpModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(mlp_to_json(model)) + "\n")


def load_mlp(path: str | Path) -> MlpModel:
    return mlp_from_json(json.loads(Path(path).read_text()))
