"""Dense/dropout classifier trained with Adam, forward and backward by hand.

Architecture: input -> [dense -> ReLU -> dropout] x 3 -> dense(2) -> softmax,
trained on sparse categorical cross-entropy. A two-way softmax equals a
sigmoid on the logit difference, so `sigmoid` is kept for scoring helpers.
"""

from __future__ import annotations
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from rich import print

from .config import TrainConfig
from .dataset import Scaler, fit_scaler, stratified_holdout
from .errors import DimensionError, InsufficientDataError, TrainingError
from .features import FeatureVector
from .schema import N_FEATURES, SCHEMA_VERSION, Label

N_CLASSES = 2
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class Mode(str, Enum):
    TRAIN = "train"
    INFER = "infer"


def relu(x):
    return np.maximum(0.0, x)


def relu_grad(x: np.ndarray) -> np.ndarray:
    # Subgradient at 0 is 0.
    return (x > 0.0).astype(np.float64)


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(out) if out.ndim == 0 else out


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_xent(logits: np.ndarray, label: Union[int, np.ndarray]):
    """(loss, probs) with loss = -ln probs[label]; vectorised over leading axes."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    lse = np.asarray(np.logaddexp.reduce(shifted, axis=-1))
    probs = np.exp(shifted - lse[..., None])
    lab = np.asarray(label, dtype=np.int64)
    picked = np.take_along_axis(shifted, lab[..., None], axis=-1)[..., 0]
    loss = lse - picked
    return (float(loss) if loss.ndim == 0 else loss), probs


def dropout_mask(shape, p: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout mask: 0 with probability p, else 1/(1-p)."""
    keep = rng.random(shape) >= p
    return keep / (1.0 - p)


def dropout(x: np.ndarray, p: float, mode: Mode, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    if not 0.0 <= p < 1.0:
        raise TrainingError(f"dropout rate must lie in [0, 1), got {p}")
    x = np.asarray(x, dtype=np.float64)
    if mode == Mode.INFER or p == 0.0:
        return x
    if rng is None:
        raise TrainingError("train-mode dropout needs a random generator")
    return x * dropout_mask(x.shape, p, rng)


@dataclass(frozen=True)
class MlpModel:
    layer_dims: Tuple[int, ...]
    weights: Tuple[np.ndarray, ...]  # each [out x in]
    biases: Tuple[np.ndarray, ...]
    dropout_rate: float = 0.5
    scaler: Optional[Scaler] = None
    seed: int = 0
    train_config: Optional[TrainConfig] = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        if len(dims) < 2 or len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise DimensionError(f"layer_dims {dims} do not match {len(self.weights)} weight matrices")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise DimensionError(
                    f"layer {i}: weight {w.shape} / bias {b.shape}, expected ({dims[i + 1]}, {dims[i]})"
                )
        object.__setattr__(self, "layer_dims", dims)
        object.__setattr__(self, "weights", tuple(self.weights))
        object.__setattr__(self, "biases", tuple(self.biases))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def n_params(self) -> int:
        return int(sum(w.size + b.size for w, b in zip(self.weights, self.biases)))

    def layer_summary(self) -> List[Tuple[str, int, int]]:
        """(layer, output width, trainable parameters) rows, dropout layers included."""
        rows: List[Tuple[str, int, int]] = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            rows.append((f"dense_{i + 1}", w.shape[0], w.size + b.size))
            if i < self.n_layers - 1 and self.dropout_rate > 0.0:
                rows.append((f"dropout_{i + 1}", w.shape[0], 0))
        return rows

    @property
    def params(self) -> List[np.ndarray]:
        """Flat parameter list [W0, b0, W1, b1, ...]."""
        out: List[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def with_params(self, params: Sequence[np.ndarray]) -> "MlpModel":
        return replace(self, weights=tuple(params[0::2]), biases=tuple(params[1::2]))


def init_model(layer_dims: Sequence[int], dropout_rate: float = 0.5,
               rng: Optional[np.random.Generator] = None, seed: int = 0) -> MlpModel:
    """He-normal weights (std sqrt(2 / fan_in)), zero biases."""
    rng = rng if rng is not None else np.random.default_rng(seed)
    dims = [int(d) for d in layer_dims]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(tuple(dims), tuple(weights), tuple(biases), dropout_rate=dropout_rate, seed=seed)


@dataclass
class ForwardCache:
    inputs: np.ndarray
    pre_activations: List[np.ndarray] = field(default_factory=list)
    activations: List[np.ndarray] = field(default_factory=list)  # post-dropout, one per hidden layer
    masks: List[Optional[np.ndarray]] = field(default_factory=list)
    logits: Optional[np.ndarray] = None
    probs: Optional[np.ndarray] = None


def forward_pass(model: MlpModel, x: np.ndarray, mode: Mode = Mode.INFER,
                 rng: Optional[np.random.Generator] = None) -> ForwardCache:
    a = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if a.shape[1] != model.layer_dims[0]:
        raise DimensionError(f"model expects {model.layer_dims[0]} inputs, got {a.shape[1]}")
    train = mode == Mode.TRAIN and model.dropout_rate > 0.0
    if train and rng is None:
        raise TrainingError("train-mode forward pass needs a random generator")

    cache = ForwardCache(inputs=a)
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        z = a @ w.T + b
        h = relu(z)
        mask = dropout_mask(h.shape, model.dropout_rate, rng) if train else None
        a = h * mask if mask is not None else h
        cache.pre_activations.append(z)
        cache.masks.append(mask)
        cache.activations.append(a)
    cache.logits = a @ model.weights[-1].T + model.biases[-1]
    cache.probs = softmax(cache.logits)
    return cache


def forward(model: MlpModel, x: np.ndarray, mode: Mode = Mode.INFER,
            rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Class probabilities; a single 1-D input gives a length-2 vector."""
    probs = forward_pass(model, x, mode, rng).probs
    return probs[0] if np.asarray(x).ndim == 1 else probs


def backward(model: MlpModel, cache: ForwardCache, labels: np.ndarray) -> List[np.ndarray]:
    """Exact gradients of the mean batch loss, ordered like `model.params`.

    Reuses the dropout masks recorded in `cache`.
    """
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    n = cache.inputs.shape[0]
    if y.size != n:
        raise DimensionError(f"{y.size} labels for a batch of {n}")

    delta = cache.probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n

    grads: List[np.ndarray] = [np.empty(0)] * (2 * model.n_layers)
    inputs = [cache.inputs] + cache.activations
    for layer in range(model.n_layers - 1, -1, -1):
        grads[2 * layer] = delta.T @ inputs[layer]
        grads[2 * layer + 1] = delta.sum(axis=0)
        if layer == 0:
            break
        upstream = delta @ model.weights[layer]
        mask = cache.masks[layer - 1]
        if mask is not None:
            upstream = upstream * mask
        delta = upstream * relu_grad(cache.pre_activations[layer - 1])
    return grads


def loss_and_gradients(model: MlpModel, x: np.ndarray, labels: np.ndarray, mode: Mode = Mode.INFER,
                       rng: Optional[np.random.Generator] = None) -> Tuple[float, List[np.ndarray]]:
    cache = forward_pass(model, x, mode, rng)
    losses, _ = softmax_xent(cache.logits, np.asarray(labels, dtype=np.int64).reshape(-1))
    return float(np.mean(losses)), backward(model, cache, labels)


@dataclass
class AdamState:
    m: List[np.ndarray]
    v: List[np.ndarray]
    t: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


def adam_step(state: AdamState, params: Sequence[np.ndarray], grads: Sequence[np.ndarray], lr: float) -> List[np.ndarray]:
    """One bias-corrected Adam update; advances `state` in place and returns new parameters."""
    if len(params) != len(state.m) or len(grads) != len(params):
        raise DimensionError("optimizer state, parameters and gradients differ in length")
    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    updated = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        updated.append(p - lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return updated


@dataclass
class TrainHistory:
    train_loss: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    train_acc: List[float] = field(default_factory=list)
    val_acc: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.train_loss)

    def as_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "epoch": np.arange(1, len(self) + 1),
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "train_acc": self.train_acc,
            "val_acc": self.val_acc,
        })


def evaluate_loss(model: MlpModel, z: np.ndarray, labels: np.ndarray) -> Tuple[float, float]:
    """(mean loss, accuracy) on standardised inputs, inference mode."""
    if len(labels) == 0:
        return float("nan"), float("nan")
    logits = forward_pass(model, z, Mode.INFER).logits
    losses, probs = softmax_xent(logits, labels)
    return float(np.mean(losses)), float(np.mean(np.argmax(probs, axis=1) == labels))


def _carve_validation(y: np.ndarray, fraction: float,
                      split_seq: np.random.SeedSequence) -> Tuple[np.ndarray, np.ndarray]:
    return stratified_holdout(y, fraction, int(split_seq.generate_state(1)[0]))


def validation_split(labels: np.ndarray, cfg: Optional[TrainConfig] = None) -> Tuple[np.ndarray, np.ndarray]:
    """(fit, validation) row indices `train` uses for these labels and config."""
    cfg = cfg or TrainConfig()
    split_seq = np.random.SeedSequence(cfg.seed).spawn(4)[1]
    return _carve_validation(np.asarray(labels, dtype=np.int64).reshape(-1), cfg.validation_fraction, split_seq)


def train(features: np.ndarray, labels: np.ndarray, cfg: Optional[TrainConfig] = None,
          verbose: bool = False) -> Tuple[MlpModel, TrainHistory]:
    """Fit the classifier on raw (unstandardised) features; deterministic for a given seed."""
    cfg = cfg or TrainConfig()
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise DimensionError(f"features {x.shape} do not match {y.size} labels")
    if len(set(y.tolist())) < 2:
        raise TrainingError("training data must contain both real and faked samples")

    init_seq, split_seq, shuffle_seq, dropout_seq = np.random.SeedSequence(cfg.seed).spawn(4)
    fit_idx, val_idx = _carve_validation(y, cfg.validation_fraction, split_seq)
    if fit_idx.size < 2 or len(set(y[fit_idx].tolist())) < 2:
        raise InsufficientDataError("too few samples left for training after the validation carve-out")

    scaler = fit_scaler(x[fit_idx])
    z_fit, y_fit = scaler.transform(x[fit_idx]), y[fit_idx]
    z_val, y_val = scaler.transform(x[val_idx]), y[val_idx]

    dims = (x.shape[1], *cfg.hidden_dims, N_CLASSES)
    model = init_model(dims, cfg.dropout_rate, np.random.default_rng(init_seq), seed=cfg.seed)
    shuffle_rng = np.random.default_rng(shuffle_seq)
    dropout_rng = np.random.default_rng(dropout_seq)
    adam = AdamState.zeros_like(model.params)
    history = TrainHistory()

    if verbose:
        print(f"[blue]🧠 Training {list(dims)} on {y_fit.size} samples, validating on {y_val.size}[/blue]")

    n = y_fit.size
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(n) if cfg.shuffle_each_epoch else np.arange(n)
        loss_sum, correct = 0.0, 0
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            cache = forward_pass(model, z_fit[batch], Mode.TRAIN, dropout_rng)
            losses, probs = softmax_xent(cache.logits, y_fit[batch])
            grads = backward(model, cache, y_fit[batch])
            model = model.with_params(adam_step(adam, model.params, grads, cfg.learning_rate))
            loss_sum += float(losses.sum())
            correct += int(np.count_nonzero(np.argmax(probs, axis=1) == y_fit[batch]))

        val_loss, val_acc = evaluate_loss(model, z_val, y_val)
        history.train_loss.append(loss_sum / n)
        history.train_acc.append(correct / n)
        history.val_loss.append(val_loss)
        history.val_acc.append(val_acc)
        if verbose and (epoch == 1 or epoch % 10 == 0 or epoch == cfg.epochs):
            print(f"   [dim]epoch {epoch:3d}/{cfg.epochs}: loss {loss_sum / n:.4f} "
                  f"acc {correct / n:.3f} | val loss {val_loss:.4f} val acc {val_acc:.3f}[/dim]")

    model = replace(model, scaler=scaler, train_config=cfg, seed=cfg.seed)
    return model, history


def predict_proba(model: MlpModel, raw: Union[FeatureVector, np.ndarray]) -> np.ndarray:
    """[n x 2] probabilities for raw feature rows, standardised by the embedded scaler."""
    values = raw.values if isinstance(raw, FeatureVector) else np.asarray(raw, dtype=np.float64)
    z = np.atleast_2d(values)
    if model.scaler is not None:
        z = model.scaler.transform(z)
    return forward_pass(model, z, Mode.INFER).probs


def decide(probs: np.ndarray) -> Tuple[Label, float]:
    """Argmax class (ties go to the lower index, i.e. real) and its probability."""
    p = np.asarray(probs, dtype=np.float64).reshape(-1)
    cls = int(np.argmax(p))
    return Label.from_index(cls), float(p[cls])


def predict(model: MlpModel, raw: Union[FeatureVector, np.ndarray]) -> Tuple[Label, float]:
    return decide(predict_proba(model, raw)[0])


def faked_scores(probs: np.ndarray) -> np.ndarray:
    return np.asarray(probs)[:, Label.FAKED.class_index]


__all__ = [
    "Mode", "MlpModel", "AdamState", "TrainHistory", "ForwardCache", "N_FEATURES",
    "relu", "sigmoid", "softmax", "softmax_xent", "dropout", "init_model", "forward",
    "forward_pass", "backward", "loss_and_gradients", "adam_step", "train", "validation_split", "evaluate_loss",
    "predict", "predict_proba", "decide", "faked_scores",
]
