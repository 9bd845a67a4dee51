"""Desk-scale victim: mean-pooled MFCC -> dense/ReLU stack -> softmax.

Trained with sparse categorical cross-entropy and Adam. Parameters are kept
in float64 during training; checkpoints store them as little-endian float32.
"""
from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .audio import AudioClip, FeatureConfig, clip_features
from .errors import CheckpointError, DatasetError, ShapeError
from .rng import make_rng

log = logging.getLogger(__name__)

REFERENCE_LEARNING_RATE = 0.1
MAX_EPOCHS = 15
CHECKPOINT_MAGIC = b"BBDM"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = MAX_EPOCHS
    learning_rate: float = 0.001
    batch_size: int = 32
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.epochs <= MAX_EPOCHS:
            raise ValueError(f"epochs must be in [0, {MAX_EPOCHS}], got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")


@dataclass(eq=False)
class MlpClassifier:
    weights: list
    biases: list
    feature_config: FeatureConfig = field(default_factory=FeatureConfig)
    feat_mean: np.ndarray = None
    feat_std: np.ndarray = None
    history: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ShapeError("need one bias per weight matrix")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if b.shape != (w.shape[1],):
                raise ShapeError(f"layer {i}: weight {w.shape} vs bias {b.shape}")
            if i and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ShapeError(f"layer {i} input {w.shape[0]} != previous output")
        d = self.weights[0].shape[0]
        if self.feat_mean is None:
            self.feat_mean = np.zeros(d)
        if self.feat_std is None:
            self.feat_std = np.ones(d)

    @property
    def layer_sizes(self) -> tuple:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def params(self) -> list:
        """Flat parameter list in the order W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def with_params(self, params: Sequence[np.ndarray]) -> "MlpClassifier":
        return replace(self, weights=list(params[0::2]), biases=list(params[1::2]), history=list(self.history))

    @classmethod
    def init(cls, layer_sizes: Sequence[int], seed: int, feature_config: FeatureConfig = FeatureConfig()):
        """He-normal weights, zero biases."""
        rng = make_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            weights.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases, feature_config)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _normalize(model: MlpClassifier, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.layer_sizes[0]:
        raise ShapeError(f"features have {X.shape[1]} dims, model expects {model.layer_sizes[0]}")
    return (X - model.feat_mean) / model.feat_std


def _forward(model: MlpClassifier, H: np.ndarray):
    acts = [H]
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        H = np.maximum(H @ w + b, 0.0)
        acts.append(H)
    return acts, H @ model.weights[-1] + model.biases[-1]


def logits_batch(model: MlpClassifier, X: np.ndarray) -> np.ndarray:
    return _forward(model, _normalize(model, X))[1]


def probs_batch(model: MlpClassifier, X: np.ndarray) -> np.ndarray:
    """Class probabilities for a batch of pooled feature vectors."""
    return softmax(logits_batch(model, X))


def forward_probs(model: MlpClassifier, features: np.ndarray) -> np.ndarray:
    """Softmax output for one clip's feature matrix (frames x coefficients).

    The matrix is mean-pooled over frames first; a 1-D input is taken as
    already pooled.
    """
    f = np.asarray(features, dtype=np.float64)
    pooled = f if f.ndim == 1 else f.mean(axis=0)
    return probs_batch(model, pooled[None, :])[0]


def loss_and_grad(model: MlpClassifier, X: np.ndarray, y: np.ndarray):
    """Mean sparse categorical cross-entropy and its gradient.

    ``X`` holds pooled feature vectors. Gradients come back in
    :attr:`MlpClassifier.params` order.
    """
    y = np.asarray(y, dtype=np.int64)
    k = model.n_classes
    if y.size and (y.min() < 0 or y.max() >= k):
        raise ValueError(f"labels must lie in [0, {k})")
    acts, logits = _forward(model, _normalize(model, X))
    n = len(y)
    z = logits - logits.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(n), y].mean())

    delta = np.exp(log_probs)
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads = [None] * (2 * len(model.weights))
    for layer in range(len(model.weights) - 1, -1, -1):
        grads[2 * layer] = acts[layer].T @ delta
        grads[2 * layer + 1] = delta.sum(axis=0)
        if layer:
            delta = (delta @ model.weights[layer].T) * (acts[layer] > 0)
    return loss, grads


@dataclass(eq=False)
class AdamState:
    m: list
    v: list
    step: int = 0

    @classmethod
    def zeros_like(cls, params) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0)


def adam_step(model: MlpClassifier, state: AdamState, grads, cfg: TrainConfig):
    """One bias-corrected Adam update; returns a new (model, state)."""
    params = model.params
    if len(grads) != len(params) or any(g.shape != p.shape for g, p in zip(grads, params)):
        raise ShapeError("gradient shapes do not match parameters")
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    t = state.step + 1
    new_m, new_v, new_p = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        new_p.append(p - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps))
        new_m.append(m)
        new_v.append(v)
    return model.with_params(new_p), AdamState(new_m, new_v, t)


# ---------------------------------------------------------------- training


def dataset_features(clips: Sequence[AudioClip], cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    return np.stack([clip_features(c, cfg) for c in clips])


def train_features(X: np.ndarray, y: np.ndarray, n_classes: int, cfg: TrainConfig,
                   hidden: Sequence[int] = (64,), feature_config: FeatureConfig = FeatureConfig()) -> MlpClassifier:
    """Mini-batch Adam on precomputed pooled features."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise DatasetError("cannot train on an empty dataset")
    if cfg.learning_rate >= REFERENCE_LEARNING_RATE:
        log.warning("learning rate %g is large for a small MLP; training may diverge", cfg.learning_rate)
    model = MlpClassifier.init((X.shape[1], *hidden, n_classes), cfg.seed, feature_config)
    model.feat_mean = X.mean(axis=0)
    model.feat_std = np.where(X.std(axis=0) > 1e-12, X.std(axis=0), 1.0)
    state = AdamState.zeros_like(model.params)
    rng = make_rng(cfg.seed + 1)
    history = []
    for _ in range(cfg.epochs):
        order = rng.permutation(len(X))
        total = 0.0
        for start in range(0, len(X), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = loss_and_grad(model, X[idx], y[idx])
            model, state = adam_step(model, state, grads, cfg)
            total += loss * len(idx)
        history.append(total / len(X))
    model.history = history
    return model


def train(ds, cfg: TrainConfig, arch: Sequence[int] = (64,), feature_config: FeatureConfig = FeatureConfig()) -> MlpClassifier:
    """Extract features once, then train. ``arch`` lists the hidden widths."""
    if len(ds) == 0:
        raise DatasetError("cannot train on an empty dataset")
    X = dataset_features(ds.clips, feature_config)
    return train_features(X, ds.labels, ds.n_classes, cfg, arch, feature_config)


@dataclass(eq=False)
class FoldRecord:
    fold: int
    train_idx: np.ndarray
    test_idx: np.ndarray
    model: MlpClassifier
    benign_accuracy: float


def stratified_folds(labels: np.ndarray, k: int, seed: int) -> list:
    """Seeded per-class shuffles dealt round-robin into ``k`` test folds."""
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(labels) < k:
        raise DatasetError(f"k={k} exceeds dataset size {len(labels)}")
    rng = make_rng(seed)
    folds = [[] for _ in range(k)]
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        for j, i in enumerate(idx):
            folds[j % k].append(int(i))
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


def kfold_cv(ds, k: int = 5, cfg: TrainConfig = TrainConfig(), arch: Sequence[int] = (64,),
             feature_config: FeatureConfig = FeatureConfig()) -> list:
    X = dataset_features(ds.clips, feature_config)
    y = ds.labels
    records = []
    for i, test_idx in enumerate(stratified_folds(y, k, cfg.seed)):
        train_idx = np.setdiff1d(np.arange(len(y)), test_idx)
        model = train_features(X[train_idx], y[train_idx], ds.n_classes, replace(cfg, seed=cfg.seed + i),
                               arch, feature_config)
        ba = float(np.mean(np.argmax(logits_batch(model, X[test_idx]), axis=1) == y[test_idx]))
        records.append(FoldRecord(i, train_idx, test_idx, model, ba))
    return records


def predict(model: MlpClassifier, clip: AudioClip) -> int:
    """Most probable class; ties go to the smallest index."""
    return int(np.argmax(probs_batch(model, clip_features(clip, model.feature_config)[None, :])[0]))


def predict_many(model: MlpClassifier, clips: Sequence[AudioClip]) -> np.ndarray:
    X = dataset_features(clips, model.feature_config)
    return np.argmax(probs_batch(model, X), axis=1)


# ------------------------------------------------------------- checkpoints


def save_model(model: MlpClassifier, path, meta: dict | None = None) -> None:
    """BBDM checkpoint: header, JSON metadata, float32 parameter blob."""
    sizes = model.layer_sizes
    fc = model.feature_config
    info = dict(meta or {})
    info["feature_config"] = [fc.frame_size, fc.hop, fc.n_mels, fc.n_mfcc]
    meta_bytes = json.dumps(info, sort_keys=True).encode()
    header = CHECKPOINT_MAGIC + struct.pack("<HH", CHECKPOINT_VERSION, len(sizes))
    header += struct.pack(f"<{len(sizes)}I", *sizes) + struct.pack("<I", len(meta_bytes)) + meta_bytes
    arrays = [model.feat_mean, model.feat_std] + model.params
    blob = b"".join(np.ascontiguousarray(a, dtype="<f4").tobytes() for a in arrays)
    Path(path).write_bytes(header + blob)


def load_model(path):
    """Return (model, metadata) from a BBDM checkpoint."""
    raw = Path(path).read_bytes()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic {raw[:4]!r}")
    try:
        version, n = struct.unpack_from("<HH", raw, 4)
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(f"{path}: unsupported version {version}")
        sizes = struct.unpack_from(f"<{n}I", raw, 8)
        pos = 8 + 4 * n
        (meta_len,) = struct.unpack_from("<I", raw, pos)
        pos += 4
        meta = json.loads(raw[pos:pos + meta_len])
        pos += meta_len
    except (struct.error, ValueError) as exc:
        raise CheckpointError(f"{path}: corrupt header ({exc})") from exc

    shapes = [(sizes[0],), (sizes[0],)]
    for a, b in zip(sizes[:-1], sizes[1:]):
        shapes += [(a, b), (b,)]
    expected = sum(int(np.prod(s)) for s in shapes) * 4
    if len(raw) - pos != expected:
        raise CheckpointError(f"{path}: parameter blob is {len(raw) - pos} bytes, expected {expected}")
    arrays = []
    for s in shapes:
        count = int(np.prod(s))
        arrays.append(np.frombuffer(raw, dtype="<f4", count=count, offset=pos).astype(np.float64).reshape(s))
        pos += 4 * count
    fc = FeatureConfig(*meta.pop("feature_config"))
    model = MlpClassifier(arrays[2::2], arrays[3::2], fc, arrays[0], arrays[1])
    return model, meta
