"""From-scratch linear softmax head with minibatch SGD.

Implements the two incremental baselines:

- FLB retrains a fresh head each increment on the union of all training
  data seen so far (the accuracy upper bound).
- FT keeps the head from earlier increments, appends zero-initialized rows
  for the new classes, and trains on the new increment's data only. Old
  training data is never passed in, which is what produces catastrophic
  forgetting.

Heads map rows to class ids through ``class_ids`` (append-only), since
classes arrive in arbitrary id order during an incremental session.
Training is plain SGD: one seeded shuffle per epoch, minibatches in
permutation order with the last short batch kept, updates by the mean
cross-entropy gradient. Softmax is computed with the max-logit subtracted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import Dataset, DimensionMismatchError
from .rng import SplitMix64


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 100
    batch_size: int = 8
    seed: int = 0

    def __post_init__(self):
        # learning_rate 0 is allowed: it must leave a head unchanged
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


@dataclass
class LinearHead:
    weights: np.ndarray  # (n_classes, dim) float64
    bias: np.ndarray  # (n_classes,) float64
    class_ids: tuple[int, ...]  # row -> class id

    def __post_init__(self):
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        self.bias = np.ascontiguousarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2:
            raise DimensionMismatchError("weights must be 2-D")
        if self.bias.shape != (self.weights.shape[0],):
            raise DimensionMismatchError("one bias per class row required")
        if len(self.class_ids) != self.weights.shape[0]:
            raise ValueError("one class id per row required")
        if len(set(self.class_ids)) != len(self.class_ids):
            raise ValueError("duplicate class ids in head")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("non-finite head parameters")

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def row_of(self) -> dict[int, int]:
        return {cid: row for row, cid in enumerate(self.class_ids)}

    def copy(self) -> "LinearHead":
        return LinearHead(self.weights.copy(), self.bias.copy(), self.class_ids)


def new_head(class_ids, dim: int) -> LinearHead:
    """Zero-initialized head with one row per class id, in the given order."""
    ids = tuple(int(c) for c in class_ids)
    return LinearHead(np.zeros((len(ids), dim)), np.zeros(len(ids)), ids)


def expand_head(head: LinearHead, new_class_ids) -> LinearHead:
    """Append zero-initialized rows for new classes."""
    new_ids = tuple(int(c) for c in new_class_ids)
    overlap = set(new_ids) & set(head.class_ids)
    if overlap:
        raise ValueError(f"classes already in head: {sorted(overlap)}")
    k = len(new_ids)
    weights = np.vstack([head.weights, np.zeros((k, head.dim))]) if head.n_classes else np.zeros((k, head.dim))
    bias = np.concatenate([head.bias, np.zeros(k)])
    return LinearHead(weights, bias, head.class_ids + new_ids)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax (max logit subtracted before exponentiation)."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward(head: LinearHead, x) -> np.ndarray:
    """Class probabilities softmax(Wx + b) for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (head.dim,):
        raise DimensionMismatchError(f"expected vector of dim {head.dim}, got {x.shape}")
    if head.n_classes == 0:
        raise ValueError("head has no classes")
    return softmax(head.weights @ x + head.bias)


def _logits(head: LinearHead, X: np.ndarray) -> np.ndarray:
    return X @ head.weights.T + head.bias


def _rows_for_labels(head: LinearHead, labels: np.ndarray) -> np.ndarray:
    lookup = head.row_of()
    try:
        return np.asarray([lookup[int(c)] for c in labels], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]} not covered by head rows") from None


def gradient(head: LinearHead, X, labels) -> tuple[np.ndarray, np.ndarray]:
    """Mean cross-entropy gradient over a batch: (softmax - onehot) outer x."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("batch must be a non-empty 2-D array")
    if X.shape[1] != head.dim:
        raise DimensionMismatchError(f"batch dim {X.shape[1]} != head dim {head.dim}")
    rows = _rows_for_labels(head, np.asarray(labels))
    probs = softmax(_logits(head, X))
    probs[np.arange(X.shape[0]), rows] -= 1.0
    d_weights = probs.T @ X / X.shape[0]
    d_bias = probs.mean(axis=0)
    return d_weights, d_bias


def cross_entropy_loss(head: LinearHead, X, labels) -> float:
    """Mean negative log-likelihood; the quantity gradient() differentiates."""
    X = np.asarray(X, dtype=np.float64)
    rows = _rows_for_labels(head, np.asarray(labels))
    z = _logits(head, X)
    shifted = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    return float(np.mean(log_norm - shifted[np.arange(X.shape[0]), rows]))


def train(head: LinearHead, data: Dataset, cfg: TrainConfig) -> LinearHead:
    """SGD-train a copy of the head; the input head is left untouched."""
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    if data.dim != head.dim:
        raise DimensionMismatchError(f"data dim {data.dim} != head dim {head.dim}")
    X = data.vectors.astype(np.float64)
    rows = _rows_for_labels(head, data.labels)
    out = head.copy()
    rng = SplitMix64(cfg.seed)
    n = len(data)
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = perm[start : start + cfg.batch_size]
            probs = softmax(_logits(out, X[batch]))
            probs[np.arange(len(batch)), rows[batch]] -= 1.0
            out.weights -= cfg.learning_rate * (probs.T @ X[batch] / len(batch))
            out.bias -= cfg.learning_rate * probs.mean(axis=0)
    return out


def predict_head(head: LinearHead, X) -> np.ndarray:
    """Argmax class ids for each row of X (first row wins exact ties)."""
    X = np.asarray(X, dtype=np.float64)
    if head.n_classes == 0:
        raise ValueError("head has no classes")
    rows = np.argmax(_logits(head, X), axis=1)
    ids = np.asarray(head.class_ids, dtype=np.int64)
    return ids[rows]


def run_flb_increment(all_data_so_far: Dataset, class_ids_so_far, cfg: TrainConfig) -> LinearHead:
    """Train a fresh head on everything seen so far (the upper bound)."""
    head = new_head(class_ids_so_far, all_data_so_far.dim)
    return train(head, all_data_so_far, cfg)


def run_ft_increment(
    head: LinearHead, new_data_only: Dataset, new_class_ids, cfg: TrainConfig
) -> LinearHead:
    """Adapt an existing head to the new increment's data only."""
    new_ids = set(int(c) for c in new_class_ids)
    present = set(int(c) for c in np.unique(new_data_only.labels))
    if not present <= new_ids:
        raise ValueError(f"data contains non-increment classes: {sorted(present - new_ids)}")
    expanded = expand_head(head, new_class_ids)
    return train(expanded, new_data_only, cfg)
