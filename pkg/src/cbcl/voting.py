"""Weighted-voting prediction over the nearest centroids.

A test vector is scored against every centroid of every learned class; the
n globally closest centroids each vote 1/distance for their owning class,
and the class with the largest total wins. Zero distances are clamped to
EPSILON_DISTANCE so an exact centroid match dominates with a finite score.

predict_ncm and predict_1nn are deliberately independent reference
classifiers: with one centroid per class the voting scheme must agree with
nearest-class-mean, and with one centroid per training example (threshold
zero) it must agree with 1-nearest-neighbor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import ModelStore
from .features import Dataset, DimensionMismatchError, distances_to_rows, euclidean_distance

EPSILON_DISTANCE = 1e-10


@dataclass(frozen=True)
class Hyperparams:
    """Clustering threshold and voting pool size."""

    distance_threshold: float
    n_vote: int

    def __post_init__(self):
        if self.distance_threshold < 0:
            raise ValueError("distance_threshold must be >= 0")
        if self.n_vote < 1:
            raise ValueError("n_vote must be >= 1")


def _vote(dists: np.ndarray, owners: np.ndarray, n_vote: int) -> dict[int, float]:
    # stable sort keeps (class id, centroid index) order on exact ties
    order = np.argsort(dists, kind="stable")
    scores: dict[int, float] = {}
    for k in order[: min(n_vote, len(order))]:
        cls = int(owners[k])
        scores[cls] = scores.get(cls, 0.0) + 1.0 / max(float(dists[k]), EPSILON_DISTANCE)
    return scores


def _argmax_class(scores: dict[int, float]) -> int:
    # highest score wins; exact ties fall to the lowest class id
    return max(scores.items(), key=lambda kv: (kv[1], -kv[0]))[0]


def predict_scores(store: ModelStore, x, n_vote: int) -> dict[int, float]:
    """Per-class vote totals from the n_vote nearest centroids.

    Only classes that received at least one vote appear. When n_vote
    exceeds the number of centroids, every centroid votes.
    """
    if n_vote < 1:
        raise ValueError("n_vote must be >= 1")
    means, owners = store.registry()
    dists = distances_to_rows(x, means)
    return _vote(dists, owners, n_vote)


def predict(store: ModelStore, x, n_vote: int) -> int:
    """Class id with the highest vote total (ties to the lowest id)."""
    return _argmax_class(predict_scores(store, x, n_vote))


def predict_batch(store: ModelStore, X, n_vote: int) -> np.ndarray:
    """predict() applied to each row of X; one shared centroid registry."""
    if n_vote < 1:
        raise ValueError("n_vote must be >= 1")
    means, owners = store.registry()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != means.shape[1]:
        raise DimensionMismatchError(
            f"test matrix {X.shape} incompatible with centroid dim {means.shape[1]}"
        )
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        dists = distances_to_rows(X[i], means)
        out[i] = _argmax_class(_vote(dists, owners, n_vote))
    return out


def predict_ncm(per_class_means: dict[int, np.ndarray], x) -> int:
    """Nearest-class-mean oracle; ties to the lowest class id."""
    if not per_class_means:
        raise ValueError("no class means given")
    best_id = -1
    best_dist = np.inf
    for cid in sorted(per_class_means):
        d = euclidean_distance(x, per_class_means[cid])
        if d < best_dist:
            best_dist = d
            best_id = cid
    return best_id


def predict_1nn(train: Dataset, x) -> int:
    """1-nearest-neighbor oracle; ties to the lowest (label, index)."""
    if len(train) == 0:
        raise ValueError("empty training set")
    dists = distances_to_rows(x, train.vectors)
    m = dists.min()
    candidates = np.flatnonzero(dists == m)
    best = min(candidates, key=lambda i: (int(train.labels[i]), int(i)))
    return int(train.labels[best])
