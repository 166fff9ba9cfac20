"""Per-class streaming centroid clustering.

Each class is clustered independently from an ordered stream of feature
vectors. The first vector seeds the first centroid; every later vector
either merges into its nearest centroid (when strictly closer than the
distance threshold) or starts a new one. A merge updates the centroid to
the weighted mean of its assigned vectors, so every centroid remains the
exact arithmetic mean of the examples assigned to it.

Clustering is order-dependent by design: determinism is guaranteed for a
fixed input order, not across reorderings. Because classes never share
state, learning classes in any incremental grouping produces bit-identical
models to learning them all at once.

Centroid means are held in float64 in memory. The persistence format
("CBMS") stores means and thresholds at f32, so saving is lossy in the
last bits; loading re-expands to float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .features import DataError, DimensionMismatchError, distances_to_rows

STORE_MAGIC = b"CBMS"
STORE_VERSION = 1


class Centroid(NamedTuple):
    mean: np.ndarray  # (dim,) float64
    weight: int


@dataclass
class ClassModel:
    """Centroid set for one class, plus the threshold it was built with."""

    class_id: int
    means: np.ndarray  # (n_centroids, dim) float64
    weights: np.ndarray  # (n_centroids,) int64
    distance_threshold_used: float

    def __post_init__(self):
        self.means = np.ascontiguousarray(self.means, dtype=np.float64)
        self.weights = np.ascontiguousarray(self.weights, dtype=np.int64)
        if self.means.ndim != 2 or self.means.shape[0] < 1:
            raise DimensionMismatchError("a class model needs at least one centroid")
        if self.weights.shape != (self.means.shape[0],):
            raise DimensionMismatchError("one weight per centroid required")
        if (self.weights < 1).any():
            raise ValueError("centroid weights must be >= 1")

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_centroids(self) -> int:
        return self.means.shape[0]

    @property
    def centroids(self) -> list[Centroid]:
        return [Centroid(self.means[i], int(self.weights[i])) for i in range(self.n_centroids)]


@dataclass
class ModelStore:
    """All learned class models; the classifier state."""

    models: dict[int, ClassModel] = field(default_factory=dict)
    dim: int = 0

    def __post_init__(self):
        for cid, model in self.models.items():
            if model.class_id != cid:
                raise ValueError(f"model keyed {cid} carries class_id {model.class_id}")
            if self.dim and model.dim != self.dim:
                raise DimensionMismatchError(
                    f"class {cid} has dim {model.dim}, store has dim {self.dim}"
                )
        self._registry: tuple[np.ndarray, np.ndarray] | None = None

    def class_ids(self) -> list[int]:
        return sorted(self.models)

    @property
    def n_classes(self) -> int:
        return len(self.models)

    @property
    def total_centroids(self) -> int:
        return sum(m.n_centroids for m in self.models.values())

    def registry(self) -> tuple[np.ndarray, np.ndarray]:
        """All centroids stacked in (class id, centroid index) order.

        Returns (means, owners) where owners[k] is the class id of row k.
        Cached; a store is treated as immutable once built.
        """
        if self._registry is None:
            if not self.models:
                raise ValueError("model store is empty")
            means = np.vstack([self.models[c].means for c in self.class_ids()])
            owners = np.concatenate(
                [
                    np.full(self.models[c].n_centroids, c, dtype=np.int64)
                    for c in self.class_ids()
                ]
            )
            self._registry = (means, owners)
        return self._registry


def _as_example_matrix(examples, dim: int | None = None) -> np.ndarray:
    x = np.asarray(examples, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise DimensionMismatchError("examples must form a 2-D array")
    if dim is not None and x.shape[1] != dim:
        raise DimensionMismatchError(f"example dim {x.shape[1]} != model dim {dim}")
    if not np.all(np.isfinite(x)):
        raise DataError("non-finite value in examples")
    return x


def _absorb(means: list[np.ndarray], weights: list[int], stream: np.ndarray, threshold: float) -> None:
    for x in stream:
        dists = distances_to_rows(x, np.asarray(means))
        nearest = int(np.argmin(dists))  # argmin keeps the lowest index on ties
        if dists[nearest] < threshold:
            w = weights[nearest]
            means[nearest] = (w * means[nearest] + x) / (w + 1)
            weights[nearest] = w + 1
        else:
            means.append(x.copy())
            weights.append(1)


def cluster_class(examples, class_id: int, distance_threshold: float) -> ClassModel:
    """Cluster one class's examples, in the given order, into centroids."""
    if distance_threshold < 0:
        raise ValueError("distance_threshold must be >= 0")
    x = _as_example_matrix(examples)
    if x.shape[0] == 0:
        raise ValueError("cannot cluster an empty example list")
    means = [x[0].copy()]
    weights = [1]
    _absorb(means, weights, x[1:], distance_threshold)
    return ClassModel(class_id, np.asarray(means), np.asarray(weights), distance_threshold)


def update_class(model: ClassModel, more) -> ClassModel:
    """Resume the clustering stream with additional examples.

    Equivalent to having clustered the concatenated stream in one call with
    the same threshold. The input model is left untouched.
    """
    x = _as_example_matrix(more, model.dim)
    means = [m.copy() for m in model.means]
    weights = [int(w) for w in model.weights]
    _absorb(means, weights, x, model.distance_threshold_used)
    return ClassModel(model.class_id, np.asarray(means), np.asarray(weights), model.distance_threshold_used)


def learn_increment(
    store: ModelStore, per_class_examples: dict[int, np.ndarray], distance_threshold: float
) -> ModelStore:
    """Cluster (or extend) each listed class independently.

    Returns a new store; models of classes not listed are carried over
    unchanged. New classes are clustered with the given threshold, existing
    classes keep the threshold they were created with.
    """
    if not per_class_examples:
        raise ValueError("no classes to learn")
    models = dict(store.models)
    dim = store.dim
    for cid in sorted(per_class_examples):
        examples = per_class_examples[cid]
        if cid in models:
            models[cid] = update_class(models[cid], examples)
        else:
            models[cid] = cluster_class(examples, cid, distance_threshold)
        dim = models[cid].dim if not dim else dim
        if models[cid].dim != dim:
            raise DimensionMismatchError(
                f"class {cid} has dim {models[cid].dim}, expected {dim}"
            )
    return ModelStore(models, dim)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def save_store(store: ModelStore, path) -> None:
    """Write a store to the versioned CBMS binary format (means at f32)."""
    with open(path, "wb") as f:
        f.write(struct.pack("<4sBII", STORE_MAGIC, STORE_VERSION, store.dim, store.n_classes))
        for cid in store.class_ids():
            model = store.models[cid]
            f.write(struct.pack("<IfI", cid, model.distance_threshold_used, model.n_centroids))
            for i in range(model.n_centroids):
                f.write(struct.pack("<I", int(model.weights[i])))
                f.write(model.means[i].astype("<f4").tobytes())


def load_store(path) -> ModelStore:
    path = Path(path)
    raw = path.read_bytes()
    head = struct.Struct("<4sBII")
    if len(raw) < head.size:
        raise DataError(f"{path}: truncated store header")
    magic, version, dim, n_classes = head.unpack_from(raw, 0)
    if magic != STORE_MAGIC or version != STORE_VERSION:
        raise DataError(f"{path}: bad magic/version {magic!r} v{version}")
    offset = head.size
    models: dict[int, ClassModel] = {}
    class_head = struct.Struct("<IfI")
    for _ in range(n_classes):
        if offset + class_head.size > len(raw):
            raise DataError(f"{path}: truncated class header at byte {offset}")
        cid, threshold, n_centroids, = class_head.unpack_from(raw, offset)
        offset += class_head.size
        weights = np.empty(n_centroids, dtype=np.int64)
        means = np.empty((n_centroids, dim), dtype=np.float64)
        for i in range(n_centroids):
            if offset + 4 + 4 * dim > len(raw):
                raise DataError(f"{path}: truncated centroid at byte {offset}")
            (weights[i],) = struct.unpack_from("<I", raw, offset)
            means[i] = np.frombuffer(raw, dtype="<f4", count=dim, offset=offset + 4)
            offset += 4 + 4 * dim
        models[cid] = ClassModel(cid, means, weights, float(threshold))
    if offset != len(raw):
        raise DataError(f"{path}: {len(raw) - offset} trailing bytes at byte {offset}")
    return ModelStore(models, dim)
