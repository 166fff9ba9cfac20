"""Feature vectors, datasets, feature-file I/O, and synthetic data.

Feature values are stored at 32-bit precision (on disk and in Dataset
arrays); distance arithmetic is carried out in float64.

Binary feature file ("CBFV"):

    magic "CBFV" | version 0x01 | u32 dim (LE) | u32 count (LE)
    then count records of: u32 label_id | dim * f32 (LE)

A sidecar label map lives next to the feature file at ``<path>.labels``,
one UTF-8 line per class: ``label_id<TAB>name``.

CSV format: header ``label,f0,...,f{dim-1}``, one row per example, same
sidecar.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

from .rng import SplitMix64

HEADER_MAGIC = b"CBFV"
HEADER_VERSION = 1
_HEADER = struct.Struct("<4sBII")


class DataError(ValueError):
    """Base class for malformed or inconsistent input data."""


class MalformedHeaderError(DataError):
    pass


class DimensionMismatchError(DataError):
    pass


class UnknownLabelError(DataError):
    pass


class NonFiniteValueError(DataError):
    pass


class LabeledExample(NamedTuple):
    vector: np.ndarray
    label: int


def euclidean_distance(a, b) -> float:
    """Euclidean distance between two vectors, accumulated in float64."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise DimensionMismatchError("expected 1-D vectors")
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatchError(
            f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}"
        )
    d = a - b
    return float(np.sqrt(np.sum(d * d)))


def distances_to_rows(x, rows: np.ndarray) -> np.ndarray:
    """Euclidean distance from vector x to every row of a matrix, in float64.

    Shared by clustering and prediction so both see bit-identical values.
    """
    x = np.asarray(x, dtype=np.float64)
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or x.ndim != 1 or rows.shape[1] != x.shape[0]:
        raise DimensionMismatchError(
            f"cannot compare vector of dim {x.shape} against rows {rows.shape}"
        )
    d = rows - x
    return np.sqrt(np.sum(d * d, axis=1))


def validate_label_map(label_names: dict[int, str]) -> None:
    if not label_names:
        raise DataError("label map is empty")
    ids = sorted(label_names)
    if ids != list(range(len(ids))):
        raise DataError(f"label ids must be dense 0..N-1, got {ids}")
    names = list(label_names.values())
    if len(set(names)) != len(names):
        raise DataError("label names must be unique")


@dataclass
class Dataset:
    """Immutable-by-convention container of labeled feature vectors."""

    vectors: np.ndarray  # (n, dim) float32
    labels: np.ndarray  # (n,) int64
    label_names: dict[int, str]

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.vectors.ndim != 2:
            raise DimensionMismatchError("vectors must be a 2-D array")
        if self.vectors.shape[1] < 1:
            raise DimensionMismatchError("feature dimension must be positive")
        if self.labels.shape != (self.vectors.shape[0],):
            raise DimensionMismatchError("one label per vector required")
        if not np.all(np.isfinite(self.vectors)):
            raise NonFiniteValueError("non-finite value in feature vectors")
        validate_label_map(self.label_names)
        known = np.fromiter(self.label_names, dtype=np.int64, count=len(self.label_names))
        if self.labels.size and not np.isin(self.labels, known).all():
            bad = set(self.labels.tolist()) - set(self.label_names)
            raise UnknownLabelError(f"labels not in label map: {sorted(bad)}")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def __iter__(self) -> Iterator[LabeledExample]:
        for i in range(len(self)):
            yield LabeledExample(self.vectors[i], int(self.labels[i]))

    def class_ids(self) -> list[int]:
        """Sorted ids of classes that actually occur in this dataset."""
        return sorted(int(c) for c in np.unique(self.labels))

    def vectors_for_class(self, class_id: int) -> np.ndarray:
        return self.vectors[self.labels == class_id]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.vectors[idx], self.labels[idx], self.label_names)


# ---------------------------------------------------------------------------
# label map sidecar
# ---------------------------------------------------------------------------


def label_map_path(path) -> Path:
    return Path(str(path) + ".labels")


def write_label_map(label_names: dict[int, str], path) -> None:
    validate_label_map(label_names)
    lines = [f"{i}\t{label_names[i]}\n" for i in sorted(label_names)]
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_label_map_raw(path) -> dict[int, str]:
    """Parse a sidecar as written, without id normalization."""
    p = Path(path)
    if not p.exists():
        raise DataError(f"label map not found: {p}")
    label_names: dict[int, str] = {}
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"{p}:{lineno}: expected 'label_id<TAB>name'")
        try:
            label_id = int(parts[0])
        except ValueError:
            raise DataError(f"{p}:{lineno}: bad label id {parts[0]!r}") from None
        if label_id in label_names:
            raise DataError(f"{p}:{lineno}: duplicate label id {label_id}")
        label_names[label_id] = parts[1]
    if not label_names:
        raise DataError(f"{p}: label map is empty")
    names = list(label_names.values())
    if len(set(names)) != len(names):
        raise DataError(f"{p}: label names must be unique")
    return label_names


def read_label_map(path) -> dict[int, str]:
    """Read a sidecar with external ids normalized to dense 0..N-1.

    String names are the stable identity; sparse or shifted external ids
    are remapped by ascending original id.
    """
    label_names, _ = _dense_label_map(read_label_map_raw(path))
    return label_names


def _dense_label_map(raw: dict[int, str]) -> tuple[dict[int, str], dict[int, int]]:
    remap = {old: new for new, old in enumerate(sorted(raw))}
    return {remap[old]: name for old, name in raw.items()}, remap


# ---------------------------------------------------------------------------
# feature file I/O
# ---------------------------------------------------------------------------


def save_features(ds: Dataset, path, format: str = "binary") -> None:
    """Write a dataset plus its ``<path>.labels`` sidecar.

    The binary format round-trips bit-exactly; CSV round-trips within
    text-formatting precision.
    """
    path = Path(path)
    if format == "binary":
        with open(path, "wb") as f:
            f.write(_HEADER.pack(HEADER_MAGIC, HEADER_VERSION, ds.dim, len(ds)))
            for i in range(len(ds)):
                f.write(struct.pack("<I", int(ds.labels[i])))
                f.write(ds.vectors[i].astype("<f4").tobytes())
    elif format == "csv":
        header = "label," + ",".join(f"f{j}" for j in range(ds.dim))
        with open(path, "w", encoding="utf-8") as f:
            f.write(header + "\n")
            for i in range(len(ds)):
                values = ",".join(repr(float(v)) for v in ds.vectors[i])
                f.write(f"{int(ds.labels[i])},{values}\n")
    else:
        raise ValueError(f"unknown format {format!r}")
    write_label_map(ds.label_names, label_map_path(path))


def load_features(path, format: str = "binary", l2_normalize: bool = False) -> Dataset:
    """Read a feature file and its sidecar label map into a Dataset.

    l2_normalize optionally rescales each vector to unit length at
    ingestion (off by default; zero vectors are left untouched).
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"feature file not found: {path}")
    if format == "binary":
        vectors, labels = _read_binary(path)
    elif format == "csv":
        vectors, labels = _read_csv(path)
    else:
        raise ValueError(f"unknown format {format!r}")
    label_names, remap = _dense_label_map(read_label_map_raw(label_map_path(path)))
    unknown = set(labels.tolist()) - set(remap)
    if unknown:
        raise UnknownLabelError(f"{path}: label ids {sorted(unknown)} missing from label map")
    if labels.size:
        labels = np.asarray([remap[int(l)] for l in labels], dtype=np.int64)
    if l2_normalize and vectors.size:
        norms = np.sqrt(np.sum(vectors.astype(np.float64) ** 2, axis=1))
        nonzero = norms > 0.0
        scaled = vectors.astype(np.float64)
        scaled[nonzero] /= norms[nonzero, None]
        vectors = scaled.astype(np.float32)
    return Dataset(vectors, labels, label_names)


def _read_binary(path: Path) -> tuple[np.ndarray, np.ndarray]:
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise MalformedHeaderError(
            f"{path}: malformed header, file has {len(raw)} bytes, need {_HEADER.size}"
        )
    magic, version, dim, count = _HEADER.unpack_from(raw, 0)
    if magic != HEADER_MAGIC:
        raise MalformedHeaderError(f"{path}: bad magic {magic!r} at byte 0")
    if version != HEADER_VERSION:
        raise MalformedHeaderError(f"{path}: unsupported version {version} at byte 4")
    if dim < 1:
        raise MalformedHeaderError(f"{path}: non-positive dim {dim} at byte 5")
    record_size = 4 + 4 * dim
    expected = _HEADER.size + count * record_size
    if len(raw) != expected:
        raise MalformedHeaderError(
            f"{path}: expected {expected} bytes for {count} records of dim {dim}, "
            f"got {len(raw)} (truncation at byte {min(len(raw), expected)})"
        )
    labels = np.empty(count, dtype=np.int64)
    vectors = np.empty((count, dim), dtype=np.float32)
    offset = _HEADER.size
    for i in range(count):
        (labels[i],) = struct.unpack_from("<I", raw, offset)
        vectors[i] = np.frombuffer(raw, dtype="<f4", count=dim, offset=offset + 4)
        if not np.all(np.isfinite(vectors[i])):
            raise NonFiniteValueError(
                f"{path}: non-finite value in record {i} at byte {offset + 4}"
            )
        offset += record_size
    return vectors, labels


def _read_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        cols = header.split(",")
        if len(cols) < 2 or cols[0] != "label" or cols[1:] != [
            f"f{j}" for j in range(len(cols) - 1)
        ]:
            raise MalformedHeaderError(f"{path}: malformed header {header!r}")
        dim = len(cols) - 1
        labels_list: list[int] = []
        rows: list[np.ndarray] = []
        for lineno, line in enumerate(f, 2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != dim + 1:
                raise DimensionMismatchError(
                    f"{path}:{lineno}: expected {dim} features, got {len(fields) - 1}"
                )
            try:
                labels_list.append(int(fields[0]))
                row = np.asarray([float(v) for v in fields[1:]], dtype=np.float32)
            except ValueError:
                raise DataError(f"{path}:{lineno}: unparsable value") from None
            if not np.all(np.isfinite(row)):
                raise NonFiniteValueError(f"{path}:{lineno}: non-finite value")
            rows.append(row)
    vectors = (
        np.stack(rows) if rows else np.empty((0, dim), dtype=np.float32)
    )
    return vectors, np.asarray(labels_list, dtype=np.int64)


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Gaussian-cluster dataset: one uniform mean per class, isotropic noise."""

    n_classes: int
    dim: int
    per_class_count: int
    class_mean_scale: float = 1.0
    within_class_stddev: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 1 or self.dim < 1:
            raise ValueError("n_classes and dim must be positive")
        if self.per_class_count < 1:
            raise ValueError("per_class_count must be >= 1")
        if self.within_class_stddev < 0:
            raise ValueError("within_class_stddev must be >= 0")


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Generate the Gaussian-cluster dataset described by spec.

    Draw order is fixed: for each class in id order, first ``dim`` uniforms
    in [-class_mean_scale, class_mean_scale) for the mean, then a single
    block of ``per_class_count * dim`` standard normals (example-major).
    Identical seeds therefore give identical datasets.
    """
    rng = SplitMix64(spec.seed)
    n = spec.n_classes * spec.per_class_count
    vectors = np.empty((n, spec.dim), dtype=np.float32)
    labels = np.empty(n, dtype=np.int64)
    row = 0
    for c in range(spec.n_classes):
        mean = rng.uniform_array(-spec.class_mean_scale, spec.class_mean_scale, spec.dim)
        noise = rng.normal_array(spec.per_class_count * spec.dim)
        noise = noise.reshape(spec.per_class_count, spec.dim)
        block = mean + spec.within_class_stddev * noise
        vectors[row : row + spec.per_class_count] = block.astype(np.float32)
        labels[row : row + spec.per_class_count] = c
        row += spec.per_class_count
    label_names = {c: f"class_{c}" for c in range(spec.n_classes)}
    return Dataset(vectors, labels, label_names)


# ---------------------------------------------------------------------------
# shot splits
# ---------------------------------------------------------------------------


def split_shots(ds: Dataset, shots: int, seed: int) -> tuple[Dataset, Dataset]:
    """Per class, select exactly ``shots`` training examples at random.

    The remainder of each class becomes test data. Selection is seeded and
    class-major, so a fixed (dataset, shots, seed) triple always produces
    the same split.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = SplitMix64(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for c in ds.class_ids():
        idx = np.flatnonzero(ds.labels == c)
        if len(idx) <= shots:
            raise ValueError(
                f"class {c} has {len(idx)} examples, need more than shots={shots}"
            )
        perm = rng.permutation(len(idx))
        train_idx.extend(int(i) for i in idx[perm[:shots]])
        test_idx.extend(int(i) for i in idx[perm[shots:]])
    return ds.subset(train_idx), ds.subset(test_idx)
