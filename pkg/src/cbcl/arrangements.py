"""Object-arrangement concepts learned from single examples.

A scene of labeled bounding boxes is encoded as a binary vector with three
blocks over the N known classes: presence (N), left/right (N x N) and
above/below (N x N), giving length N + 2*N*N (990 for N=22). Each pair of
objects contributes exactly one relation fact, chosen by the dominant axis
of the offset between box centers; the transposed relations (right, below)
are implicit in the matrix orientation.

An arrangement concept is one stored vector ("centroid"). Checking a test
scene finds the nearest stored vector(s) by Hamming distance (equal to
squared Euclidean on binary vectors) and diffs the presence blocks to call
objects missing or wrong. Exactly equidistant centroids are all reported
and their predictions merged.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from pathlib import Path

import numpy as np

from .features import DataError


class Relation(Enum):
    LEFT_OF = "left_of"
    ABOVE = "above"


@dataclass(frozen=True)
class SceneObject:
    label: int
    box: tuple[float, float, float, float]  # x_min, y_min, x_max, y_max

    def __post_init__(self):
        x_min, y_min, x_max, y_max = self.box
        if not (x_min < x_max and y_min < y_max):
            raise ValueError(f"degenerate box {self.box}")
        if self.label < 0:
            raise ValueError("labels must be non-negative")

    @property
    def center(self) -> tuple[float, float]:
        x_min, y_min, x_max, y_max = self.box
        return (x_min + x_max) / 2.0, (y_min + y_max) / 2.0


@dataclass(frozen=True)
class Scene:
    objects: tuple[SceneObject, ...]
    image_size: tuple[int, int]  # width, height; y grows downward

    def __post_init__(self):
        w, h = self.image_size
        if w <= 0 or h <= 0:
            raise ValueError("image size must be positive")
        labels = [o.label for o in self.objects]
        if len(set(labels)) != len(labels):
            dupes = sorted({l for l in labels if labels.count(l) > 1})
            raise ValueError(f"more than one object of class(es) {dupes} in scene")
        for o in self.objects:
            x_min, y_min, x_max, y_max = o.box
            if x_min < 0 or y_min < 0 or x_max > w or y_max > h:
                raise ValueError(f"box {o.box} outside image {self.image_size}")


def derive_relations(scene: Scene) -> list[tuple[int, int, Relation]]:
    """One spatial fact per object pair, from box centers.

    The axis with the larger absolute center offset decides the relation
    (ties, including coincident centers, go to LEFT_OF with the lower class
    id as the subject). Facts read (i, j, LEFT_OF): class i is left of
    class j; (i, j, ABOVE): class i is above class j.
    """
    facts: list[tuple[int, int, Relation]] = []
    objects = sorted(scene.objects, key=lambda o: o.label)
    for a, b in combinations(objects, 2):
        (ax, ay), (bx, by) = a.center, b.center
        if abs(ax - bx) >= abs(ay - by):
            if ax < bx or (ax == bx and a.label < b.label):
                facts.append((a.label, b.label, Relation.LEFT_OF))
            else:
                facts.append((b.label, a.label, Relation.LEFT_OF))
        else:
            if ay < by:
                facts.append((a.label, b.label, Relation.ABOVE))
            else:
                facts.append((b.label, a.label, Relation.ABOVE))
    return facts


def vector_length(n_classes: int) -> int:
    return n_classes + 2 * n_classes * n_classes


def encode(scene: Scene, n_classes: int) -> np.ndarray:
    """Binary presence + relation vector of length N + 2*N*N (uint8)."""
    for o in scene.objects:
        if o.label >= n_classes:
            raise ValueError(f"label {o.label} outside the {n_classes}-class vocabulary")
    n = n_classes
    bits = np.zeros(vector_length(n), dtype=np.uint8)
    for o in scene.objects:
        bits[o.label] = 1
    for i, j, rel in derive_relations(scene):
        if rel is Relation.LEFT_OF:
            bits[n + i * n + j] = 1
        else:
            bits[n + n * n + i * n + j] = 1
    return bits


@dataclass
class ArrangementStore:
    """Named single-example arrangement centroids over a fixed class count."""

    n_classes: int
    centroids: list[tuple[str, np.ndarray]] = field(default_factory=list)

    def names(self) -> list[str]:
        return [name for name, _ in self.centroids]


def learn_arrangement(store: ArrangementStore, name: str, scene: Scene) -> ArrangementStore:
    """Store the scene's encoding under a new name (single training example).

    The store is appended in place and returned; on any error it is left
    unchanged.
    """
    vector = encode(scene, store.n_classes)  # encode first: errors leave the store intact
    if name in store.names():
        raise ValueError(f"arrangement {name!r} already learned")
    store.centroids.append((name, vector))
    return store


@dataclass(frozen=True)
class ArrangementVerdict:
    closest: tuple[str, ...]  # all centroids at the minimum distance
    kind: str  # "missing" | "wrong" | "consistent"
    missing_classes: frozenset[int]
    wrong_pairs: frozenset[tuple[int, int]]  # (observed, expected replacement)
    extra_classes: frozenset[int]  # observed with no expected counterpart
    relation_mismatch: bool  # presence agrees but relations differ
    low_confidence: bool  # more than one swap inferred for some centroid
    distance: int  # Hamming distance to the closest centroid(s)


def _diff_presence(target: np.ndarray, centroid: np.ndarray, n: int):
    t_present = {int(i) for i in np.flatnonzero(target[:n])}
    c_present = {int(i) for i in np.flatnonzero(centroid[:n])}
    expected = sorted(c_present - t_present)
    observed = sorted(t_present - c_present)
    pairs = list(zip(observed, expected))
    missing = expected[len(pairs) :]
    extras = observed[len(pairs) :]
    return pairs, missing, extras


def check_arrangement(store: ArrangementStore, scene: Scene) -> ArrangementVerdict:
    """Compare a scene against the stored arrangements.

    Presence differences drive the verdict: classes expected by the nearest
    centroid but absent are missing; absent-expected classes paired with
    present-unexpected ones (both sides in ascending id order) are wrong
    with a predicted replacement. A verdict with any wrong pair is kind
    "wrong", else "missing" if anything is missing, else "consistent".
    """
    if not store.centroids:
        raise ValueError("no arrangements learned yet")
    target = encode(scene, store.n_classes)
    dists = np.asarray(
        [int(np.count_nonzero(vec != target)) for _, vec in store.centroids], dtype=np.int64
    )
    best = int(dists.min())
    tied = [k for k in range(len(store.centroids)) if dists[k] == best]

    names: list[str] = []
    missing: set[int] = set()
    wrong: set[tuple[int, int]] = set()
    extras: set[int] = set()
    relation_mismatch = False
    low_confidence = False
    for k in tied:
        name, vec = store.centroids[k]
        names.append(name)
        pairs, miss, extra = _diff_presence(target, vec, store.n_classes)
        wrong.update(pairs)
        missing.update(miss)
        extras.update(extra)
        if len(pairs) > 1:
            low_confidence = True
        if not pairs and not miss and not extra and best > 0:
            relation_mismatch = True
    if wrong:
        kind = "wrong"
    elif missing:
        kind = "missing"
    else:
        kind = "consistent"
    return ArrangementVerdict(
        closest=tuple(names),
        kind=kind,
        missing_classes=frozenset(missing),
        wrong_pairs=frozenset(wrong),
        extra_classes=frozenset(extras),
        relation_mismatch=relation_mismatch,
        low_confidence=low_confidence,
        distance=best,
    )


# ---------------------------------------------------------------------------
# scene file and store persistence
# ---------------------------------------------------------------------------


def read_scene(path, name_to_label: dict[str, int]) -> Scene:
    """Parse a scene file: header ``image <width> <height>``, then one line
    ``label_name x_min y_min x_max y_max`` per object."""
    p = Path(path)
    lines = [l for l in p.read_text(encoding="utf-8").splitlines() if l.strip()]
    if not lines:
        raise DataError(f"{p}: empty scene file")
    header = lines[0].split()
    if len(header) != 3 or header[0] != "image":
        raise DataError(f"{p}:1: expected header 'image <width> <height>'")
    try:
        size = (int(header[1]), int(header[2]))
    except ValueError:
        raise DataError(f"{p}:1: bad image size") from None
    objects = []
    for lineno, line in enumerate(lines[1:], 2):
        parts = line.split()
        if len(parts) != 5:
            raise DataError(f"{p}:{lineno}: expected 'label x_min y_min x_max y_max'")
        label_name = parts[0]
        if label_name not in name_to_label:
            raise DataError(f"{p}:{lineno}: unknown label {label_name!r}")
        try:
            box = tuple(float(v) for v in parts[1:])
        except ValueError:
            raise DataError(f"{p}:{lineno}: bad box coordinates") from None
        objects.append(SceneObject(name_to_label[label_name], box))
    try:
        return Scene(tuple(objects), size)
    except ValueError as exc:
        raise DataError(f"{p}: {exc}") from None


def write_scene(scene: Scene, path, label_to_name: dict[int, str]) -> None:
    w, h = scene.image_size
    lines = [f"image {w} {h}"]
    for o in scene.objects:
        x_min, y_min, x_max, y_max = o.box
        lines.append(f"{label_to_name[o.label]} {x_min:g} {y_min:g} {x_max:g} {y_max:g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _runs_of(bits: np.ndarray) -> list[int]:
    """Alternating run lengths starting with the zero-run (possibly 0)."""
    runs: list[int] = []
    current = 0
    count = 0
    for b in bits:
        if int(b) == current:
            count += 1
        else:
            runs.append(count)
            current = int(b)
            count = 1
    runs.append(count)
    return runs


def save_arrangements(store: ArrangementStore, path) -> None:
    """Versioned text format: header, then one ``name<TAB>runs`` line each."""
    lines = [f"CBAR v1 {store.n_classes}"]
    for name, vec in store.centroids:
        if "\t" in name or "\n" in name:
            raise ValueError("arrangement names may not contain tabs or newlines")
        lines.append(name + "\t" + " ".join(str(r) for r in _runs_of(vec)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_arrangements(path) -> ArrangementStore:
    p = Path(path)
    lines = p.read_text(encoding="utf-8").splitlines()
    if not lines or not re.fullmatch(r"CBAR v1 \d+", lines[0]):
        raise DataError(f"{p}:1: expected header 'CBAR v1 <n_classes>'")
    n_classes = int(lines[0].rsplit(" ", 1)[1])
    store = ArrangementStore(n_classes)
    expected_len = vector_length(n_classes)
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        if "\t" not in line:
            raise DataError(f"{p}:{lineno}: expected 'name<TAB>runs'")
        name, runs_text = line.split("\t", 1)
        try:
            runs = [int(r) for r in runs_text.split()]
        except ValueError:
            raise DataError(f"{p}:{lineno}: bad run length") from None
        if sum(runs) != expected_len or any(r < 0 for r in runs):
            raise DataError(
                f"{p}:{lineno}: runs sum to {sum(runs)}, expected {expected_len}"
            )
        bits = np.zeros(expected_len, dtype=np.uint8)
        pos = 0
        value = 0
        for r in runs:
            if value:
                bits[pos : pos + r] = 1
            pos += r
            value ^= 1
        if name in store.names():
            raise DataError(f"{p}:{lineno}: duplicate arrangement {name!r}")
        store.centroids.append((name, bits))
    return store
