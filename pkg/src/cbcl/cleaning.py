"""Monte-Carlo simulation of the table-cleaning task.

Each trial puts n_objects on a virtual table, n_targets of them from the
class to be cleaned. Every object passes through three fallible stages:

1. detection: an injected independent Bernoulli miss per object,
2. classification: the real centroid classifier applied to a held-out
   feature vector sampled from the object's class (never training data),
3. movement: targets that were detected and correctly classified are
   moved, failing with an injected Bernoulli probability.

Errors are stage-conditional: classification is measured only over
detected objects, movement only over detected-and-correctly-classified
targets. Trials are seeded independently from (seed, trial index), so a
campaign's outcome does not depend on execution order or parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import ModelStore
from .features import Dataset
from .rng import SplitMix64, derive_seed
from .voting import predict


@dataclass(frozen=True)
class CleaningTrialSpec:
    n_objects: int
    n_targets: int
    target_class: int
    p_detect_miss: float
    p_move_fail: float
    seed: int

    def __post_init__(self):
        if not (1 <= self.n_targets <= self.n_objects):
            raise ValueError("need 1 <= n_targets <= n_objects")
        if not (0.0 <= self.p_detect_miss <= 1.0 and 0.0 <= self.p_move_fail <= 1.0):
            raise ValueError("probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class ObjectOutcome:
    class_id: int
    is_target: bool
    detected: bool
    predicted: int | None  # None when undetected
    move_attempted: bool
    move_failed: bool

    @property
    def classified_correctly(self) -> bool | None:
        return None if self.predicted is None else self.predicted == self.class_id


@dataclass(frozen=True)
class StageCounts:
    objects: int = 0
    undetected: int = 0
    detected: int = 0
    misclassified: int = 0
    move_attempts: int = 0
    move_failures: int = 0


@dataclass(frozen=True)
class ErrorBreakdown:
    """Stage-conditional error percentages of the cleaning task."""

    detection_error: float
    classification_error: float
    movement_error: float

    def __post_init__(self):
        for v in (self.detection_error, self.classification_error, self.movement_error):
            if not (0.0 <= v <= 100.0):
                raise ValueError("error percentages must lie in [0, 100]")


def _sample_distractors(rng: SplitMix64, others: list[int], k: int) -> list[int]:
    if k == 0:
        return []
    if not others:
        raise ValueError("no non-target classes available for distractors")
    if k <= len(others):
        pool = list(others)
        rng.shuffle(pool)
        return pool[:k]
    return [others[rng.bounded(len(others))] for _ in range(k)]


def run_trial(
    spec: CleaningTrialSpec,
    store: ModelStore,
    test_pool: Dataset,
    n_vote: int,
    trial_index: int = 0,
) -> list[ObjectOutcome]:
    """Simulate one table; outcomes are listed targets-first.

    Distractor classes are drawn from the store's other classes, without
    replacement when enough exist. Held-out vectors come from test_pool;
    a sampled class with no pool vectors is an error.
    """
    if spec.target_class not in store.models:
        raise ValueError(f"target class {spec.target_class} not learned")
    rng = SplitMix64(derive_seed(spec.seed, trial_index))
    others = [c for c in store.class_ids() if c != spec.target_class]
    classes = [spec.target_class] * spec.n_targets
    classes += _sample_distractors(rng, others, spec.n_objects - spec.n_targets)

    outcomes = []
    for cid in classes:
        detected = rng.next_f64() >= spec.p_detect_miss
        predicted = None
        move_attempted = False
        move_failed = False
        if detected:
            pool_idx = np.flatnonzero(test_pool.labels == cid)
            if pool_idx.size == 0:
                raise ValueError(f"no held-out vectors for class {cid}")
            vec = test_pool.vectors[pool_idx[rng.bounded(pool_idx.size)]]
            predicted = predict(store, vec.astype(np.float64), n_vote)
            if cid == spec.target_class and predicted == cid:
                move_attempted = True
                move_failed = rng.next_f64() < spec.p_move_fail
        outcomes.append(
            ObjectOutcome(cid, cid == spec.target_class, detected, predicted, move_attempted, move_failed)
        )
    return outcomes


def run_campaign(
    spec: CleaningTrialSpec,
    store: ModelStore,
    test_pool: Dataset,
    n_vote: int,
    n_trials: int,
) -> tuple[ErrorBreakdown, StageCounts]:
    """Aggregate n_trials independent trials into the three-way breakdown."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    objects = undetected = detected = misclassified = attempts = failures = 0
    for t in range(n_trials):
        for o in run_trial(spec, store, test_pool, n_vote, t):
            objects += 1
            if not o.detected:
                undetected += 1
                continue
            detected += 1
            if o.predicted != o.class_id:
                misclassified += 1
            if o.move_attempted:
                attempts += 1
                if o.move_failed:
                    failures += 1
    counts = StageCounts(objects, undetected, detected, misclassified, attempts, failures)
    breakdown = ErrorBreakdown(
        detection_error=100.0 * undetected / objects,
        classification_error=100.0 * misclassified / detected if detected else 0.0,
        movement_error=100.0 * failures / attempts if attempts else 0.0,
    )
    return breakdown, counts


def format_breakdown(breakdown: ErrorBreakdown) -> str:
    """Three-row table with the task's canonical error names."""
    rows = [
        ("Detection Error", breakdown.detection_error),
        ("Classification Error", breakdown.classification_error),
        ("Movement Error", breakdown.movement_error),
    ]
    width = max(len(name) for name, _ in rows)
    lines = [f"{'Error Type':<{width}}  Error (%)"]
    for name, value in rows:
        lines.append(f"{name:<{width}}  {value:.2f}")
    return "\n".join(lines)
