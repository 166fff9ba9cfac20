"""Incremental evaluation protocol.

A session fixes one train/test shot split and one random class order, then
feeds classes to a learner a few at a time. After every increment the
learner is scored on the union of the test examples of every class seen so
far. Sessions are repeated over seeds and aggregated into per-increment
means/stds plus the average incremental accuracy (the mean of a run's
per-increment accuracies, averaged over runs).

Hyperparameters for the centroid learner are tuned each increment by
k-fold cross-validation over the new classes' training examples only,
scored against the frozen centroids of previously learned classes plus the
fold's own centroids. Previously learned classes are never re-clustered.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .clustering import ModelStore, cluster_class, learn_increment, update_class
from .features import Dataset, euclidean_distance, split_shots
from .linear import TrainConfig, predict_head, run_flb_increment, run_ft_increment
from .linear import new_head
from .rng import SplitMix64, derive_seed
from .voting import Hyperparams, predict_batch

DEFAULT_HYPERPARAMS = Hyperparams(distance_threshold=0.0, n_vote=1)
DEFAULT_N_VOTE_GRID = (1, 3, 5, 10)
DEFAULT_D_QUANTILES = (0.10, 0.25, 0.50, 0.75, 0.90)
METHODS = ("cbcl", "ft", "flb")


@dataclass(frozen=True)
class IncrementPlan:
    classes_per_increment: int
    shots: int
    class_order: tuple[int, ...]
    seed: int

    def __post_init__(self):
        if self.classes_per_increment < 1:
            raise ValueError("classes_per_increment must be >= 1")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if len(set(self.class_order)) != len(self.class_order):
            raise ValueError("class_order must not repeat classes")

    def increments(self) -> list[tuple[int, ...]]:
        k = self.classes_per_increment
        return [tuple(self.class_order[i : i + k]) for i in range(0, len(self.class_order), k)]


def make_plan(ds: Dataset, classes_per_increment: int, shots: int, seed: int) -> IncrementPlan:
    """Seeded random class order over every class in the dataset."""
    order = [int(c) for c in ds.class_ids()]
    SplitMix64(derive_seed(seed, 0)).shuffle(order)
    return IncrementPlan(classes_per_increment, shots, tuple(order), seed)


@dataclass(frozen=True)
class IncrementMetrics:
    increment_index: int
    n_classes_seen: int
    accuracy: float


@dataclass
class SessionState:
    store: ModelStore
    learned_classes: list[int] = field(default_factory=list)
    hyper_history: list[Hyperparams] = field(default_factory=list)
    metrics: list[IncrementMetrics] = field(default_factory=list)


@dataclass(frozen=True)
class RunSummary:
    per_increment_mean: np.ndarray
    per_increment_std: np.ndarray
    average_incremental_accuracy: float


# ---------------------------------------------------------------------------
# hyperparameter tuning
# ---------------------------------------------------------------------------


def default_grid(new_class_data: dict[int, np.ndarray]) -> list[Hyperparams]:
    """Quantile-based threshold grid crossed with the standard vote counts.

    Thresholds are quantiles of the pooled pairwise intra-class distances
    of the new classes, which adapts the grid to unknown feature scales.
    """
    dists: list[float] = []
    for examples in new_class_data.values():
        x = np.asarray(examples, dtype=np.float64)
        for i in range(x.shape[0]):
            for j in range(i + 1, x.shape[0]):
                dists.append(euclidean_distance(x[i], x[j]))
    if not dists:
        return [DEFAULT_HYPERPARAMS]
    thresholds = np.quantile(np.asarray(dists), DEFAULT_D_QUANTILES)
    return [
        Hyperparams(float(d), n)
        for d in dict.fromkeys(float(t) for t in thresholds)
        for n in DEFAULT_N_VOTE_GRID
    ]


def _fold_of(count: int, folds: int) -> np.ndarray:
    return np.arange(count) % folds


def tune_hyperparams(
    store: ModelStore,
    new_class_data: dict[int, np.ndarray],
    grid: list[Hyperparams],
    folds: int,
) -> Hyperparams | None:
    """Pick the grid point with the best k-fold CV accuracy on new classes.

    Only the frozen old centroids and the new classes' training data take
    part. Ties prefer the smaller threshold, then the smaller vote count.
    Returns None when any new class has fewer than 2 examples, in which
    case the caller keeps its previous hyperparameters.
    """
    if not new_class_data:
        raise ValueError("no new-class data to tune on")
    if not grid:
        raise ValueError("empty hyperparameter grid")
    counts = {cid: np.asarray(v).shape[0] for cid, v in new_class_data.items()}
    min_count = min(counts.values())
    if min_count < 2:
        return None
    folds_eff = max(2, min(folds, min_count))

    fold_ids = {cid: _fold_of(counts[cid], folds_eff) for cid in new_class_data}
    best: tuple[float, float, int, Hyperparams] | None = None
    for hp in grid:
        fold_accs = []
        for f in range(folds_eff):
            models = dict(store.models)
            held_x: list[np.ndarray] = []
            held_y: list[int] = []
            for cid in sorted(new_class_data):
                x = np.asarray(new_class_data[cid], dtype=np.float64)
                train_part = x[fold_ids[cid] != f]
                held = x[fold_ids[cid] == f]
                if cid in models:
                    models[cid] = update_class(models[cid], train_part)
                else:
                    models[cid] = cluster_class(train_part, cid, hp.distance_threshold)
                held_x.append(held)
                held_y.extend([cid] * held.shape[0])
            cv_store = ModelStore(models, models[next(iter(models))].dim)
            X = np.vstack(held_x)
            preds = predict_batch(cv_store, X, hp.n_vote)
            fold_accs.append(float(np.mean(preds == np.asarray(held_y))))
        mean_acc = float(np.mean(fold_accs))
        key = (-mean_acc, hp.distance_threshold, hp.n_vote)
        if best is None or key < (-best[0], best[1], best[2]):
            best = (mean_acc, hp.distance_threshold, hp.n_vote, hp)
    assert best is not None
    return best[3]


# ---------------------------------------------------------------------------
# sessions
# ---------------------------------------------------------------------------


def subset_for_classes(ds: Dataset, classes) -> Dataset:
    """Rows whose label is in ``classes``, in original row order."""
    mask = np.isin(ds.labels, np.asarray(list(classes), dtype=np.int64))
    return ds.subset(np.flatnonzero(mask))


def _evaluate(predict_fn, test: Dataset, seen: list[int]) -> float:
    """Accuracy over the union of test examples of all seen classes."""
    eval_set = subset_for_classes(test, seen)
    preds = predict_fn(eval_set.vectors.astype(np.float64))
    return float(np.mean(preds == eval_set.labels))


def run_cbcl_session(
    ds: Dataset,
    plan: IncrementPlan,
    grid: list[Hyperparams] | None = None,
    folds: int | None = None,
    fixed_hyperparams: Hyperparams | None = None,
) -> SessionState:
    """Run the centroid learner through one full incremental session.

    With ``fixed_hyperparams`` set, tuning is skipped entirely (used by the
    batch-equals-incremental checks). Otherwise each increment tunes on its
    own new-class data, defaulting to a quantile grid and min(5, shots)
    folds.
    """
    train, test = split_shots(ds, plan.shots, plan.seed)
    folds = folds if folds is not None else min(5, plan.shots)
    state = SessionState(store=ModelStore())
    hyper = fixed_hyperparams if fixed_hyperparams is not None else DEFAULT_HYPERPARAMS
    for inc_index, classes in enumerate(plan.increments()):
        new_data = {c: train.vectors_for_class(c) for c in classes}
        if fixed_hyperparams is None:
            tuned = tune_hyperparams(
                state.store, new_data, grid if grid is not None else default_grid(new_data), folds
            )
            if tuned is not None:
                hyper = tuned
        state.store = learn_increment(state.store, new_data, hyper.distance_threshold)
        state.learned_classes.extend(classes)
        state.hyper_history.append(hyper)
        acc = _evaluate(
            lambda X: predict_batch(state.store, X, hyper.n_vote), test, state.learned_classes
        )
        state.metrics.append(IncrementMetrics(inc_index, len(state.learned_classes), acc))
    return state


def run_baseline_session(
    ds: Dataset, plan: IncrementPlan, method: str, cfg: TrainConfig
) -> list[IncrementMetrics]:
    """Run FT or FLB through the same schedule and splits as the centroid learner.

    Per-increment training seeds derive from (cfg.seed, increment index)
    identically for both methods, so their first increments coincide
    bit-for-bit.
    """
    if method not in ("ft", "flb"):
        raise ValueError(f"unknown baseline {method!r}")
    train, test = split_shots(ds, plan.shots, plan.seed)
    seen: list[int] = []
    head = new_head((), train.dim)
    metrics: list[IncrementMetrics] = []
    for inc_index, classes in enumerate(plan.increments()):
        cfg_inc = replace(cfg, seed=derive_seed(cfg.seed, inc_index))
        seen.extend(classes)
        if method == "ft":
            head = run_ft_increment(head, subset_for_classes(train, classes), classes, cfg_inc)
        else:
            head = run_flb_increment(subset_for_classes(train, seen), seen, cfg_inc)
        acc = _evaluate(lambda X: predict_head(head, X), test, seen)
        metrics.append(IncrementMetrics(inc_index, len(seen), acc))
    return metrics


def run_session(
    ds: Dataset,
    plan: IncrementPlan,
    method: str,
    grid: list[Hyperparams] | None = None,
    folds: int | None = None,
    cfg: TrainConfig | None = None,
    fixed_hyperparams: Hyperparams | None = None,
) -> list[IncrementMetrics]:
    """Dispatch one session for any of the three methods."""
    if method == "cbcl":
        return run_cbcl_session(ds, plan, grid, folds, fixed_hyperparams).metrics
    return run_baseline_session(ds, plan, method, cfg if cfg is not None else TrainConfig())


def run_many(
    ds: Dataset,
    method: str,
    n_runs: int,
    base_seed: int,
    shots: int,
    classes_per_increment: int,
    grid: list[Hyperparams] | None = None,
    folds: int | None = None,
    cfg: TrainConfig | None = None,
    fixed_hyperparams: Hyperparams | None = None,
) -> tuple[list[list[IncrementMetrics]], RunSummary]:
    """Repeat a session over derived per-run seeds and aggregate.

    Run r uses seed derive_seed(base_seed, r) for its class order, its shot
    split and (for the baselines) its training shuffles, so all three
    methods see identical schedules at equal run indices.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    runs: list[list[IncrementMetrics]] = []
    for r in range(n_runs):
        run_seed = derive_seed(base_seed, r)
        plan = make_plan(ds, classes_per_increment, shots, run_seed)
        run_cfg = replace(cfg if cfg is not None else TrainConfig(), seed=run_seed)
        runs.append(
            run_session(ds, plan, method, grid, folds, run_cfg, fixed_hyperparams)
        )
    return runs, aggregate_runs(runs)


def aggregate_runs(runs) -> RunSummary:
    """Per-increment mean and sample std over runs, plus the run-mean accuracy."""
    if not runs:
        raise ValueError("no runs to aggregate")
    accs = []
    for run in runs:
        accs.append([m.accuracy if isinstance(m, IncrementMetrics) else float(m) for m in run])
    lengths = {len(a) for a in accs}
    if len(lengths) != 1:
        raise ValueError(f"runs disagree on increment count: {sorted(lengths)}")
    table = np.asarray(accs, dtype=np.float64)
    mean = table.mean(axis=0)
    std = table.std(axis=0, ddof=1) if table.shape[0] > 1 else np.zeros(table.shape[1])
    return RunSummary(mean, std, float(table.mean(axis=1).mean()))
