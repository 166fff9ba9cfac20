"""Acceptance suite: one test per criterion, one printed line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the PASS/FAIL
lines as they complete. Each criterion carries its stated runtime bound;
exceeding the bound fails the criterion.
"""

import json
import time
from contextlib import contextmanager

import numpy as np
import pytest

from cbcl.arrangements import (
    ArrangementStore,
    Scene,
    SceneObject,
    check_arrangement,
    encode,
    learn_arrangement,
    vector_length,
)
from cbcl.cleaning import CleaningTrialSpec, run_campaign
from cbcl.cli import EXIT_OK, main
from cbcl.clustering import ModelStore, cluster_class, learn_increment
from cbcl.features import Dataset, SyntheticSpec, generate_synthetic, split_shots
from cbcl.linear import LinearHead, cross_entropy_loss, gradient
from cbcl.protocol import run_many
from cbcl.rng import SplitMix64
from cbcl.voting import Hyperparams, predict, predict_1nn, predict_batch, predict_ncm, predict_scores


@contextmanager
def criterion(number: int, description: str, time_limit: float | None = None):
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        if time_limit is not None:
            assert elapsed < time_limit, f"took {elapsed:.1f}s, limit {time_limit}s"
    except BaseException:
        print(f"ACCEPTANCE {number:02d} FAIL  {description}")
        raise
    print(f"ACCEPTANCE {number:02d} PASS  {description} ({elapsed:.2f}s)")


# ---------------------------------------------------------------------------
# shared builders
# ---------------------------------------------------------------------------


def _random_specs(count: int, base_seed: int) -> list[SyntheticSpec]:
    rng = SplitMix64(base_seed)
    specs = []
    for _ in range(count):
        specs.append(
            SyntheticSpec(
                n_classes=2 + rng.bounded(9),  # 2..10
                dim=2 + rng.bounded(31),  # 2..32
                per_class_count=6 + rng.bounded(10),
                class_mean_scale=0.5 + rng.next_f64() * 2.0,
                within_class_stddev=0.05 + rng.next_f64() * 0.8,
                seed=rng.next_u64(),
            )
        )
    return specs


def _max_intra_class_distance(xs: np.ndarray) -> float:
    xs = xs.astype(np.float64)
    return max(
        float(np.sqrt(((xs - xs[i]) ** 2).sum(axis=1)).max()) for i in range(len(xs))
    )


def _per_class_store(train: Dataset, threshold_fn) -> ModelStore:
    models = {
        c: cluster_class(train.vectors_for_class(c), c, threshold_fn(train.vectors_for_class(c)))
        for c in train.class_ids()
    }
    return ModelStore(models, train.dim)


def _nonnegative_22class_dataset() -> Dataset:
    # constant offset emulates the non-negative pooled CNN embeddings the
    # protocol consumes in practice; distances are unaffected
    ds = generate_synthetic(
        SyntheticSpec(
            n_classes=22, dim=64, per_class_count=30,
            class_mean_scale=1.0, within_class_stddev=0.2, seed=1207,
        )
    )
    return Dataset(ds.vectors + np.float32(2.0), ds.labels, ds.label_names)


# ---------------------------------------------------------------------------
# criteria 1-3: oracle equivalences and batch-equals-incremental
# ---------------------------------------------------------------------------


def test_criterion_01_ncm_limit():
    with criterion(1, "NCM-limit equivalence on 20 random datasets", 10.0):
        for spec in _random_specs(20, base_seed=101):
            ds = generate_synthetic(spec)
            shots = spec.per_class_count // 2
            train, test = split_shots(ds, shots, seed=spec.seed)
            store = _per_class_store(train, lambda xs: _max_intra_class_distance(xs) * 1.0001 + 1e-9)
            assert all(m.n_centroids == 1 for m in store.models.values())
            means = {
                c: train.vectors_for_class(c).astype(np.float64).mean(axis=0)
                for c in train.class_ids()
            }
            for x in test.vectors.astype(np.float64):
                assert predict(store, x, 1) == predict_ncm(means, x)


def test_criterion_02_1nn_limit():
    with criterion(2, "1-NN-limit equivalence on 20 random datasets", 10.0):
        for spec in _random_specs(20, base_seed=101):
            ds = generate_synthetic(spec)
            shots = spec.per_class_count // 2
            train, test = split_shots(ds, shots, seed=spec.seed)
            store = _per_class_store(train, lambda xs: 0.0)
            for x in test.vectors.astype(np.float64):
                assert predict(store, x, 1) == predict_1nn(train, x)


def test_criterion_03_batch_equals_incremental():
    with criterion(3, "batch-equals-incremental over 10 random partitions", 10.0):
        ds = generate_synthetic(
            SyntheticSpec(n_classes=9, dim=12, per_class_count=10, seed=33,
                          class_mean_scale=2.0, within_class_stddev=0.4)
        )
        train, test = split_shots(ds, 5, seed=34)
        data = {c: train.vectors_for_class(c) for c in train.class_ids()}
        threshold = 1.5
        batch_store = learn_increment(ModelStore(), data, threshold)
        X = test.vectors.astype(np.float64)
        batch_preds = predict_batch(batch_store, X, 3)
        for p in range(10):
            rng = SplitMix64(500 + p)
            order = list(train.class_ids())
            rng.shuffle(order)
            store = ModelStore()
            pos = 0
            while pos < len(order):
                size = 1 + rng.bounded(3)
                chunk = order[pos : pos + size]
                store = learn_increment(store, {c: data[c] for c in chunk}, threshold)
                pos += size
            assert store.class_ids() == batch_store.class_ids()
            for c in store.class_ids():
                assert np.array_equal(store.models[c].means, batch_store.models[c].means)
                assert np.array_equal(store.models[c].weights, batch_store.models[c].weights)
            assert np.array_equal(predict_batch(store, X, 3), batch_preds)


# ---------------------------------------------------------------------------
# criterion 4: the forgetting pattern
# ---------------------------------------------------------------------------


def test_criterion_04_forgetting_pattern():
    with criterion(4, "forgetting pattern: FT collapses, CBCL tracks FLB", 300.0):
        ds = _nonnegative_22class_dataset()
        runs_flb, summary_flb = run_many(ds, "flb", 10, base_seed=2024, shots=5, classes_per_increment=2)
        runs_ft, summary_ft = run_many(ds, "ft", 10, base_seed=2024, shots=5, classes_per_increment=2)
        _, summary_cbcl = run_many(ds, "cbcl", 10, base_seed=2024, shots=5, classes_per_increment=2)

        ft_final = summary_ft.per_increment_mean[-1]
        flb_final = summary_flb.per_increment_mean[-1]
        assert flb_final - ft_final >= 0.20, f"FT-FLB gap only {100 * (flb_final - ft_final):.1f} points"

        gap = abs(summary_cbcl.average_incremental_accuracy - summary_flb.average_incremental_accuracy)
        assert gap <= 0.03, f"CBCL is {100 * gap:.1f} points from FLB"

        for run_ft, run_flb in zip(runs_ft, runs_flb):
            assert run_ft[0].accuracy == run_flb[0].accuracy  # no forgetting at increment 1


# ---------------------------------------------------------------------------
# criterion 5: gradients
# ---------------------------------------------------------------------------


def _finite_difference(head, X, labels, eps=1e-6):
    d_weights = np.zeros_like(head.weights)
    d_bias = np.zeros_like(head.bias)
    for idx in np.ndindex(*head.weights.shape):
        hi, lo = head.copy(), head.copy()
        hi.weights[idx] += eps
        lo.weights[idx] -= eps
        d_weights[idx] = (cross_entropy_loss(hi, X, labels) - cross_entropy_loss(lo, X, labels)) / (2 * eps)
    for i in range(head.bias.shape[0]):
        hi, lo = head.copy(), head.copy()
        hi.bias[i] += eps
        lo.bias[i] -= eps
        d_bias[i] = (cross_entropy_loss(hi, X, labels) - cross_entropy_loss(lo, X, labels)) / (2 * eps)
    return d_weights, d_bias


def test_criterion_05_gradient_check():
    with criterion(5, "analytic gradient matches central differences (100 cases)", 10.0):
        rng = np.random.default_rng(77)
        for _ in range(100):
            n_classes = int(rng.integers(2, 6))
            dim = int(rng.integers(1, 17))
            batch = int(rng.integers(1, 9))
            head = LinearHead(
                rng.normal(size=(n_classes, dim)), rng.normal(size=n_classes), tuple(range(n_classes))
            )
            X = rng.normal(size=(batch, dim))
            labels = rng.integers(0, n_classes, size=batch)
            a_w, a_b = gradient(head, X, labels)
            n_w, n_b = _finite_difference(head, X, labels)
            analytic = np.concatenate([a_w.ravel(), a_b.ravel()])
            numeric = np.concatenate([n_w.ravel(), n_b.ravel()])
            rel = np.linalg.norm(analytic - numeric) / (
                np.linalg.norm(analytic) + np.linalg.norm(numeric) + 1e-12
            )
            assert rel < 1e-4


# ---------------------------------------------------------------------------
# criterion 6: the voting hand example
# ---------------------------------------------------------------------------


def test_criterion_06_voting_hand_example():
    with criterion(6, "two-centroid vote scores reproduce {1, 1/3} exactly"):
        store = learn_increment(
            ModelStore(), {0: np.asarray([[0.0, 0.0]]), 1: np.asarray([[4.0, 0.0]])}, 0.0
        )
        scores = predict_scores(store, [1.0, 0.0], n_vote=2)
        assert scores == {0: 1.0, 1: 1.0 / 3.0}
        assert predict(store, [1.0, 0.0], n_vote=2) == 0


# ---------------------------------------------------------------------------
# criteria 7-8: arrangements
# ---------------------------------------------------------------------------

N_CLASSES = 22
_SHELF = ((15.0, 50.0), (50.0, 50.0), (85.0, 50.0))


def _shelf_scene(labels: tuple[int, int, int]) -> Scene:
    objects = tuple(
        SceneObject(lab, (cx - 5, cy - 5, cx + 5, cy + 5)) for lab, (cx, cy) in zip(labels, _SHELF)
    )
    return Scene(objects, (100, 100))


def _random_scene(rng: np.random.Generator) -> Scene:
    k = int(rng.integers(1, 7))
    labels = rng.choice(N_CLASSES, size=k, replace=False)
    objects = []
    for lab in labels:
        x0, y0 = rng.uniform(0, 80, size=2)
        w, h = rng.uniform(2, 19, size=2)
        objects.append(SceneObject(int(lab), (float(x0), float(y0), float(x0 + w), float(y0 + h))))
    return Scene(tuple(objects), (100, 100))


def test_criterion_07_vector_length_and_structure():
    with criterion(7, "990-bit vectors; relation bits imply presence on 1000 scenes"):
        assert vector_length(22) == 990
        rng = np.random.default_rng(88)
        n = N_CLASSES
        for _ in range(1000):
            vec = encode(_random_scene(rng), n)
            assert vec.shape == (990,)
            presence = vec[:n]
            lr = vec[n : n + n * n].reshape(n, n)
            ab = vec[n + n * n :].reshape(n, n)
            for block in (lr, ab):
                for i, j in zip(*np.nonzero(block)):
                    assert presence[i] == 1 and presence[j] == 1


def _arrangement_fixture():
    """Five shelf arrangements; the first two share their left pair."""
    store = ArrangementStore(N_CLASSES)
    triples = [(0, 1, 2), (0, 1, 3), (4, 5, 6), (7, 8, 9), (10, 11, 12)]
    for k, triple in enumerate(triples):
        learn_arrangement(store, f"arrangement_{k}", _shelf_scene(triple))
    return store, triples


def test_criterion_08_arrangement_verdicts():
    with criterion(8, "missing/wrong verdicts 100% correct; ties report all candidates", 5.0):
        store, triples = _arrangement_fixture()
        substitutes = iter(range(13, 22))

        checked_missing = checked_wrong = 0
        for k, triple in enumerate(triples):
            for pos in range(3):
                # single object removed
                remaining = tuple(lab for i, lab in enumerate(triple) if i != pos)
                kept_positions = tuple(p for i, p in enumerate(_SHELF) if i != pos)
                scene = Scene(
                    tuple(
                        SceneObject(lab, (cx - 5, cy - 5, cx + 5, cy + 5))
                        for lab, (cx, cy) in zip(remaining, kept_positions)
                    ),
                    (100, 100),
                )
                verdict = check_arrangement(store, scene)
                if k == 0 and pos == 2:
                    # arrangement_0 and arrangement_1 differ only in the removed
                    # slot: an exact tie, both candidates must be reported
                    assert verdict.closest == ("arrangement_0", "arrangement_1")
                    assert verdict.missing_classes == {2, 3}
                elif k == 1 and pos == 2:
                    assert verdict.closest == ("arrangement_0", "arrangement_1")
                    assert verdict.missing_classes == {2, 3}
                else:
                    assert verdict.closest == (f"arrangement_{k}",)
                    assert verdict.kind == "missing"
                    assert verdict.missing_classes == {triple[pos]}
                    checked_missing += 1

        for k, triple in enumerate(triples):
            if k in (0, 1):
                positions = (0, 1)  # slot 2 is the designed tie; tested above
            else:
                positions = (0, 1, 2)
            for pos in positions:
                sub = next(substitutes)
                mutated = list(triple)
                mutated[pos] = sub
                verdict = check_arrangement(store, _shelf_scene(tuple(mutated)))
                assert verdict.closest == (f"arrangement_{k}",)
                assert verdict.kind == "wrong"
                assert verdict.wrong_pairs == {(sub, triple[pos])}
                checked_wrong += 1
                if checked_wrong == 9:
                    substitutes = iter(range(13, 22))  # reuse ids for remaining cases

        assert checked_missing == 13
        assert checked_wrong >= 9


# ---------------------------------------------------------------------------
# criterion 9: cleaning simulation
# ---------------------------------------------------------------------------


def test_criterion_09_cleaning_simulation():
    with criterion(9, "cleaning errors: detection 20±1, movement 0, classification vs oracle", 60.0):
        ds = generate_synthetic(
            SyntheticSpec(n_classes=8, dim=8, per_class_count=30,
                          class_mean_scale=1.0, within_class_stddev=0.45, seed=91)
        )
        train, pool = split_shots(ds, 10, seed=92)
        hp = Hyperparams(1.2, 3)
        store = learn_increment(
            ModelStore(), {c: train.vectors_for_class(c) for c in train.class_ids()}, hp.distance_threshold
        )

        # exhaustive per-class accuracy on the held-out pool
        per_class_acc = {}
        for c in pool.class_ids():
            X = pool.vectors_for_class(c).astype(np.float64)
            per_class_acc[c] = float(np.mean(predict_batch(store, X, hp.n_vote) == c))

        spec = CleaningTrialSpec(
            n_objects=6, n_targets=2, target_class=0,
            p_detect_miss=0.2, p_move_fail=0.0, seed=93,
        )
        breakdown, counts = run_campaign(spec, store, pool, hp.n_vote, n_trials=10_000)

        assert abs(breakdown.detection_error - 20.0) <= 1.0
        assert breakdown.movement_error == 0.0

        # the trial design fixes 2 of 6 objects to the target class and
        # spreads the rest uniformly over the other classes; weight the
        # exhaustive per-class errors accordingly
        k = len(per_class_acc)
        weights = {c: (1 - 2 / 6) / (k - 1) for c in per_class_acc}
        weights[spec.target_class] = 2 / 6
        expected_error = 100.0 * sum(w * (1.0 - per_class_acc[c]) for c, w in weights.items())
        assert expected_error > 1.0  # the check is vacuous on a perfectly separable pool
        assert abs(breakdown.classification_error - expected_error) <= 1.0


# ---------------------------------------------------------------------------
# criterion 10: CLI determinism
# ---------------------------------------------------------------------------


def test_criterion_10_cli_determinism(tmp_path):
    with criterion(10, "CLI reruns are byte-identical"):
        synth = "classes=6,dim=8,per_class=12,scale=2.0,stddev=0.3"
        run_args = [
            "run", "--synthetic", synth, "--shots", "4", "--classes-per-inc", "2",
            "--runs", "2", "--method", "cbcl", "--seed", "17",
        ]
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(run_args + ["--out", str(out_a)]) == EXIT_OK
        assert main(run_args + ["--out", str(out_b)]) == EXIT_OK
        for name in ("metrics.jsonl", "summary.txt", "config.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

        gen_a, gen_b = tmp_path / "f1.bin", tmp_path / "f2.bin"
        for target in (gen_a, gen_b):
            assert main(["gen", "--synthetic", synth, "--seed", "4", "--out", str(target)]) == EXIT_OK
        assert gen_a.read_bytes() == gen_b.read_bytes()

        sim_a, sim_b = tmp_path / "s1", tmp_path / "s2"
        sim_args = ["clean-sim", "--synthetic", synth, "--shots", "4", "--seed", "6",
                    "--target-class", "2", "--trials", "500"]
        assert main(sim_args + ["--out", str(sim_a)]) == EXIT_OK
        assert main(sim_args + ["--out", str(sim_b)]) == EXIT_OK
        assert (sim_a / "breakdown.txt").read_bytes() == (sim_b / "breakdown.txt").read_bytes()


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
