import numpy as np
import pytest

from cbcl.features import Dataset
from cbcl.linear import (
    LinearHead,
    TrainConfig,
    cross_entropy_loss,
    expand_head,
    forward,
    gradient,
    new_head,
    predict_head,
    run_flb_increment,
    run_ft_increment,
    train,
)


def _separable_toy(n_per: int = 20, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_per, 2)) * 0.3 + [2.0, 2.0]
    b = rng.normal(size=(n_per, 2)) * 0.3 + [-2.0, -2.0]
    X = np.vstack([a, b]).astype(np.float32)
    y = np.asarray([0] * n_per + [1] * n_per)
    return Dataset(X, y, {0: "pos", 1: "neg"})


# ---------------------------------------------------------------------------
# forward
# ---------------------------------------------------------------------------


def test_zero_head_is_uniform():
    probs = forward(new_head([0, 1, 2], 4), np.ones(4))
    np.testing.assert_allclose(probs, [1 / 3] * 3, rtol=1e-12)


def test_log_two_bias_hand_example():
    head = LinearHead(np.zeros((2, 3)), np.asarray([np.log(2.0), 0.0]), (0, 1))
    probs = forward(head, np.zeros(3))
    np.testing.assert_allclose(probs, [2 / 3, 1 / 3], rtol=1e-12)


def test_probabilities_sum_to_one():
    rng = np.random.default_rng(1)
    head = LinearHead(rng.normal(size=(5, 6)), rng.normal(size=5), tuple(range(5)))
    for _ in range(20):
        probs = forward(head, rng.normal(size=6) * 3)
        assert abs(probs.sum() - 1.0) < 1e-9
        assert np.all(probs > 0.0) and np.all(probs < 1.0)


def test_logit_shift_invariance():
    rng = np.random.default_rng(2)
    W = rng.normal(size=(4, 3))
    b = rng.normal(size=4)
    x = rng.normal(size=3)
    base = forward(LinearHead(W, b, (0, 1, 2, 3)), x)
    shifted = forward(LinearHead(W, b + 17.5, (0, 1, 2, 3)), x)
    np.testing.assert_allclose(base, shifted, rtol=1e-12)


def test_extreme_logits_stay_finite():
    head = LinearHead(np.asarray([[1000.0], [-1000.0]]), np.zeros(2), (0, 1))
    probs = forward(head, np.asarray([1.0]))
    assert np.all(np.isfinite(probs)) and probs[0] == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# gradient
# ---------------------------------------------------------------------------


def test_gradient_hand_example():
    # single example, zero head, 2 classes: softmax - onehot = [-0.5, +0.5]
    head = new_head([0, 1], 3)
    x = np.asarray([[1.0, 2.0, -1.0]])
    d_weights, d_bias = gradient(head, x, [0])
    np.testing.assert_allclose(d_bias, [-0.5, 0.5], rtol=1e-12)
    np.testing.assert_allclose(d_weights, np.outer([-0.5, 0.5], x[0]), rtol=1e-12)


def test_gradient_vanishes_at_perfect_prediction():
    head = LinearHead(np.asarray([[50.0], [-50.0]]), np.zeros(2), (0, 1))
    d_weights, d_bias = gradient(head, [[1.0]], [0])
    assert np.abs(d_weights).max() < 1e-9
    assert np.abs(d_bias).max() < 1e-9


def _fd_gradient(head, X, labels, eps=1e-6):
    d_weights = np.zeros_like(head.weights)
    d_bias = np.zeros_like(head.bias)
    for idx in np.ndindex(*head.weights.shape):
        for sign, bucket in ((1, 0), (-1, 1)):
            probe = head.copy()
            probe.weights[idx] += sign * eps
            loss = cross_entropy_loss(probe, X, labels)
            d_weights[idx] += loss if bucket == 0 else -loss
        d_weights[idx] /= 2 * eps
    for i in range(head.bias.shape[0]):
        probe_hi, probe_lo = head.copy(), head.copy()
        probe_hi.bias[i] += eps
        probe_lo.bias[i] -= eps
        d_bias[i] = (cross_entropy_loss(probe_hi, X, labels) - cross_entropy_loss(probe_lo, X, labels)) / (2 * eps)
    return d_weights, d_bias


@pytest.mark.parametrize("seed", range(10))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n_classes = int(rng.integers(2, 6))
    dim = int(rng.integers(1, 17))
    batch = int(rng.integers(1, 9))
    head = LinearHead(rng.normal(size=(n_classes, dim)), rng.normal(size=n_classes), tuple(range(n_classes)))
    X = rng.normal(size=(batch, dim))
    labels = rng.integers(0, n_classes, size=batch)
    analytic = _fd_pack(gradient(head, X, labels))
    numeric = _fd_pack(_fd_gradient(head, X, labels))
    rel = np.linalg.norm(analytic - numeric) / (np.linalg.norm(analytic) + np.linalg.norm(numeric) + 1e-12)
    assert rel < 1e-4


def _fd_pack(pair):
    return np.concatenate([pair[0].ravel(), pair[1].ravel()])


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def test_separable_toy_reaches_full_training_accuracy():
    ds = _separable_toy()
    head = train(new_head([0, 1], 2), ds, TrainConfig(seed=3))
    preds = predict_head(head, ds.vectors.astype(np.float64))
    assert float(np.mean(preds == ds.labels)) == 1.0


def test_zero_learning_rate_is_identity():
    ds = _separable_toy()
    head = new_head([0, 1], 2)
    trained = train(head, ds, TrainConfig(learning_rate=0.0, epochs=3, seed=1))
    assert np.array_equal(trained.weights, head.weights)
    assert np.array_equal(trained.bias, head.bias)


def test_training_is_deterministic():
    ds = _separable_toy()
    a = train(new_head([0, 1], 2), ds, TrainConfig(seed=9))
    b = train(new_head([0, 1], 2), ds, TrainConfig(seed=9))
    assert a.weights.tobytes() == b.weights.tobytes()
    assert a.bias.tobytes() == b.bias.tobytes()
    c = train(new_head([0, 1], 2), ds, TrainConfig(seed=10))
    assert a.weights.tobytes() != c.weights.tobytes()


def test_train_does_not_mutate_input_head():
    ds = _separable_toy()
    head = new_head([0, 1], 2)
    train(head, ds, TrainConfig(epochs=2, seed=0))
    assert np.array_equal(head.weights, np.zeros((2, 2)))


def test_train_empty_dataset_errors():
    empty = Dataset(np.empty((0, 2), dtype=np.float32), np.empty(0, dtype=np.int64), {0: "a"})
    with pytest.raises(ValueError):
        train(new_head([0], 2), empty, TrainConfig(seed=0))


def test_train_rejects_uncovered_labels():
    ds = _separable_toy()
    with pytest.raises(ValueError, match="not covered"):
        train(new_head([0], 2), ds, TrainConfig(seed=0))


# ---------------------------------------------------------------------------
# FLB / FT increments
# ---------------------------------------------------------------------------


def test_expand_rejects_overlap():
    head = new_head([0, 1], 2)
    with pytest.raises(ValueError, match="already"):
        expand_head(head, [1, 2])


def test_ft_rejects_old_class_data():
    ds = _separable_toy()
    head = new_head([0, 1], 2)
    with pytest.raises(ValueError, match="non-increment"):
        run_ft_increment(head, ds, [2, 3], TrainConfig(seed=0))


def test_first_increment_ft_equals_flb():
    ds = _separable_toy()
    cfg = TrainConfig(seed=5)
    ft = run_ft_increment(new_head((), 2), ds, [0, 1], cfg)
    flb = run_flb_increment(ds, [0, 1], cfg)
    assert ft.weights.tobytes() == flb.weights.tobytes()
    assert ft.bias.tobytes() == flb.bias.tobytes()
    assert ft.class_ids == flb.class_ids


def test_flb_is_plain_training():
    ds = _separable_toy()
    cfg = TrainConfig(seed=6)
    assert run_flb_increment(ds, [0, 1], cfg).weights.tobytes() == train(
        new_head([0, 1], 2), ds, cfg
    ).weights.tobytes()


def test_ft_forgets_first_increment_on_nonnegative_features():
    # non-negative features (the CNN-embedding regime) make fine-tuning
    # suppress earlier classes; accuracy on increment-1 data collapses
    rng = np.random.default_rng(12)
    n_classes, dim = 8, 16
    means = rng.uniform(1.0, 3.0, size=(n_classes, dim))
    blocks = [means[c] + 0.1 * rng.normal(size=(10, dim)) for c in range(n_classes)]
    X = np.vstack(blocks).astype(np.float32)
    y = np.repeat(np.arange(n_classes), 10)
    ds = Dataset(np.abs(X), y, {c: f"c{c}" for c in range(n_classes)})

    head = new_head((), dim)
    first_classes = [0, 1]
    for start in range(0, n_classes, 2):
        classes = [start, start + 1]
        mask = np.isin(y, classes)
        inc = Dataset(ds.vectors[mask], y[mask], ds.label_names)
        head = run_ft_increment(head, inc, classes, TrainConfig(seed=start))
    first_mask = np.isin(y, first_classes)
    preds = predict_head(head, ds.vectors[first_mask].astype(np.float64))
    acc_first = float(np.mean(preds == y[first_mask]))
    assert acc_first < 0.5  # collapsed from a perfect initial fit
