"""Centroid learning and weighted voting, step by step.

Walks through the two core mechanisms on data small enough to eyeball:
streaming per-class clustering against a distance threshold, then
inverse-distance voting over the nearest centroids. Finishes with the two
sanity limits: a huge threshold turns the classifier into nearest-class-
mean, a zero threshold turns it into 1-nearest-neighbor.
"""

import numpy as np

from cbcl.clustering import ModelStore, cluster_class, learn_increment
from cbcl.features import SyntheticSpec, generate_synthetic, split_shots
from cbcl.voting import predict, predict_1nn, predict_batch, predict_ncm, predict_scores


def main():
    print("=== streaming clustering ===")
    stream = [[0.0], [1.0], [10.0], [10.5], [0.4]]
    model = cluster_class(stream, class_id=0, distance_threshold=2.0)
    print(f"stream: {[x[0] for x in stream]}, threshold 2.0")
    for c in model.centroids:
        print(f"  centroid at {c.mean[0]:.3f} built from {c.weight} example(s)")
    print("each centroid is the exact mean of the examples it absorbed\n")

    print("=== inverse-distance voting ===")
    store = learn_increment(
        ModelStore(), {0: np.asarray([[0.0, 0.0]]), 1: np.asarray([[4.0, 0.0]])}, 0.0
    )
    x = [1.0, 0.0]
    print(f"centroids: class 0 at (0,0), class 1 at (4,0); query {x}")
    print(f"scores (1/distance): {predict_scores(store, x, n_vote=2)}")
    print(f"prediction: class {predict(store, x, n_vote=2)}\n")

    print("=== the two limits ===")
    ds = generate_synthetic(
        SyntheticSpec(n_classes=5, dim=8, per_class_count=16,
                      class_mean_scale=2.0, within_class_stddev=0.6, seed=5)
    )
    train, test = split_shots(ds, 8, seed=6)
    X = test.vectors.astype(np.float64)

    def max_spread(xs):
        xs = xs.astype(np.float64)
        return max(float(np.sqrt(((xs - v) ** 2).sum(axis=1)).max()) for v in xs)

    ncm_like = ModelStore(
        {c: cluster_class(train.vectors_for_class(c), c, max_spread(train.vectors_for_class(c)) * 1.01)
         for c in train.class_ids()},
        train.dim,
    )
    means = {c: train.vectors_for_class(c).astype(np.float64).mean(axis=0) for c in train.class_ids()}
    agree = np.mean([
        predict(ncm_like, x, 1) == predict_ncm(means, x) for x in X
    ])
    print(f"threshold above class spread -> one centroid per class; "
          f"agreement with nearest-class-mean: {100 * agree:.0f}%")

    nn_like = ModelStore(
        {c: cluster_class(train.vectors_for_class(c), c, 0.0) for c in train.class_ids()},
        train.dim,
    )
    agree = np.mean([predict(nn_like, x, 1) == predict_1nn(train, x) for x in X])
    print(f"threshold zero -> one centroid per example; "
          f"agreement with 1-nearest-neighbor: {100 * agree:.0f}%")

    acc = np.mean(predict_batch(ncm_like, X, 1) == test.labels)
    print(f"\nheld-out accuracy of the one-centroid-per-class model: {100 * acc:.1f}%")


if __name__ == "__main__":
    main()
