import numpy as np
import pytest

from cbcl.features import Dataset, SyntheticSpec, generate_synthetic


@pytest.fixture
def tiny_dataset() -> Dataset:
    """Three well-separated 2-D classes, 6 examples each."""
    return generate_synthetic(
        SyntheticSpec(
            n_classes=3, dim=2, per_class_count=6,
            class_mean_scale=10.0, within_class_stddev=0.3, seed=11,
        )
    )


@pytest.fixture
def toy_dataset() -> Dataset:
    """Hand-built 1-D dataset with known geometry."""
    vectors = np.asarray([[0.0], [1.0], [10.0], [11.0]], dtype=np.float32)
    labels = np.asarray([0, 0, 1, 1], dtype=np.int64)
    return Dataset(vectors, labels, {0: "near", 1: "far"})
