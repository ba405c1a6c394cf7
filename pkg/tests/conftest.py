import numpy as np
import pytest

from cascrnet.data import write_shapes_dataset


@pytest.fixture(scope="session")
def tiny_sets(tmp_path_factory):
    """Two disjoint 32x32 shapes sets: 20 training and 10 validation images."""
    root = tmp_path_factory.mktemp("tiny")
    train = write_shapes_dataset(root / "train", 2, 32, seed=1)
    val = write_shapes_dataset(root / "val", 1, 32, seed=2)
    return train, val


@pytest.fixture
def rng():
    return np.random.default_rng(0)
