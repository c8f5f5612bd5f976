import os

import numpy as np
import pytest
from hypothesis import settings

from rebalance.data import LabeledDataset

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")

KEEL_DIR = os.environ.get("KEEL_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "data", "keel"))


def keel_path(name: str) -> str:
    return os.path.join(KEEL_DIR, name)


def require_keel(name: str) -> str:
    path = keel_path(name)
    if not os.path.exists(path):
        pytest.skip(f"user-supplied Keel file {name} not found under {KEEL_DIR}")
    return path


def random_imbalanced(rng, n_minority, n_majority, n_features) -> LabeledDataset:
    features = rng.random((n_minority + n_majority, n_features))
    labels = np.array(["maj"] * n_majority + ["min"] * n_minority)
    return LabeledDataset(features, labels, "min")


@pytest.fixture
def rng():
    return np.random.default_rng(20240810)


@pytest.fixture
def two_blob_points(rng):
    return np.vstack([
        rng.normal((0.0, 0.0), 0.5, size=(200, 2)),
        rng.normal((10.0, 10.0), 0.5, size=(200, 2)),
    ])
