"""Synthetic performance-model datasets with known informative columns."""

import numpy as np

from tsfla.features import FEATURE_NAMES
from tsfla.perfmodel import Dataset

NAMES = tuple(f"true_{n}" for n in FEATURE_NAMES) + tuple(f"surr_{n}" for n in FEATURE_NAMES)
INFORMATIVE = (NAMES[7], NAMES[31])


def synthetic_dataset(seed, rows=55, noise=0.05, permute=False):
    """y depends on two of 56 uniform columns plus Gaussian noise, clipped to [0, 1]."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(rows, len(NAMES)))
    a, b = X[:, 7], X[:, 31]
    y = np.clip(0.1 + 0.4 * a + 0.4 * b + rng.normal(0, noise, rows), 0, 1)
    if permute:
        y = rng.permutation(y)
    return Dataset(X, y, NAMES, tuple(f"p{i}" for i in range(rows)))
