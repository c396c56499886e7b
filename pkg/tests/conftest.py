import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gcm import Dataset


def build_grouped_dataset(rng, n_pos_groups, n_neg_groups, rows_lo, rows_hi, d,
                          shuffle_rows=False) -> Dataset:
    """Random grouped dataset with one key per positive group."""
    features, labels, gids, keys = [], [], [], []
    gid = 0
    for _ in range(n_pos_groups):
        rows = int(rng.integers(rows_lo, rows_hi + 1))
        key_at = int(rng.integers(0, rows))
        for r in range(rows):
            features.append(rng.normal(size=d))
            labels.append(1)
            gids.append(gid)
            keys.append(r == key_at)
        gid += 1
    for _ in range(n_neg_groups):
        rows = int(rng.integers(rows_lo, rows_hi + 1))
        for _ in range(rows):
            features.append(rng.normal(size=d))
            labels.append(-1)
            gids.append(gid)
            keys.append(False)
        gid += 1
    features = np.array(features)
    labels = np.array(labels)
    gids = np.array(gids)
    keys = np.array(keys)
    if shuffle_rows:
        perm = rng.permutation(len(labels))
        features, labels, gids, keys = (
            features[perm], labels[perm], gids[perm], keys[perm]
        )
    return Dataset(features, labels, gids, keys)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
