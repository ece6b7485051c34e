import os
import sys
from itertools import product

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from preprocessing.dataset import BinnedDataset, EncodingSchema  # noqa: E402

DATA_DIR = os.path.join(ROOT, "data")


def make_dataset(codes, labels, cardinalities=None, task="classification", classes=None, group_feature=None):
    """BinnedDataset catégoriel construit directement à partir de codes (k, n)."""
    codes = np.asarray(codes, dtype=np.int64)
    if codes.ndim == 1:
        codes = codes.reshape(1, -1)
    k = codes.shape[0]
    if cardinalities is None:
        cardinalities = tuple(int(codes[f].max()) + 1 if codes.shape[1] else 1 for f in range(k))
    if task == "classification":
        labels = np.asarray(labels, dtype=np.int64)
        if classes is None:
            classes = [str(c) for c in range(int(labels.max()) + 1 if labels.size else 1)]
    else:
        labels = np.asarray(labels, dtype=float)
        classes = []
    schema = EncodingSchema(
        feature_names=[f"x{f}" for f in range(k)],
        feature_kinds=["categorical"] * k,
        levels=[[f"v{c}" for c in range(cardinalities[f])] for f in range(k)],
        bin_specs=[None] * k,
        label_name="y",
        task=task,
        classes=list(classes),
    )
    return BinnedDataset(
        codes=codes, labels=labels, cardinalities=tuple(cardinalities), schema=schema, group_feature=group_feature
    )


def monks_like(n_repeats=1):
    """Toutes les combinaisons de trois features (3, 3, 2); classe 1 si x0 == x1 ou x2 == 0."""
    rows = list(product(range(3), range(3), range(2))) * n_repeats
    codes = np.array(rows, dtype=np.int64).T
    labels = np.array([int(a == b or c == 0) for a, b, c in rows], dtype=np.int64)
    return make_dataset(codes, labels, cardinalities=(3, 3, 2))


@pytest.fixture
def toy_dataset():
    # x0 sépare parfaitement les classes
    codes = [[0, 0, 1, 1, 2, 2, 0, 1], [0, 1, 0, 1, 0, 1, 1, 0]]
    labels = [0, 0, 1, 1, 0, 0, 0, 1]
    return make_dataset(codes, labels, cardinalities=(3, 2))


@pytest.fixture
def monks_dataset():
    return monks_like()


@pytest.fixture
def write_csv(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return _write


def data_file(name):
    path = os.path.join(DATA_DIR, name)
    if not os.path.exists(path):
        pytest.skip(f"{name} absent de data/")
    return path
