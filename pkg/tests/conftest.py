"""Shared fixtures and dataset helpers."""

import numpy as np
import pytest

from polaris import benchmarks
from polaris.datagen import Dataset, LabeledSample
from polaris.graph import FeatureSchema, FeatureVector


def synth_dataset(X, y, locality: int = 1) -> Dataset:
    """Wrap a raw binary matrix as a Dataset (zero-padded to the schema)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.uint8))
    y = np.asarray(y, dtype=np.int64)
    schema = FeatureSchema(locality)
    if X.shape[1] > schema.feature_len:
        raise ValueError("matrix wider than the schema")
    full = np.zeros((len(y), schema.feature_len), dtype=np.uint8)
    full[:, : X.shape[1]] = X
    samples = [
        LabeledSample(features=FeatureVector(i, full[i], ()), label=int(y[i]),
                      design="synth", gate_id=i, iteration=0, r_ratio=float(y[i]))
        for i in range(len(y))
    ]
    return Dataset(schema=schema, samples=samples)


@pytest.fixture(scope="session")
def leaky_corpus():
    return {name: benchmarks.load(name) for name in ("leaky1", "leaky2", "leaky3")}


@pytest.fixture(scope="session")
def heldout_corpus():
    return {name: benchmarks.load(name) for name in ("heldout1", "heldout2")}
