import numpy as np
import pytest

from driftwise.datastream import AgrawalStream, Instance, Numeric, Schema


@pytest.fixture
def agrawal_instances():
    return AgrawalStream(concept_id=1, seed=123).take(400)


@pytest.fixture
def tiny_schema():
    return Schema(names=("a", "b"), kinds=(Numeric(), Numeric()), target_kind="numeric")


def make_instances(X, y):
    return [Instance(np.asarray(row, dtype=float), float(t), i)
            for i, (row, t) in enumerate(zip(X, y))]


@pytest.fixture
def make_dataset():
    return make_instances
