"""
Shared fixtures for the model selection test suites
"""
import sys
from itertools import product
from pathlib import Path

import numpy as np
import pytest

# Add project root
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from app.core.chordal import ModelGraph
from app.core.schema import Dataset, FeatureVariable, Schema


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: statistical tests with many simulated replicates")


def make_schema(cardinalities, names=None):
    """Schema whose last variable is the class; levels are labelled 0..k-1"""
    names = names or [f"F{i + 1}" for i in range(len(cardinalities) - 1)] + ["S"]
    variables = [FeatureVariable(name, tuple(str(k) for k in range(card)))
                 for name, card in zip(names, cardinalities)]
    return Schema(tuple(variables[:-1]), variables[-1])


def all_cells(schema):
    return list(product(*(range(k) for k in schema.cardinalities)))


def random_dataset(schema, n, seed, complete=False):
    """Uniformly random rows; with ``complete`` every cell appears at least once"""
    rng = np.random.default_rng(seed)
    rows = np.column_stack([rng.integers(0, k, size=n) for k in schema.cardinalities])
    if complete:
        rows = np.vstack([rows, np.array(all_cells(schema))])
    return Dataset.from_rows(schema, rows)


def graph(n, *edges):
    return ModelGraph(n, frozenset(edges))


@pytest.fixture
def binary4():
    """Three binary features plus a binary class"""
    return make_schema([2, 2, 2, 2])


@pytest.fixture
def small_dataset(binary4):
    return random_dataset(binary4, 200, seed=7, complete=True)


@pytest.fixture
def mixed_dataset():
    """Features with 3, 2 and 4 levels and a 3-sense class, every cell observed"""
    return random_dataset(make_schema([3, 2, 4, 3]), 400, seed=11, complete=True)


@pytest.fixture
def sparse_dataset():
    """Many unobserved cells, as with real word-sense data"""
    return random_dataset(make_schema([4, 3, 5, 3]), 60, seed=3)
