"""Pytest configuration and fixtures."""
import os

# Keep experiment work pools small and reproducible on shared runners
os.environ.setdefault('MULTIRANK_THREADS', '2')

import numpy as np
import pytest

from multiplex import MultiplexNetwork, SparseMatrix, load_example_ring


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running statistical checks")


def random_weighted(n, density, rng):
    """Dense random layer with positive weights, no self-loops."""
    dense = rng.random((n, n)) * (rng.random((n, n)) < density)
    np.fill_diagonal(dense, 0.0)
    return SparseMatrix.from_dense(dense)


@pytest.fixture
def ring():
    """Six-vertex two-layer ring with nilpotent layer products."""
    return load_example_ring()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def weighted_multiplex(rng):
    """Two dense positive-weight layers on 12 vertices."""
    return MultiplexNetwork(n=12, layers=(random_weighted(12, 0.6, rng), random_weighted(12, 0.6, rng)))
