import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow end-to-end experiments")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running experiment (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def dense_circulant(stencil, num_points):
    """Dense matrix of (D u)_k = sum_j w_j u_{k+j-r}; test oracle only."""
    n = len(stencil)
    r = (n - 1) // 2
    D = np.zeros((num_points, num_points))
    for k in range(num_points):
        for j in range(n):
            D[k, (k + j - r) % num_points] += stencil[j]
    return D


def dense_selector(indices):
    """Dense 0/1 assignment matrix U with (U u)[k*n + j] = u[indices[k, j]]."""
    rows, n = indices.shape
    U = np.zeros((rows * n, rows))
    for k in range(rows):
        for j in range(n):
            U[k * n + j, indices[k, j]] = 1.0
    return U


@pytest.fixture
def dense_operator():
    return dense_circulant


@pytest.fixture
def selector_matrix():
    return dense_selector


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
