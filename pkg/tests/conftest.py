import sys

import numpy as np
import pytest

from aegcn.sparse import SparseMatrix
from aegcn.synthetic import toy_hetero, toy_homo


def random_sparse(rng, n_rows, n_cols, density, positive=False):
    """Random sparse matrix together with its dense twin."""
    dense = rng.standard_normal((n_rows, n_cols))
    if positive:
        dense = np.abs(dense) + 0.1
    dense *= rng.random((n_rows, n_cols)) < density
    return SparseMatrix.from_dense(dense), dense


def random_symmetric(rng, n, density):
    upper = np.triu(rng.random((n, n)) < density, 1).astype(np.float64)
    dense = upper + upper.T
    return SparseMatrix.from_dense(dense), dense


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def homo_toy():
    return toy_homo()


@pytest.fixture
def hetero_toy():
    return toy_hetero()


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
