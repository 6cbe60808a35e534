import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from labeldist.core import SOLVER_ROW_SUM_TOL


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_instance(rng, n, m, c, ensure_support=True):
    """A small random (X, Y, D) triple with D feasible for Y."""
    X = rng.normal(size=(n, m))
    Y = (rng.random((n, c)) < 0.6).astype(np.int64)
    Y[np.arange(n), rng.integers(0, c, n)] = 1  # at least one positive
    D = rng.random((n, c)) * Y
    zero_rows = D.sum(axis=1) == 0
    D[zero_rows] = Y[zero_rows]
    D = D / D.sum(axis=1, keepdims=True)
    return X, Y, D


def assert_feasible(D, Y, tol=SOLVER_ROW_SUM_TOL):
    """The hard feasibility contract every fit output must satisfy."""
    D = np.asarray(D)
    Y = np.asarray(Y)
    assert np.all(D[Y == 0] == 0.0), "zero-label entries must be exactly zero"
    assert np.all(D >= 0.0) and np.all(D <= 1.0)
    assert np.max(np.abs(D.sum(axis=1) - 1.0)) <= tol
