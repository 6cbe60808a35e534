"""Shared conventions, validation, and hyper-parameters.

Matrices cross module boundaries as plain dense row-major ``float64``
(or ``int64`` for binary label matrices) numpy arrays:

* feature matrix ``X``: shape (n, m), all entries finite, n >= 2, m >= 1;
* logical label matrix ``Y``: shape (n, c), entries in {0, 1}, c >= 2,
  every row has at least one positive label;
* label distribution matrix ``D``: shape (n, c), entries in [0, 1], rows
  sum to one, and ``D <= Y`` elementwise when paired with a label matrix;
* weight matrix ``W``: shape (m, c), all entries finite.

Binary labels are kept as integers so the ``D <= Y`` dominance check is
exact.  Validators return fresh contiguous arrays; validating an already
validated array returns it unchanged.
"""

from dataclasses import dataclass

import numpy as np

# Row-sum tolerance for user-supplied distributions; solver outputs are
# exact to near machine precision and checked at the tighter value.
ROW_SUM_TOL = 1e-6
SOLVER_ROW_SUM_TOL = 1e-9


class RowCountMismatch(ValueError):
    """X and Y disagree on the number of samples."""


class AllZeroLabelRow(ValueError):
    """A sample with no positive label has an empty feasible set."""

    def __init__(self, row, message=None):
        self.row = row
        super().__init__(message or f"row {row} has no positive label")


class NonFiniteEntry(ValueError):
    """NaN or Inf found where a finite value is required."""

    def __init__(self, location, message=None):
        self.location = tuple(location)
        super().__init__(message or f"non-finite entry at {self.location}")


class LengthMismatch(ValueError):
    """Paired vectors differ in length."""


class ShapeMismatch(ValueError):
    """Paired matrices differ in shape."""


class DimensionMismatch(ShapeMismatch):
    """Operands do not conform for the requested product."""


def as_feature_matrix(X):
    """Validate and return a feature matrix as contiguous float64.

    Raises NonFiniteEntry on NaN/Inf and ValueError on bad shape.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"feature matrix must be 2-d, got ndim={X.ndim}")
    n, m = X.shape
    if n < 2 or m < 1:
        raise ValueError(f"feature matrix needs n >= 2 and m >= 1, got {X.shape}")
    if not np.all(np.isfinite(X)):
        loc = np.argwhere(~np.isfinite(X))[0]
        raise NonFiniteEntry(loc)
    return X


def as_logical_labels(Y):
    """Validate and return a logical label matrix as contiguous int64."""
    Y_arr = np.ascontiguousarray(Y)
    if Y_arr.ndim != 2:
        raise ValueError(f"label matrix must be 2-d, got ndim={Y_arr.ndim}")
    if Y_arr.dtype.kind == "f" and not np.all(np.isfinite(Y_arr)):
        loc = np.argwhere(~np.isfinite(Y_arr))[0]
        raise NonFiniteEntry(loc)
    Y_int = Y_arr.astype(np.int64)
    if np.any(Y_int != Y_arr):
        raise ValueError("logical labels must be exactly 0 or 1")
    if not np.all((Y_int == 0) | (Y_int == 1)):
        raise ValueError("logical labels must be 0 or 1")
    if Y_int.shape[1] < 2:
        raise ValueError(f"need at least 2 labels, got {Y_int.shape[1]}")
    rowsums = Y_int.sum(axis=1)
    if np.any(rowsums == 0):
        raise AllZeroLabelRow(int(np.argmin(rowsums > 0)))
    return Y_int


def validate_dataset(X, Y):
    """Validate a (features, logical labels) pair.

    Returns the validated ``(X, Y)`` with canonical dtypes.  Validation is
    idempotent: a validated pair passes through bit-identically.

    Raises
    ------
    RowCountMismatch, AllZeroLabelRow, NonFiniteEntry, ValueError
    """
    X = as_feature_matrix(X)
    Y = as_logical_labels(Y)
    if X.shape[0] != Y.shape[0]:
        raise RowCountMismatch(
            f"X has {X.shape[0]} rows but Y has {Y.shape[0]}"
        )
    return X, Y


def row_is_distribution(d, y, tol=ROW_SUM_TOL):
    """True iff ``d`` is a distribution dominated by the binary vector ``y``.

    Checks d >= 0, d <= y elementwise, and |sum(d) - 1| <= tol.
    """
    d = np.asarray(d, dtype=np.float64)
    y = np.asarray(y)
    if d.shape != y.shape:
        raise LengthMismatch(f"d has shape {d.shape}, y has shape {y.shape}")
    if np.any(d < 0) or np.any(d > y):
        return False
    return abs(float(d.sum()) - 1.0) <= tol


def check_distribution_matrix(D, Y=None, tol=ROW_SUM_TOL):
    """Raise ValueError unless every row of ``D`` is a valid distribution.

    With ``Y`` given, also requires ``D <= Y`` elementwise (exact zeros at
    zero labels follow from that plus nonnegativity).
    """
    D = np.asarray(D, dtype=np.float64)
    if np.any(D < 0):
        i, j = np.argwhere(D < 0)[0]
        raise ValueError(f"negative degree at ({i}, {j})")
    if np.any(D > 1):
        i, j = np.argwhere(D > 1)[0]
        raise ValueError(f"degree above one at ({i}, {j})")
    bad = np.abs(D.sum(axis=1) - 1.0) > tol
    if np.any(bad):
        raise ValueError(f"row {int(np.argmax(bad))} does not sum to one")
    if Y is not None:
        Y = np.asarray(Y)
        if D.shape != Y.shape:
            raise ShapeMismatch(f"D is {D.shape}, Y is {Y.shape}")
        if np.any(D > Y):
            i, j = np.argwhere(D > Y)[0]
            raise ValueError(f"degree exceeds logical label at ({i}, {j})")
    return D


@dataclass(frozen=True)
class HyperParams:
    """Solver and graph configuration.

    ``alpha`` weighs the graph-smoothness term, ``beta`` the squared
    Frobenius penalty on the recovered distributions, and ``gamma`` the
    weight-matrix regularizer.  ``rho``, ``tau_init``, ``tau_max`` and
    ``admm_tol`` drive the inner augmented-Lagrangian loop; the defaults
    are the published settings (rho=1.2, tau=0.001, tau_max=0.002, stop
    at an infinity-norm residual of 1e-3), as are ``k_neighbors=20`` and
    ``outer_iters=5``.
    """

    alpha: float = 0.1
    beta: float = 0.01
    gamma: float = 0.01
    k_neighbors: int = 20
    sigma: float | str = "auto"
    outer_iters: int = 5
    rho: float = 1.2
    tau_init: float = 0.001
    tau_max: float = 0.002
    admm_tol: float = 1e-3
    qp_tol: float = 1e-9
    d_inner_iters: int = 50
    d_step_tol: float = 1e-6
    w_grad_tol: float = 1e-5
    w_max_iters: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise ValueError("alpha, beta, gamma must be nonnegative")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be positive")
        if self.sigma != "auto":
            if not np.isfinite(self.sigma) or self.sigma <= 0:
                raise ValueError("sigma must be positive or 'auto'")
        if self.outer_iters < 1:
            raise ValueError("outer_iters must be positive")
        if self.rho <= 1:
            raise ValueError("rho must exceed 1")
        if self.tau_init <= 0 or self.tau_max < self.tau_init:
            raise ValueError("need 0 < tau_init <= tau_max")
        if self.admm_tol <= 0 or self.qp_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.d_inner_iters < 1 or self.w_max_iters < 1:
            raise ValueError("iteration caps must be positive")
        if self.d_step_tol <= 0 or self.w_grad_tol <= 0:
            raise ValueError("gradient tolerances must be positive")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
