"""k-nearest-neighbor similarity graph and its Laplacian.

The similarity matrix puts an RBF weight exp(-||x_i - x_j||^2 / (2 sigma^2))
on each directed edge from a sample to its k nearest neighbors and is then
symmetrized as (A + A^T) / 2, which the trace identity checked by
:func:`smoothness` requires.  The Laplacian is G = diag(rowsums(A)) - A.
"""

import numpy as np
from scipy.spatial.distance import cdist

from .core import DimensionMismatch, as_feature_matrix

SYMMETRY_TOL = 1e-10


class KTooLarge(ValueError):
    """Asked for at least as many neighbors as there are other samples."""


class SigmaNonPositive(ValueError):
    """RBF bandwidth must be strictly positive."""


class NotSymmetric(ValueError):
    """Laplacian construction requires a symmetrized similarity matrix."""


def knn_similarity(X, k, sigma="auto"):
    """Build the symmetrized kNN RBF similarity matrix of a feature matrix.

    Parameters
    ----------
    X : ndarray, shape (n, m)
        Feature matrix.
    k : int
        Neighbors per sample, 1 <= k < n.  Euclidean distance; ties are
        broken toward the lower sample index so results are reproducible.
    sigma : float or "auto"
        RBF bandwidth.  "auto" uses the median distance over the directed
        kNN edges (falling back to 1.0 when that median is zero, which
        happens when more than half the edges join duplicate points).

    Returns
    -------
    A : ndarray, shape (n, n)
        Symmetric, zero diagonal, entries in [0, 1].
    """
    X = as_feature_matrix(X)
    n = X.shape[0]
    k = int(k)
    if k >= n or k < 1:
        raise KTooLarge(f"k={k} needs 1 <= k < n={n}")

    dist = cdist(X, X)
    np.fill_diagonal(dist, np.inf)  # a point is not its own neighbor
    # Stable argsort keeps the lower index first among tied distances.
    order = np.argsort(dist, axis=1, kind="stable")
    neighbors = order[:, :k]

    rows = np.repeat(np.arange(n), k)
    cols = neighbors.ravel()
    edge_dist = dist[rows, cols]

    if sigma == "auto":
        sigma = float(np.median(edge_dist))
        if sigma == 0.0:
            sigma = 1.0
    else:
        sigma = float(sigma)
        if not np.isfinite(sigma) or sigma <= 0:
            raise SigmaNonPositive(f"sigma={sigma}")

    A = np.zeros((n, n))
    A[rows, cols] = np.exp(-(edge_dist**2) / (2.0 * sigma**2))
    A = (A + A.T) / 2.0
    return A


def laplacian(A):
    """Graph Laplacian G = diag(rowsums(A)) - A of a symmetric similarity."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"similarity matrix must be square, got {A.shape}")
    asym = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if asym > SYMMETRY_TOL:
        raise NotSymmetric(f"max asymmetry {asym:.3e} exceeds {SYMMETRY_TOL}")
    return np.diag(A.sum(axis=1)) - A


def smoothness(D, G):
    """Graph-smoothness penalty tr(D^T G D).

    With G built from a symmetric similarity A this equals
    (1/2) * sum_ij A_ij ||d_i - d_j||^2, so it is nonnegative and vanishes
    when all rows of D are equal.
    """
    D = np.asarray(D, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    if D.ndim != 2 or G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[1] != D.shape[0]:
        raise DimensionMismatch(f"G is {G.shape}, D is {D.shape}")
    return float(np.sum(D * (G @ D)))
