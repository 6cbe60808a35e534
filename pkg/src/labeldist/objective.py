"""Softmax prediction model, KL loss, and the two subproblem objectives.

The prediction matrix is the row-wise softmax P = softmax(XW).  The
weight subproblem minimizes

    T(W) = sum_i log sum_j exp((XW)_ij) - sum_ij D_ij (XW)_ij + gamma ||W||_F^2,

which equals KL(D, P) + gamma ||W||_F^2 up to the entropy of D (constant
in W).  The distribution subproblem used inside the augmented-Lagrangian
loop is

    U(D) = KL(D, P) + alpha tr(D^T G D) + beta ||D||_F^2
           + <Phi, B - D> + (tau / 2) ||B - D||_F^2.

Entries of D pinned at exactly zero stay zero: their partial derivative
is defined as zero, and positive entries have their logarithm floored at
1e-12 so the gradient stays finite next to the boundary.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import DimensionMismatch, ShapeMismatch

D_FLOOR = 1e-12


class NonPositivePrediction(ValueError):
    """KL against a prediction that is zero or negative where D has mass."""


class NegativeD(ValueError):
    """Distribution entries must be nonnegative."""


def _check_xw(X, W):
    X = np.asarray(X, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if X.ndim != 2 or W.ndim != 2 or X.shape[1] != W.shape[0]:
        raise DimensionMismatch(f"X is {X.shape}, W is {W.shape}")
    return X, W


def predict(X, W):
    """Row-wise softmax of XW, stabilized by subtracting each row's max logit.

    Returns an (n, c) matrix with strictly positive rows summing to one
    (entries can underflow to zero only when a row's logit spread exceeds
    ~700, far beyond what a regularized fit produces).
    """
    X, W = _check_xw(X, W)
    logits = X @ W
    logits -= logits.max(axis=1, keepdims=True)
    P = np.exp(logits)
    P /= P.sum(axis=1, keepdims=True)
    return P


def log_predict(X, W):
    """log(predict(X, W)) computed as logits minus the row log-sum-exp.

    Exact for all finite W, including regimes where the softmax itself
    would underflow.
    """
    X, W = _check_xw(X, W)
    logits = X @ W
    return logits - logsumexp(logits, axis=1, keepdims=True)


def kl_divergence(D, P):
    """sum_ij D_ij log(D_ij / P_ij) with the 0 log 0 = 0 convention.

    Tiny negative totals from roundoff (above -1e-12) are reported as 0.
    Raises NonPositivePrediction when P <= 0 somewhere D carries mass.
    """
    D = np.asarray(D, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    if D.shape != P.shape:
        raise ShapeMismatch(f"D is {D.shape}, P is {P.shape}")
    if np.any(D < 0):
        raise NegativeD("D has negative entries")
    mask = D > 0
    if np.any(P[mask] <= 0):
        raise NonPositivePrediction("prediction is not positive where D > 0")
    ratio = np.ones_like(D)
    np.divide(D, P, out=ratio, where=mask)
    total = float(np.sum(D[mask] * np.log(ratio[mask])))
    if -1e-12 < total < 0.0:
        return 0.0
    return total


def w_objective(W, X, D, gamma):
    """Value of the weight subproblem T(W); log-sum-exp computed stably."""
    X, W = _check_xw(X, W)
    D = np.asarray(D, dtype=np.float64)
    if D.shape != (X.shape[0], W.shape[1]):
        raise ShapeMismatch(f"D is {D.shape}, expected {(X.shape[0], W.shape[1])}")
    logits = X @ W
    lse = logsumexp(logits, axis=1)
    return float(lse.sum() - np.sum(D * logits) + gamma * np.sum(W * W))


def w_gradient(W, X, D, gamma):
    """Gradient of T: X^T (P - D) + 2 gamma W with P = predict(X, W)."""
    X, W = _check_xw(X, W)
    D = np.asarray(D, dtype=np.float64)
    if D.shape != (X.shape[0], W.shape[1]):
        raise ShapeMismatch(f"D is {D.shape}, expected {(X.shape[0], W.shape[1])}")
    P = predict(X, W)
    return X.T @ (P - D) + 2.0 * gamma * W


def _check_d_args(D, P, G, B, Phi):
    D = np.asarray(D, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    Phi = np.asarray(Phi, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    for name, M in (("P", P), ("B", B), ("Phi", Phi)):
        if M.shape != D.shape:
            raise ShapeMismatch(f"{name} is {M.shape}, D is {D.shape}")
    if G.shape != (D.shape[0], D.shape[0]):
        raise DimensionMismatch(f"G is {G.shape}, D has {D.shape[0]} rows")
    if np.any(D < 0):
        raise NegativeD("D has negative entries")
    return D, P, G, B, Phi


def d_objective(D, P, G, B, Phi, alpha, beta, tau):
    """Value of the distribution subproblem U(D); 0 log 0 treated as 0."""
    D, P, G, B, Phi = _check_d_args(D, P, G, B, Phi)
    mask = D > 0
    ratio = np.ones_like(D)
    np.divide(D, P, out=ratio, where=mask)
    kl = float(np.sum(D[mask] * np.log(ratio[mask])))
    diff = B - D
    return (
        kl
        + alpha * float(np.sum(D * (G @ D)))
        + beta * float(np.sum(D * D))
        + float(np.sum(Phi * diff))
        + 0.5 * tau * float(np.sum(diff * diff))
    )


def d_gradient(D, P, G, B, Phi, alpha, beta, tau):
    """Entrywise gradient of U(D).

    For D_ij > 0:
        1 + log D_ij - log P_ij + alpha [(G + G^T) D]_ij + 2 beta D_ij
        - Phi_ij + tau (D_ij - B_ij),
    and exactly 0 where D_ij = 0 (pinned entries do not move).  The log of
    entries below 1e-12 is evaluated at the floor.
    """
    D, P, G, B, Phi = _check_d_args(D, P, G, B, Phi)
    mask = D > 0
    logD = np.log(np.maximum(D, D_FLOOR))
    logP = np.zeros_like(D)
    np.log(P, out=logP, where=mask & (P > 0))
    grad = (
        1.0
        + logD
        - logP
        + alpha * ((G + G.T) @ D)
        + 2.0 * beta * D
        - Phi
        + tau * (D - B)
    )
    grad[~mask] = 0.0
    return grad


@dataclass(frozen=True)
class ObjectiveBreakdown:
    """Joint objective split into its four terms.

    ``total`` is kl_term + alpha*laplacian_term + beta*d_frob_term +
    gamma*w_frob_term for the weights the breakdown was computed with.
    """

    kl_term: float
    laplacian_term: float
    d_frob_term: float
    w_frob_term: float
    total: float


def full_objective(D, W, X, G, alpha, beta, gamma):
    """Evaluate the joint objective with P = predict(X, W)."""
    P = predict(X, W)
    kl = kl_divergence(D, P)
    lap = float(np.sum(D * (G @ D)))
    d_frob = float(np.sum(np.square(D)))
    w_frob = float(np.sum(np.square(W)))
    total = kl + alpha * lap + beta * d_frob + gamma * w_frob
    return ObjectiveBreakdown(kl, lap, d_frob, w_frob, total)
