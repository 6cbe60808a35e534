"""Distribution-comparison metrics, rankings, and the trivial recoverer.

All four measures average a per-instance score over rows: Chebyshev
(max absolute coordinate gap), Clark (coordinate-normalized Euclidean
form, 0/0 terms contribute nothing), one-error (does the top predicted
label fail a relevance check), and intersection (sum of coordinate
minima, which equals one minus the total-variation distance).

One-error comes in two variants because the literature uses both:

* ``"irrelevant"`` (default): the top predicted label has ground-truth
  degree exactly zero.  Methods that never move mass onto negative
  labels score an exact 0 here.
* ``"mismatch"``: the top predicted label differs from the top
  ground-truth label.

Argmax ties break toward the lowest index so results are reproducible.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .core import ShapeMismatch

ONE_ERROR_VARIANTS = ("irrelevant", "mismatch")
HIGHER_IS_BETTER = {"chebyshev": False, "clark": False,
                    "one_error": False, "intersection": True}


class EmptyInput(ValueError):
    """Ranking needs at least two reports."""


def _paired(D_true, D_pred):
    D_true = np.asarray(D_true, dtype=np.float64)
    D_pred = np.asarray(D_pred, dtype=np.float64)
    if D_true.shape != D_pred.shape or D_true.ndim != 2:
        raise ShapeMismatch(f"true is {D_true.shape}, pred is {D_pred.shape}")
    return D_true, D_pred


def chebyshev(D_true, D_pred):
    """Mean over instances of max_j |d_j - p_j| (lower is better)."""
    D_true, D_pred = _paired(D_true, D_pred)
    return float(np.abs(D_true - D_pred).max(axis=1).mean())


def clark(D_true, D_pred):
    """Mean over instances of sqrt(sum_j (d_j-p_j)^2 / (d_j+p_j)^2).

    Coordinates where both degrees are zero contribute zero.
    """
    D_true, D_pred = _paired(D_true, D_pred)
    num = (D_true - D_pred) ** 2
    den = (D_true + D_pred) ** 2
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(np.sqrt(terms.sum(axis=1)).mean())


def one_error(D_true, D_pred, variant="irrelevant"):
    """Fraction of instances whose top predicted label fails the check.

    ``variant="irrelevant"``: the true degree at argmax(pred) is zero.
    ``variant="mismatch"``: argmax(pred) differs from argmax(true).
    """
    D_true, D_pred = _paired(D_true, D_pred)
    if variant not in ONE_ERROR_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    top_pred = D_pred.argmax(axis=1)
    if variant == "mismatch":
        errs = top_pred != D_true.argmax(axis=1)
    else:
        rows = np.arange(D_true.shape[0])
        errs = D_true[rows, top_pred] == 0
    return float(errs.mean())


def intersection(D_true, D_pred):
    """Mean over instances of sum_j min(d_j, p_j) (higher is better)."""
    D_true, D_pred = _paired(D_true, D_pred)
    return float(np.minimum(D_true, D_pred).sum(axis=1).mean())


@dataclass(frozen=True)
class MetricReport:
    """All four metric means for one (truth, prediction) pair."""

    chebyshev: float
    clark: float
    one_error: float
    intersection: float
    n_instances: int
    one_error_variant: str


def evaluate(D_true, D_pred, one_error_variant="irrelevant"):
    """Assemble a MetricReport for a pair of distribution matrices."""
    D_true, D_pred = _paired(D_true, D_pred)
    return MetricReport(
        chebyshev=chebyshev(D_true, D_pred),
        clark=clark(D_true, D_pred),
        one_error=one_error(D_true, D_pred, one_error_variant),
        intersection=intersection(D_true, D_pred),
        n_instances=D_true.shape[0],
        one_error_variant=one_error_variant,
    )


def baseline_recover(Y):
    """Trivial recoverer: spread each row uniformly over its positive labels."""
    Y = np.asarray(Y, dtype=np.float64)
    sums = Y.sum(axis=1, keepdims=True)
    if np.any(sums == 0):
        raise ValueError("a row has no positive label")
    return Y / sums


def rank_methods(reports):
    """Rank named MetricReports per metric; ties share the mean rank.

    Parameters
    ----------
    reports : sequence of (name, MetricReport)

    Returns
    -------
    dict
        ``{metric: {name: rank}}`` for the four metrics (rank 1 = best;
        distance metrics rank ascending, intersection descending) plus an
        ``"average"`` entry with each method's mean rank across metrics.
    """
    reports = list(reports)
    if len(reports) < 2:
        raise EmptyInput("need at least two reports to rank")
    names = [name for name, _ in reports]
    out = {}
    sums = np.zeros(len(reports))
    for metric, higher_better in HIGHER_IS_BETTER.items():
        values = np.array([getattr(rep, metric) for _, rep in reports])
        ranks = rankdata(-values if higher_better else values, method="average")
        out[metric] = {name: float(r) for name, r in zip(names, ranks)}
        sums += ranks
    out["average"] = {name: float(s / 4.0) for name, s in zip(names, sums)}
    return out
