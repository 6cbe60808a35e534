"""Grid search and the end-to-end recovery/prediction experiment.

The protocol: threshold the ground-truth distributions into logical
labels, split 60/20/20, pick (alpha, beta, gamma) on the validation set
by predictive score, refit on the training set, then report recovery
metrics (recovered vs. true training distributions), predictive metrics
(predicted vs. true test distributions), and the uniform-over-positive-
labels baseline for both.

Reports serialize to a self-describing JSON document (``structured-text``)
that round-trips losslessly, or to two CSV tables (``csv-tables``) laid
out methods x metrics with ranks.  Wall-clock times are recorded only on
request so that default reports are byte-identical across reruns.
"""

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

from .core import HyperParams
from .datasets import SplitSpec, split, with_logical_labels
from .graph import knn_similarity, laplacian
from .metrics import (
    HIGHER_IS_BETTER,
    MetricReport,
    baseline_recover,
    evaluate,
    rank_methods,
)
from .solver import fit, predict_unseen

REPORT_FORMATS = ("structured-text", "csv-tables")
METHOD_NAME = "labeldist"
BASELINE_NAME = "baseline"


@dataclass(frozen=True)
class GridSpec:
    """Hyper-parameter grid; the defaults are the published search ranges."""

    alpha_grid: tuple = (1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0)
    beta_grid: tuple = (1e-3, 1e-2, 1e-1, 1.0, 10.0)
    gamma_grid: tuple = (1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0)
    selection_metric: str = "chebyshev"

    def __post_init__(self):
        for name in ("alpha_grid", "beta_grid", "gamma_grid"):
            grid = tuple(float(v) for v in getattr(self, name))
            if not grid or any(v <= 0 for v in grid):
                raise ValueError(f"{name} must be nonempty with positive entries")
            object.__setattr__(self, name, grid)
        if self.selection_metric not in HIGHER_IS_BETTER:
            raise ValueError(f"unknown selection metric {self.selection_metric!r}")

    def cells(self):
        """All (alpha, beta, gamma) triples in deterministic grid order."""
        return [(a, b, g)
                for a in self.alpha_grid
                for b in self.beta_grid
                for g in self.gamma_grid]


@dataclass(frozen=True)
class GridCellRecord:
    alpha: float
    beta: float
    gamma: float
    score: float = None
    failed: bool = False
    error: str = None


def _score_cell(args):
    X_tr, Y_tr, G, params, X_val, D_val, metric, variant = args
    result = fit(X_tr, Y_tr, params, G=G)
    pred = predict_unseen(result.W, X_val)
    return getattr(evaluate(D_val, pred, variant), metric)


def grid_search(train, val, grid=GridSpec(), params=HyperParams(),
                one_error_variant="irrelevant", n_jobs=1):
    """Fit every grid cell on ``train`` and score predictions on ``val``.

    ``train`` must carry logical labels Y (and features); ``val`` must
    carry ground-truth distributions, which the selection metric scores
    against ``predict_unseen`` outputs — validation never sees its own
    labels during fitting, so selection is leak-free.

    Returns ``(best_params, records)`` where records follow the
    deterministic grid order regardless of ``n_jobs``.  Ties prefer the
    lexicographically smaller grid cell; failed cells are excluded (all
    cells failing raises RuntimeError).
    """
    if train.Y is None:
        raise ValueError("training split carries no logical labels")
    if val.D_true is None:
        raise ValueError("validation split carries no ground-truth distributions")
    metric = grid.selection_metric
    higher_better = HIGHER_IS_BETTER[metric]
    G = laplacian(knn_similarity(train.X, params.k_neighbors, params.sigma))

    cells = grid.cells()
    tasks = [
        (train.X, train.Y, G, replace(params, alpha=a, beta=b, gamma=g),
         val.X, val.D_true, metric, one_error_variant)
        for (a, b, g) in cells
    ]
    scores = [None] * len(cells)
    errors = [None] * len(cells)
    if n_jobs == 1:
        for i, task in enumerate(tasks):
            try:
                scores[i] = _score_cell(task)
            except Exception as exc:  # cell marked failed, excluded
                errors[i] = f"{type(exc).__name__}: {exc}"
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [pool.submit(_score_cell, task) for task in tasks]
            for i, fut in enumerate(futures):
                try:
                    scores[i] = fut.result()
                except Exception as exc:
                    errors[i] = f"{type(exc).__name__}: {exc}"

    records = []
    best_idx = None
    for i, (a, b, g) in enumerate(cells):
        if errors[i] is None:
            records.append(GridCellRecord(a, b, g, score=scores[i]))
            if best_idx is None:
                best_idx = i
            elif (scores[i] > scores[best_idx]) == higher_better \
                    and scores[i] != scores[best_idx]:
                best_idx = i
        else:
            records.append(GridCellRecord(a, b, g, failed=True, error=errors[i]))
    if best_idx is None:
        raise RuntimeError(f"every grid cell failed; last error: {errors[-1]}")
    a, b, g = cells[best_idx]
    return replace(params, alpha=a, beta=b, gamma=g), records


@dataclass(frozen=True)
class ExperimentReport:
    """One dataset's full protocol outcome.

    ``diagnostics`` and ``hyperparams`` are JSON-native dicts so a report
    written as structured text loads back equal to the original.
    ``wall_clock`` stays None unless timing was requested, keeping
    default reports byte-reproducible.
    """

    dataset: str
    hyperparams: dict
    recovery: MetricReport
    predictive: MetricReport
    baseline_recovery: MetricReport
    baseline_predictive: MetricReport
    diagnostics: dict
    seed: int
    one_error_variant: str
    delta: float
    grid_records: list = field(default_factory=list)
    wall_clock: dict = None


def _fit_diagnostics(result):
    last = result.objective_trace[-1]
    return {
        "converged": result.converged,
        "outer_iterations": len(result.inner_diagnostics),
        "objective_trace": [asdict(b) for b in result.objective_trace],
        "outer": [asdict(d) for d in result.inner_diagnostics],
        "final_objective": last.total,
    }


def run_experiment(dataset, spec=SplitSpec(), grid=GridSpec(),
                   params=HyperParams(), delta=0.01,
                   one_error_variant="irrelevant", n_jobs=1, timing=False):
    """Run the whole protocol on a dataset carrying ground-truth LDs.

    binarize -> split -> grid search on (train, val) -> final fit on the
    training split -> recovery, predictive, and baseline metrics.
    """
    if dataset.D_true is None:
        raise ValueError("experiment needs ground-truth distributions")
    t0 = time.perf_counter()
    labeled = with_logical_labels(dataset, delta)
    train, val, test = split(labeled, spec)

    t_grid = time.perf_counter()
    best, records = grid_search(train, val, grid, params,
                                one_error_variant=one_error_variant,
                                n_jobs=n_jobs)
    t_fit = time.perf_counter()
    result = fit(train.X, train.Y, best)
    t_done = time.perf_counter()

    recovery = evaluate(train.D_true, result.D, one_error_variant)
    predictive = evaluate(test.D_true, predict_unseen(result.W, test.X),
                          one_error_variant)
    baseline_rec = evaluate(train.D_true, baseline_recover(train.Y),
                            one_error_variant)
    baseline_pred = evaluate(test.D_true, baseline_recover(test.Y),
                             one_error_variant)

    wall_clock = None
    if timing:
        wall_clock = {
            "grid_search_s": t_fit - t_grid,
            "final_fit_s": t_done - t_fit,
            "total_s": time.perf_counter() - t0,
        }
    return ExperimentReport(
        dataset=dataset.name,
        hyperparams=asdict(best),
        recovery=recovery,
        predictive=predictive,
        baseline_recovery=baseline_rec,
        baseline_predictive=baseline_pred,
        diagnostics=_fit_diagnostics(result),
        seed=spec.seed,
        one_error_variant=one_error_variant,
        delta=delta,
        grid_records=[asdict(r) for r in records],
        wall_clock=wall_clock,
    )


def write_report(report, path, fmt="structured-text"):
    """Write a report; ``csv-tables`` derives two files from the path stem.

    structured-text is a single JSON document whose field names match the
    ExperimentReport fields; loading it back yields an equal report.
    csv-tables writes ``<stem>.recovery.csv`` and ``<stem>.predictive.csv``
    in a methods x metrics layout with ranks.
    """
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"format must be one of {REPORT_FORMATS}")
    path = str(path)
    if not path:
        raise OSError("empty output path")
    if fmt == "structured-text":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(report), fh, indent=2)
            fh.write("\n")
        return [path]

    stem = path[:-4] if path.endswith(".csv") else path
    written = []
    for tag, ours, base in (
        ("recovery", report.recovery, report.baseline_recovery),
        ("predictive", report.predictive, report.baseline_predictive),
    ):
        ranking = rank_methods([(METHOD_NAME, ours), (BASELINE_NAME, base)])
        out = f"{stem}.{tag}.csv"
        with open(out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            header = ["method"]
            for metric in HIGHER_IS_BETTER:
                header += [metric, f"{metric}_rank"]
            header.append("average_rank")
            writer.writerow(header)
            for name, rep in ((METHOD_NAME, ours), (BASELINE_NAME, base)):
                row = [name]
                for metric in HIGHER_IS_BETTER:
                    row += [repr(getattr(rep, metric)), ranking[metric][name]]
                row.append(ranking["average"][name])
                writer.writerow(row)
        written.append(out)
    return written


def load_report(path):
    """Load a structured-text report back into an ExperimentReport."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    for key in ("recovery", "predictive", "baseline_recovery",
                "baseline_predictive"):
        raw[key] = MetricReport(**raw[key])
    return ExperimentReport(**raw)
