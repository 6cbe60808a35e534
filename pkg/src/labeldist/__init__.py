"""Learn label-distribution predictors directly from binary annotations.

The toolkit recovers per-sample label distributions from logical (0/1)
multi-label matrices under hard feasibility constraints (degrees vanish
exactly on negative labels, rows sum to one) while jointly training a
softmax predictor for unseen samples, and ships the surrounding
experiment protocol: kNN graph regularization, evaluation metrics,
synthetic data, grid search, and reproducible reports.
"""

from .core import (
    HyperParams,
    RowCountMismatch,
    AllZeroLabelRow,
    NonFiniteEntry,
    LengthMismatch,
    ShapeMismatch,
    DimensionMismatch,
    validate_dataset,
    row_is_distribution,
)
from .graph import knn_similarity, laplacian, smoothness
from .objective import (
    ObjectiveBreakdown,
    predict,
    kl_divergence,
    w_objective,
    w_gradient,
    d_objective,
    d_gradient,
    full_objective,
)
from .solver import (
    AdmmState,
    AdmmDiagnostics,
    FitResult,
    InfeasibleCap,
    capped_simplex_project,
    update_b,
    update_d_inner,
    solve_d,
    update_w,
    fit,
    predict_unseen,
)
from .metrics import (
    MetricReport,
    chebyshev,
    clark,
    one_error,
    intersection,
    evaluate,
    baseline_recover,
    rank_methods,
)
from .datasets import (
    LdlDataset,
    SplitSpec,
    load_dataset,
    save_dataset,
    binarize,
    split,
    synth_dataset,
    with_logical_labels,
)
from .experiment import (
    GridSpec,
    ExperimentReport,
    grid_search,
    run_experiment,
    write_report,
    load_report,
)

__version__ = "0.1.0"
