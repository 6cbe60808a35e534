"""Alternating solver for the joint recovery / prediction problem.

Three layers, bottom up:

* :func:`capped_simplex_project` - Euclidean projection of a vector onto
  {b : 0 <= b <= y, sum(b) = 1}, the feasible set of one recovered row.
  The equality-and-box QP separates per row, so the full B-update is n
  independent projections (:func:`update_b`).
* :func:`solve_d` - the inner augmented-Lagrangian loop: alternate an
  inexact minimization of the smooth objective U(D)
  (:func:`update_d_inner`), the feasibility projection B, and the
  multiplier update Phi += tau (B - D) with tau = min(rho tau, tau_max),
  until ||B - D||_inf falls below the tolerance.  The returned D is the
  final B, so it is feasible by construction: zero-label entries are
  exactly zero and every row sums to one.
* :func:`fit` - the outer alternation between the convex weight update
  (:func:`update_w`, gradient descent with Armijo backtracking) and
  :func:`solve_d`, recording an objective breakdown per outer iteration.

The D-descent uses diagonally preconditioned projected gradient steps
(the Hessian of U is diag(1/D) plus small terms, so dividing the
gradient by that diagonal turns a badly conditioned problem into one
that converges in a handful of backtracked steps).  Because the penalty
schedule caps tau at a small value, the multiplier is the workhorse of
feasibility: it grows by at most tau * ||B - D|| per pass, so the inner
loop needs many cheap passes and :func:`fit` carries the multiplier
across outer iterations instead of rebuilding it from zero.

Line-search stalls are diagnostics, not failures: every routine keeps
its best iterate and reports the stall through its info record.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import (
    HyperParams,
    LengthMismatch,
    DimensionMismatch,
    NonFiniteEntry,
    validate_dataset,
)
from .graph import knn_similarity, laplacian
from .objective import D_FLOOR, full_objective, predict

MAX_ADMM_ITERS = 4000
WARM_PASS_STEPS = 8
MIN_D_STEP = 1e-8
MIN_W_STEP = 1e-14
ARMIJO_C = 1e-4
_LOG_TINY = np.finfo(np.float64).tiny


class InfeasibleCap(ValueError):
    """Projection target has no feasible point (all caps zero)."""

    def __init__(self, row=None):
        self.row = row
        where = "" if row is None else f" in row {row}"
        super().__init__(f"all-zero cap vector{where}: the feasible set is empty")


# ---------------------------------------------------------------------------
# B-subproblem: projection onto the capped simplex
# ---------------------------------------------------------------------------


def _exact_correction(B, s, maskf, rounds=2):
    """Spread the row-sum residual over strictly interior coordinates."""
    for _ in range(rounds):
        free = (B > 0.0) & (B < 1.0)
        nfree = free.sum(axis=1)
        adjust = np.where(nfree > 0, (s - 1.0) / np.maximum(nfree, 1), 0.0)
        if not np.any(adjust):
            break
        B = np.where(free, B - adjust[:, None], B)
        np.clip(B, 0.0, 1.0, out=B)
        B *= maskf
        s = B.sum(axis=1)
    return B


def _project_rows_bisect(T, mask, tol, max_bisect=120):
    """Row-wise capped-simplex projection by bisection on the shift.

    b = clip(t - lam, 0, 1) over positive-cap coordinates; lam is
    bisected until |sum(b) - 1| <= tol, then the residual is spread
    exactly over the strictly interior coordinates.
    """
    maskf = mask.astype(np.float64)
    lo = np.min(np.where(mask, T, np.inf), axis=1) - 1.0  # sum(clip) = #active >= 1
    hi = np.max(np.where(mask, T, -np.inf), axis=1)       # sum(clip) = 0
    B = None
    s = None
    for _ in range(max_bisect):
        lam = 0.5 * (lo + hi)
        B = np.clip(T - lam[:, None], 0.0, 1.0)
        B *= maskf
        s = B.sum(axis=1)
        if np.max(np.abs(s - 1.0)) <= tol:
            break
        too_low = s > 1.0  # shift too small, mass above one
        lo = np.where(too_low, lam, lo)
        hi = np.where(too_low, hi, lam)
    return _exact_correction(B, s, maskf)


def _project_rows_sorted(T, mask):
    """Row-wise capped-simplex projection by exact breakpoint search.

    sum_j clip(t_j - lam, 0, 1) is piecewise linear and nonincreasing in
    lam with breakpoints at t_j and t_j - 1, so the shift solving
    sum = 1 sits between two consecutive sorted breakpoints and linear
    interpolation recovers it exactly.  Same minimizer as the bisection
    path, at a fixed small op count; used on the solver hot path.
    """
    maskf = mask.astype(np.float64)
    V = np.where(mask, T, np.inf)  # inactive coordinates push their knots past the end
    knots = np.sort(np.concatenate([V - 1.0, V], axis=1), axis=1)
    # s at every knot; inactive coordinates are masked out of the sum
    diff = T[:, None, :] - knots[:, :, None]
    s_at = np.sum(np.clip(diff, 0.0, 1.0) * maskf[:, None, :], axis=2)
    # First knot index where s <= 1; s at the smallest knot is #active >= 1
    # and s at the largest finite knot (the max active t) is 0.
    k = np.argmax(s_at <= 1.0, axis=1)
    rows = np.arange(T.shape[0])
    k_lo = np.maximum(k - 1, 0)
    lam_lo = knots[rows, k_lo]
    lam_hi = knots[rows, k]
    s_lo = s_at[rows, k_lo]
    s_hi = s_at[rows, k]
    span = s_lo - s_hi
    frac = np.where(span > 0, (s_lo - 1.0) / np.where(span > 0, span, 1.0), 0.0)
    lam = np.where(k == 0, lam_hi, lam_lo + frac * (lam_hi - lam_lo))
    B = np.clip(T - lam[:, None], 0.0, 1.0)
    B *= maskf
    return _exact_correction(B, B.sum(axis=1), maskf)


def capped_simplex_project(v, y, tol=1e-9):
    """Euclidean projection of v onto {b : 0 <= b <= y, sum(b) = 1}.

    Coordinates with y_j = 0 come back exactly zero.  Bisection on the
    clip shift runs until the row sum is within ``tol`` of one, followed
    by an exact correction over the interior coordinates.  Raises
    InfeasibleCap when y has no positive entry, LengthMismatch when the
    vectors disagree in length.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    y = np.asarray(y).ravel()
    if v.shape != y.shape:
        raise LengthMismatch(f"v has length {v.size}, y has length {y.size}")
    mask = y > 0
    if not mask.any():
        raise InfeasibleCap()
    return _project_rows_bisect(v[None, :], mask[None, :], tol)[0]


def update_b(D, Phi, tau, Y, tol=1e-9):
    """Feasibility step: project D - Phi/tau rowwise onto the capped simplex.

    Completing the square in <Phi, B - D> + (tau/2) ||B - D||_F^2 shows
    the minimizer over the constraint set is the projection of
    D - Phi / tau; the constraints are row-separable, so each row is one
    capped-simplex projection.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    D = np.asarray(D, dtype=np.float64)
    Phi = np.asarray(Phi, dtype=np.float64)
    Y = np.asarray(Y)
    mask = Y > 0
    rowless = ~mask.any(axis=1)
    if rowless.any():
        raise InfeasibleCap(int(np.argmax(rowless)))
    return _project_rows_sorted(D - Phi / tau, mask)


# ---------------------------------------------------------------------------
# D-subproblem: preconditioned projected descent on U(D)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdmmState:
    """One snapshot of the inner loop: primal D, copy B, multiplier Phi.

    ``B`` is feasible after every projection step (the all-zero starting
    value predates the first one).  ``residual_inf`` is ||B - D||_inf.
    """

    D: np.ndarray
    B: np.ndarray
    Phi: np.ndarray
    tau: float
    iteration: int = 0
    residual_inf: float = np.inf


@dataclass(frozen=True)
class DStepInfo:
    steps: int
    grad_inf: float
    stalled: bool


@dataclass(frozen=True)
class AdmmDiagnostics:
    """Inner-loop exit record: iteration count, final residual, flags.

    ``final_state`` keeps the last multiplier so a caller can warm-start
    the next solve; it is not part of any serialized report.
    """

    iterations: int
    residual_inf: float
    converged: bool
    tau_final: float
    stalled_passes: int
    final_state: "AdmmState" = None


class _DProblem:
    """Precomputed pieces of U(D) shared across passes for one fixed P.

    ``scale`` multiplies the smooth part (KL + graph + Frobenius) while
    the linear multiplier term and the quadratic penalty stay unscaled.
    The public subproblem ops use scale=1 (the objective exactly as
    written); :func:`solve_d` uses scale=1/n, which optimizes the
    per-sample mean of the objective.  The published penalty schedule
    (tau growing 0.001 -> 0.002) only behaves at that scale: against the
    raw sum the dual step is ~n times too small for the multiplier to
    enforce the row sums within any practical number of passes.  The
    minimizer of the outer problem is unaffected (scaling an objective
    does not move its argmin); only the inner-loop conditioning changes.
    """

    __slots__ = ("logP", "Gs", "hdiag_rest", "maskf", "beta", "scale")

    def __init__(self, P, G, alpha, beta, maskf, scale=1.0):
        self.logP = np.log(np.maximum(P, _LOG_TINY))
        self.Gs = (scale * alpha) * (G + G.T)
        self.maskf = maskf
        self.beta = scale * beta
        self.scale = scale
        # Hessian diagonal apart from the scale/D part.
        self.hdiag_rest = np.diag(self.Gs)[:, None] + 2.0 * self.beta

    def value(self, D, GsD, tau, B, Phi):
        # Zero entries of D kill their KL terms exactly (0 * finite log).
        kl = float(np.sum(D * (np.log(np.maximum(D, _LOG_TINY)) - self.logP)))
        diff = B - D
        return (
            self.scale * kl
            + 0.5 * float(np.sum(D * GsD))
            + self.beta * float(np.sum(D * D))
            + float(np.sum(Phi * diff))
            + 0.5 * tau * float(np.sum(diff * diff))
        )

    def gradient(self, D, GsD, tau, B, Phi):
        grad = 1.0 + np.log(np.maximum(D, D_FLOOR)) - self.logP
        if self.scale != 1.0:
            grad *= self.scale
        grad += GsD
        grad += (2.0 * self.beta + tau) * D
        grad -= Phi + tau * B
        grad *= self.maskf
        return grad

    def hessian_diag(self, D, tau):
        return self.scale / np.maximum(D, D_FLOOR) + self.hdiag_rest + tau


def _descend_d(problem, D, GsD, tau, B, Phi, max_steps, grad_tol):
    """Monotone preconditioned projected descent on U(D).

    Each step divides the gradient by the Hessian diagonal
    (scale/D + alpha (G+G^T)_ii + 2 beta + tau) and backtracks the step
    size from 1.0, halving until U decreases; free entries stay in
    [1e-12, 1] and pinned entries stay exactly zero.  Returns
    ``(D, GsD, info)`` with ``GsD = Gs @ D`` kept in sync so the caller
    can reuse it.
    """
    value = problem.value(D, GsD, tau, B, Phi)
    stalled = False
    grad_inf = np.inf
    steps = 0
    for _ in range(max_steps):
        grad = problem.gradient(D, GsD, tau, B, Phi)
        grad_inf = float(np.max(np.abs(grad)))
        if grad_inf <= grad_tol:
            break
        direction = grad / problem.hessian_diag(D, tau)
        eta = 1.0
        while True:
            trial = np.clip(D - eta * direction, D_FLOOR, 1.0)
            trial *= problem.maskf
            GsD_trial = problem.Gs @ trial
            trial_value = problem.value(trial, GsD_trial, tau, B, Phi)
            if trial_value < value:
                D, GsD, value = trial, GsD_trial, trial_value
                steps += 1
                break
            eta *= 0.5
            if eta < MIN_D_STEP:
                stalled = True
                break
        if stalled:
            break
    return D, GsD, DStepInfo(steps, grad_inf, stalled)


def update_d_inner(state, P, G, alpha, beta, params=None, free_mask=None):
    """One inexact D-minimization of the augmented Lagrangian.

    Runs up to ``params.d_inner_iters`` projected descent steps with a
    backtracking line search (step size starts at 1.0 and halves until
    the objective decreases), holding entries outside ``free_mask`` at
    exactly zero and clamping free entries to [1e-12, 1].  Stops early
    once the gradient's max-abs over free entries drops to
    ``params.d_step_tol``.  The objective never increases.

    Returns ``(D, info)``; ``info.stalled`` flags a line search that
    found no descent at the minimum step (D is then the best iterate
    reached).
    """
    params = params or HyperParams()
    D = np.asarray(state.D, dtype=np.float64)
    if free_mask is None:
        free_mask = D > 0
    maskf = free_mask.astype(np.float64)
    D = np.clip(D, D_FLOOR, 1.0) * maskf
    problem = _DProblem(np.asarray(P, dtype=np.float64), G, alpha, beta,
                        maskf, scale=1.0)
    D, _, info = _descend_d(problem, D, problem.Gs @ D, state.tau,
                            state.B, state.Phi,
                            params.d_inner_iters, params.d_step_tol)
    return D, info


def solve_d(D0, P, G, Y, alpha, beta, params=None, Phi0=None,
            max_iters=None):
    """Inner augmented-Lagrangian loop for the distribution subproblem.

    Alternates the inexact D-descent, the capped-simplex projection B,
    and the multiplier update Phi += tau (B - D), tau = min(rho tau,
    tau_max), until ||B - D||_inf <= params.admm_tol or ``max_iters``
    passes.  The smooth part of the objective is optimized as its
    per-sample mean (see :class:`_DProblem`), which the published penalty
    schedule presumes; the subproblem minimizer is unchanged.  Returns
    ``(D, diagnostics)`` where D is the final projection B, hence
    feasible for Y to within params.qp_tol; non-convergence is reported
    through ``diagnostics.converged``, never raised.

    ``Phi0`` warm-starts the multiplier (see :func:`fit`).
    """
    params = params or HyperParams()
    if max_iters is None:
        max_iters = MAX_ADMM_ITERS
    Y = np.asarray(Y)
    mask = Y > 0
    rowless = ~mask.any(axis=1)
    if rowless.any():
        raise InfeasibleCap(int(np.argmax(rowless)))
    maskf = mask.astype(np.float64)

    D = np.clip(np.asarray(D0, dtype=np.float64), D_FLOOR, 1.0) * maskf
    B = np.zeros_like(D)
    Phi = np.zeros_like(D) if Phi0 is None else np.array(Phi0, dtype=np.float64)
    tau = params.tau_init

    problem = _DProblem(np.asarray(P, dtype=np.float64), G, alpha, beta,
                        maskf, scale=1.0 / D.shape[0])
    GsD = problem.Gs @ D

    stalled_passes = 0
    residual = float(np.max(np.abs(B - D)))
    iterations = 0
    while iterations < max_iters:
        if residual <= params.admm_tol and iterations > 0:
            break
        iterations += 1
        # The first pass gets the full descent budget to absorb the new P;
        # later passes only track the slow multiplier drift, where a few
        # steps produce the same iterates as the full budget at a fraction
        # of the cost.
        budget = params.d_inner_iters if iterations == 1 else \
            min(WARM_PASS_STEPS, params.d_inner_iters)
        D, GsD, info = _descend_d(problem, D, GsD, tau, B, Phi,
                                  budget, params.d_step_tol)
        stalled_passes += int(info.stalled)
        B = _project_rows_sorted(D - Phi / tau, mask)
        Phi = Phi + tau * (B - D)
        tau = min(params.rho * tau, params.tau_max)
        residual = float(np.max(np.abs(B - D)))

    converged = residual <= params.admm_tol
    final = AdmmState(D=B, B=B, Phi=Phi, tau=tau, iteration=iterations,
                      residual_inf=residual)
    diag = AdmmDiagnostics(iterations, residual, converged, tau,
                           stalled_passes, final)
    return final.D, diag


# ---------------------------------------------------------------------------
# W-subproblem: gradient descent on the convex T(W)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WStepInfo:
    iterations: int
    grad_norm: float
    stalled: bool
    converged: bool


def _t_value(logits, D, W, gamma):
    return float(logsumexp(logits, axis=1).sum() - np.sum(D * logits)
                 + gamma * np.sum(W * W))


def update_w(W0, X, D, gamma, params=None):
    """Minimize T(W) by gradient descent with Armijo backtracking.

    The trial step starts from a Barzilai-Borwein estimate of the local
    curvature and halves until the Armijo condition (c = 1e-4) holds;
    T never increases.  Stops when the gradient Frobenius norm reaches
    ``params.w_grad_tol`` or after ``params.w_max_iters`` iterations.
    Returns ``(W, info)`` with a stall flag instead of raising when the
    line search bottoms out.
    """
    params = params or HyperParams()
    X = np.asarray(X, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    W = np.array(W0, dtype=np.float64)
    if X.shape[1] != W.shape[0] or D.shape != (X.shape[0], W.shape[1]):
        raise DimensionMismatch(
            f"X {X.shape}, W {W.shape}, D {D.shape} do not conform"
        )

    logits = X @ W
    value = _t_value(logits, D, W, gamma)
    stalled = False
    converged = False
    grad_norm = np.inf
    grad_prev = None
    W_prev = None
    eta = 1.0
    iterations = 0
    for iterations in range(1, params.w_max_iters + 1):
        shifted = logits - logits.max(axis=1, keepdims=True)
        P = np.exp(shifted)
        P /= P.sum(axis=1, keepdims=True)
        grad = X.T @ (P - D) + 2.0 * gamma * W
        grad_norm = float(np.sqrt(np.sum(grad * grad)))
        if grad_norm <= params.w_grad_tol:
            converged = True
            iterations -= 1
            break
        if grad_prev is not None:
            dW = W - W_prev
            dG = grad - grad_prev
            denom = float(np.sum(dG * dG))
            if denom > 0:
                eta = max(min(float(np.sum(dW * dG)) / denom, 1e3), MIN_W_STEP)
        W_prev, grad_prev = W, grad
        sq = grad_norm**2
        while True:
            W_try = W - eta * grad
            logits_try = X @ W_try
            value_try = _t_value(logits_try, D, W_try, gamma)
            if value_try <= value - ARMIJO_C * eta * sq:
                W, logits, value = W_try, logits_try, value_try
                break
            eta *= 0.5
            if eta < MIN_W_STEP:
                stalled = True
                break
        if stalled:
            break
    return W, WStepInfo(iterations, grad_norm, stalled, converged)


# ---------------------------------------------------------------------------
# Outer alternation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OuterDiagnostics:
    """Per-outer-iteration record of both subproblem solves."""

    w_iterations: int
    w_grad_norm: float
    w_stalled: bool
    admm_iterations: int
    admm_residual_inf: float
    admm_converged: bool
    admm_stalled_passes: int
    tau_final: float


@dataclass(frozen=True)
class FitResult:
    """Everything a fit produces.

    ``D`` is the recovered label-distribution matrix (the final
    feasibility projection, so D <= Y holds exactly and rows sum to one);
    ``W`` parameterizes the softmax predictor for unseen samples.
    ``objective_trace[0]`` is the objective at the initial point and each
    later entry follows one outer iteration.
    """

    D: np.ndarray
    W: np.ndarray
    objective_trace: tuple
    inner_diagnostics: tuple
    converged: bool


REL_OBJECTIVE_TOL = 1e-6


def fit(X, Y, params=None, G=None):
    """Recover label distributions and train the predictor jointly.

    Alternates the weight update and the constrained distribution solve
    for ``params.outer_iters`` rounds, stopping early when the relative
    change of the joint objective falls below 1e-6.

    The multiplier Phi of the inner loop carries over between outer
    iterations (each inner loop still starts from B = 0).  The dual step
    is capped at tau_max, so a cold multiplier restart would discard the
    accumulated dual estimate that enforces the sum-to-one constraint
    and would have to rebuild it from scratch each round; carrying it
    over keeps successive inner solves consistent with each other and
    the outer objective trace non-increasing.

    Parameters
    ----------
    X, Y : ndarray
        Features (n, m) and logical labels (n, c); validated on entry.
    params : HyperParams, optional
    G : ndarray, optional
        Precomputed graph Laplacian; built from X (k-nearest-neighbor RBF
        similarity) when absent.

    Returns
    -------
    FitResult
    """
    params = params or HyperParams()
    X, Y = validate_dataset(X, Y)
    n, m = X.shape
    c = Y.shape[1]
    if G is None:
        G = laplacian(knn_similarity(X, params.k_neighbors, params.sigma))

    W = np.eye(m, c)  # rectangular identity
    D = Y / Y.sum(axis=1, keepdims=True)
    Phi = np.zeros_like(D)

    trace = [full_objective(D, W, X, G, params.alpha, params.beta, params.gamma)]
    diagnostics = []
    converged = False
    for _ in range(params.outer_iters):
        W, w_info = update_w(W, X, D, params.gamma, params)
        P = predict(X, W)
        D, admm = solve_d(D, P, G, Y, params.alpha, params.beta,
                          params, Phi0=Phi)
        Phi = admm.final_state.Phi
        diagnostics.append(OuterDiagnostics(
            w_iterations=w_info.iterations,
            w_grad_norm=w_info.grad_norm,
            w_stalled=w_info.stalled,
            admm_iterations=admm.iterations,
            admm_residual_inf=admm.residual_inf,
            admm_converged=admm.converged,
            admm_stalled_passes=admm.stalled_passes,
            tau_final=admm.tau_final,
        ))
        trace.append(full_objective(D, W, X, G, params.alpha, params.beta,
                                    params.gamma))
        prev, curr = trace[-2].total, trace[-1].total
        if abs(prev - curr) <= REL_OBJECTIVE_TOL * max(1.0, abs(prev)):
            converged = True
            break

    return FitResult(
        D=D,
        W=W,
        objective_trace=tuple(trace),
        inner_diagnostics=tuple(diagnostics),
        converged=converged,
    )


def predict_unseen(W, X_new):
    """Predicted label distributions for unseen samples: predict(X_new, W)."""
    X_new = np.asarray(X_new, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if X_new.ndim != 2 or X_new.shape[1] != W.shape[0]:
        raise DimensionMismatch(f"X_new is {X_new.shape}, W is {W.shape}")
    if not np.all(np.isfinite(X_new)):
        raise NonFiniteEntry(np.argwhere(~np.isfinite(X_new))[0])
    return predict(X_new, W)
