import numpy as np
import pytest

from labeldist.core import HyperParams, LengthMismatch
from labeldist.graph import knn_similarity, laplacian
from labeldist.objective import predict, d_objective
from labeldist.solver import (
    AdmmState,
    InfeasibleCap,
    capped_simplex_project,
    fit,
    predict_unseen,
    solve_d,
    update_b,
    update_d_inner,
    update_w,
    _project_rows_bisect,
    _project_rows_sorted,
)
from labeldist.metrics import baseline_recover, chebyshev
from labeldist.datasets import synth_dataset, with_logical_labels
from conftest import assert_feasible, random_instance
from oracles import capped_simplex_qp, grid_refine_minimize, scalar_root_bisect


class TestCappedSimplexProject:
    def test_feasible_point_unchanged(self):
        b = capped_simplex_project([0.5, 0.5], [1, 1])
        np.testing.assert_allclose(b, [0.5, 0.5], atol=1e-12)

    def test_clamps_to_vertex(self):
        b = capped_simplex_project([2.0, 0.0], [1, 1])
        ref = capped_simplex_qp([2.0, 0.0], [1, 1])
        np.testing.assert_allclose(b, [1.0, 0.0], atol=1e-9)
        np.testing.assert_allclose(ref, [1.0, 0.0], atol=1e-12)

    def test_capped_coordinate_forced_zero(self):
        b = capped_simplex_project([0.6, 0.6, 0.6], [1, 1, 0])
        ref = capped_simplex_qp([0.6, 0.6, 0.6], [1, 1, 0])
        np.testing.assert_allclose(b, [0.5, 0.5, 0.0], atol=1e-9)
        np.testing.assert_allclose(b, ref, atol=1e-9)
        assert b[2] == 0.0

    def test_matches_enumeration_oracle(self, rng):
        for _ in range(300):
            c = int(rng.integers(2, 7))
            v = rng.normal(0, 2, c)
            y = (rng.random(c) < 0.7).astype(int)
            if y.sum() == 0:
                y[int(rng.integers(0, c))] = 1
            b = capped_simplex_project(v, y)
            ref = capped_simplex_qp(v, y)
            np.testing.assert_allclose(b, ref, atol=1e-6)
            assert np.all(b[y == 0] == 0.0)
            assert abs(b.sum() - 1.0) <= 1e-9

    def test_idempotent(self, rng):
        for _ in range(50):
            c = int(rng.integers(2, 7))
            v = rng.normal(0, 3, c)
            y = np.ones(c, dtype=int)
            b = capped_simplex_project(v, y)
            b2 = capped_simplex_project(b, y)
            np.testing.assert_allclose(b2, b, atol=1e-12)

    def test_support_matches_oracle(self, rng):
        for _ in range(100):
            c = int(rng.integers(2, 7))
            v = rng.normal(0, 2, c)
            y = np.ones(c, dtype=int)
            b = capped_simplex_project(v, y)
            ref = capped_simplex_qp(v, y)
            np.testing.assert_array_equal(b > 1e-9, ref > 1e-9)

    def test_infeasible_cap(self):
        with pytest.raises(InfeasibleCap):
            capped_simplex_project([0.2, 0.8], [0, 0])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            capped_simplex_project([0.2, 0.8], [1, 1, 0])

    def test_sorted_path_agrees_with_bisection(self, rng):
        # the solver hot path and the reference op must give one answer
        for _ in range(100):
            c = int(rng.integers(2, 8))
            T = rng.normal(0, 3, (6, c))
            mask = rng.random((6, c)) < 0.6
            mask[~mask.any(axis=1), 0] = True
            a = _project_rows_bisect(T, mask, 1e-12)
            b = _project_rows_sorted(T, mask)
            np.testing.assert_allclose(a, b, atol=1e-10)


class TestUpdateB:
    def test_feasible_point_with_zero_multiplier(self, rng):
        _, Y, D = random_instance(rng, 6, 2, 4)
        B = update_b(D, np.zeros_like(D), 0.5, Y)
        np.testing.assert_allclose(B, D, atol=1e-9)

    def test_multiplier_shifts_target(self):
        tau = 0.7
        D = np.array([[0.7, 0.3]])
        Phi = np.array([[tau * 0.2, -tau * 0.2]])
        B = update_b(D, Phi, tau, np.array([[1, 1]]))
        np.testing.assert_allclose(B, [[0.5, 0.5]], atol=1e-12)

    def test_rows_match_qp_oracle(self, rng):
        X, Y, D = random_instance(rng, 20, 2, 5)
        Phi = rng.normal(size=D.shape)
        tau = 0.9
        B = update_b(D, Phi, tau, Y)
        target = D - Phi / tau
        for i in range(20):
            ref = capped_simplex_qp(target[i], Y[i])
            np.testing.assert_allclose(B[i], ref, atol=1e-6)

    def test_infeasible_row_index_reported(self, rng):
        Y = np.array([[1, 1], [0, 0], [1, 0]])
        D = np.ones((3, 2)) / 2
        with pytest.raises(InfeasibleCap) as exc:
            update_b(D, np.zeros_like(D), 1.0, Y)
        assert exc.value.row == 1


class TestUpdateDInner:
    def _scalar_minimizer(self, p, beta, tau, b, phi):
        # stationarity of u(d) = d log(d/p) + beta d^2 + phi (b - d)
        #                        + tau/2 (b - d)^2 on (0, 1)
        def f(d):
            return 1.0 + np.log(d / p) + 2 * beta * d - phi + tau * (d - b)
        return scalar_root_bisect(f, 1e-9, 1.0)

    def test_returns_minimizer_unchanged(self):
        # 1x2 instance with alpha=0 separates per entry; the unconstrained
        # minimizer found by a scalar bisection oracle must be a fixed point
        p = np.array([[0.6, 0.4]])
        beta, tau = 0.2, 0.8
        B = np.array([[0.5, 0.5]])
        Phi = np.array([[0.05, -0.02]])
        d_star = np.array([[self._scalar_minimizer(p[0, j], beta, tau,
                                                   B[0, j], Phi[0, j])
                            for j in range(2)]])
        state = AdmmState(D=d_star, B=B, Phi=Phi, tau=tau)
        D_new, info = update_d_inner(state, p, np.zeros((1, 1)), 0.0, beta)
        np.testing.assert_allclose(D_new, d_star, atol=1e-6)

    def test_objective_never_increases(self, rng):
        for _ in range(10):
            X, Y, D = random_instance(rng, 5, 2, 4)
            P = predict(X, rng.normal(size=(2, 4)))
            G = laplacian(knn_similarity(X, 2, 1.0))
            B = rng.random(D.shape)
            Phi = rng.normal(size=D.shape) * 0.1
            tau = 0.4
            state = AdmmState(D=D, B=B, Phi=Phi, tau=tau)
            D_new, info = update_d_inner(state, P, G, 0.3, 0.2,
                                         free_mask=Y > 0)
            before = d_objective(D * (Y > 0), P, G, B, Phi, 0.3, 0.2, tau)
            after = d_objective(D_new, P, G, B, Phi, 0.3, 0.2, tau)
            assert after <= before + 1e-12

    def test_zero_label_entries_stay_zero(self, rng):
        X, Y, D = random_instance(rng, 6, 2, 4)
        P = predict(X, rng.normal(size=(2, 4)))
        G = laplacian(knn_similarity(X, 2, 1.0))
        state = AdmmState(D=D, B=D, Phi=np.zeros_like(D), tau=0.5)
        D_new, _ = update_d_inner(state, P, G, 0.5, 0.1, free_mask=Y > 0)
        assert np.all(D_new[Y == 0] == 0.0)


class TestSolveD:
    def test_stationary_feasible_point_comes_back(self, rng):
        # P = row-normalized Y is the constrained optimum of the pure-KL
        # subproblem, so the loop must return it (each projection pass maps
        # uniform-over-support targets back to that point)
        Y = np.array([[1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]])
        D0 = Y / Y.sum(axis=1, keepdims=True)
        P = D0.copy()
        G = np.zeros((4, 4))
        D, diag = solve_d(D0, P, G, Y, 0.0, 0.0)
        np.testing.assert_allclose(D, D0, atol=1e-9)
        assert diag.converged
        assert diag.residual_inf <= 1e-3

    def test_converged_run_obeys_stop_rule(self, rng):
        X, Y, D0 = random_instance(rng, 8, 3, 4)
        P = predict(X, rng.normal(size=(3, 4)))
        G = laplacian(knn_similarity(X, 3, "auto"))
        D, diag = solve_d(D0, P, G, Y, 0.01, 0.01)
        if diag.converged:
            assert diag.residual_inf <= HyperParams().admm_tol
        assert np.isfinite(diag.residual_inf)

    def test_output_feasible(self, rng):
        for _ in range(5):
            X, Y, D0 = random_instance(rng, 7, 3, 4)
            P = predict(X, rng.normal(size=(3, 4)))
            G = laplacian(knn_similarity(X, 3, "auto"))
            D, diag = solve_d(D0, P, G, Y, 0.2, 0.05)
            assert_feasible(D, Y)

    def test_infeasible_row_raises(self):
        Y = np.array([[1, 1], [0, 0]])
        D0 = np.ones((2, 2)) / 2
        with pytest.raises(InfeasibleCap):
            solve_d(D0, D0, np.zeros((2, 2)), Y, 0.0, 0.0)


class TestUpdateW:
    def test_stationary_point_fixed(self, rng):
        X = rng.normal(size=(6, 3))
        W0 = rng.normal(size=(3, 4))
        D = predict(X, W0)
        W, info = update_w(W0, X, D, gamma=0.0)
        np.testing.assert_allclose(W, W0, atol=1e-12)
        assert info.converged

    def test_strong_regularizer_shrinks(self, rng):
        X, Y, D = random_instance(rng, 6, 3, 4)
        W0 = rng.normal(size=(3, 4))
        W, _ = update_w(W0, X, D, gamma=1e3)
        assert np.linalg.norm(W) < np.linalg.norm(W0)

    def test_matches_grid_oracle_on_tiny_instance(self, rng):
        # 1 feature, 2 labels: exhaustive grid + refinement finds the con-
        # vex minimum; gradient descent must land on the same point
        X = np.array([[1.0], [2.0], [-1.0]])
        D = np.array([[0.7, 0.3], [0.9, 0.1], [0.2, 0.8]])
        gamma = 0.5
        from labeldist.objective import w_objective
        W, info = update_w(np.zeros((1, 2)), X, D, gamma,
                           HyperParams(w_grad_tol=1e-9, w_max_iters=2000))
        ref, _ = grid_refine_minimize(
            lambda w: w_objective(w.reshape(1, 2), X, D, gamma),
            lo=[-3.0, -3.0], hi=[3.0, 3.0])
        np.testing.assert_allclose(W.ravel(), ref, atol=1e-4)

    def test_objective_never_increases(self, rng):
        from labeldist.objective import w_objective
        X, Y, D = random_instance(rng, 6, 3, 4)
        W0 = rng.normal(size=(3, 4)) * 2
        W, _ = update_w(W0, X, D, gamma=0.05)
        assert w_objective(W, X, D, 0.05) <= w_objective(W0, X, D, 0.05) + 1e-12


class TestFit:
    def test_singleton_labels_recover_exactly(self, rng):
        n, m, c = 8, 3, 3
        X = rng.normal(size=(n, m))
        Y = np.zeros((n, c), dtype=np.int64)
        Y[np.arange(n), rng.integers(0, c, n)] = 1
        G = laplacian(knn_similarity(X, 3, "auto"))
        result = fit(X, Y, HyperParams(outer_iters=2), G=G)
        np.testing.assert_array_equal(result.D, Y.astype(float))

    def test_monotone_objective_trace(self, rng):
        for _ in range(3):
            X, Y, _ = random_instance(rng, 10, 3, 4)
            result = fit(X, Y, HyperParams(k_neighbors=3))
            totals = [b.total for b in result.objective_trace]
            for prev, curr in zip(totals, totals[1:]):
                assert curr <= prev + 1e-8

    def test_feasibility_of_every_fit(self, rng):
        for _ in range(3):
            X, Y, _ = random_instance(rng, 9, 3, 4)
            result = fit(X, Y, HyperParams(k_neighbors=3))
            assert_feasible(result.D, Y)

    def test_beats_trivial_baseline_on_synthetic(self):
        ds = synth_dataset(200, 10, 5, n_clusters=5, temperature=1.0,
                           sparsify_delta=0.01, seed=0)
        labeled = with_logical_labels(ds, 0.01)
        result = fit(labeled.X, labeled.Y,
                     HyperParams(alpha=10.0, beta=0.01, gamma=1e-3))
        ours = chebyshev(labeled.D_true, result.D)
        base = chebyshev(labeled.D_true, baseline_recover(labeled.Y))
        assert ours < base

    def test_deterministic(self, rng):
        X, Y, _ = random_instance(rng, 10, 3, 4)
        r1 = fit(X, Y, HyperParams(k_neighbors=3))
        r2 = fit(X, Y, HyperParams(k_neighbors=3))
        assert r1.D.tobytes() == r2.D.tobytes()
        assert r1.W.tobytes() == r2.W.tobytes()
        assert r1.objective_trace == r2.objective_trace

    def test_diagnostics_shape(self, rng):
        X, Y, _ = random_instance(rng, 8, 3, 4)
        result = fit(X, Y, HyperParams(k_neighbors=3, outer_iters=3))
        assert 1 <= len(result.inner_diagnostics) <= 3
        assert len(result.objective_trace) == len(result.inner_diagnostics) + 1
        for d in result.inner_diagnostics:
            assert d.admm_residual_inf >= 0.0
            assert d.admm_iterations >= 1


class TestPredictUnseen:
    def test_equals_training_predictions(self, rng):
        X, Y, _ = random_instance(rng, 8, 3, 4)
        result = fit(X, Y, HyperParams(k_neighbors=3, outer_iters=2))
        np.testing.assert_array_equal(predict_unseen(result.W, X),
                                      predict(X, result.W))

    def test_zero_weights_uniform(self, rng):
        X = rng.normal(size=(4, 3))
        P = predict_unseen(np.zeros((3, 5)), X)
        np.testing.assert_allclose(P, 0.2, atol=1e-15)

    def test_rows_are_distributions(self, rng):
        from labeldist.core import row_is_distribution
        W = rng.normal(size=(3, 4))
        P = predict_unseen(W, rng.normal(size=(6, 3)))
        for row in P:
            assert row_is_distribution(row, np.ones(4, dtype=int), tol=1e-10)
