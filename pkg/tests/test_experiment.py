import json

import numpy as np
import pytest

from labeldist.core import HyperParams
from labeldist.datasets import SplitSpec, split, synth_dataset, with_logical_labels
from labeldist.experiment import (
    GridSpec,
    grid_search,
    load_report,
    run_experiment,
    write_report,
)

TINY_GRID = GridSpec(alpha_grid=(0.01,), beta_grid=(0.01,), gamma_grid=(0.01,))
FAST = HyperParams(k_neighbors=5, outer_iters=2)


@pytest.fixture(scope="module")
def small_splits():
    ds = synth_dataset(60, 4, 3, n_clusters=3, temperature=1.0,
                       sparsify_delta=0.01, seed=7)
    labeled = with_logical_labels(ds, 0.01)
    return split(labeled, SplitSpec(seed=7))


@pytest.fixture(scope="module")
def report():
    ds = synth_dataset(60, 4, 3, n_clusters=3, temperature=1.0,
                       sparsify_delta=0.01, seed=7)
    return run_experiment(ds, spec=SplitSpec(seed=7), grid=TINY_GRID,
                          params=FAST)


class TestGridSpec:
    def test_published_default_grids(self):
        g = GridSpec()
        assert g.alpha_grid == (1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0)
        assert g.gamma_grid == (1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0)
        assert g.beta_grid == (1e-3, 1e-2, 1e-1, 1.0, 10.0)
        assert g.selection_metric == "chebyshev"

    def test_cells_in_lexicographic_order(self):
        g = GridSpec(alpha_grid=(1, 2), beta_grid=(3,), gamma_grid=(4, 5))
        assert g.cells() == [(1, 3, 4), (1, 3, 5), (2, 3, 4), (2, 3, 5)]

    def test_validation(self):
        with pytest.raises(ValueError):
            GridSpec(alpha_grid=())
        with pytest.raises(ValueError):
            GridSpec(beta_grid=(0.0, 1.0))
        with pytest.raises(ValueError):
            GridSpec(selection_metric="nope")


class TestGridSearch:
    def test_single_cell_selected(self, small_splits):
        train, val, _ = small_splits
        best, records = grid_search(train, val, TINY_GRID, FAST)
        assert (best.alpha, best.beta, best.gamma) == (0.01, 0.01, 0.01)
        assert len(records) == 1
        assert not records[0].failed

    def test_best_cell_has_minimal_score(self, small_splits):
        train, val, _ = small_splits
        grid = GridSpec(alpha_grid=(0.001, 1.0), beta_grid=(0.01,),
                        gamma_grid=(0.01, 1.0))
        best, records = grid_search(train, val, grid, FAST)
        scores = [r.score for r in records]
        winner = [r for r in records
                  if (r.alpha, r.beta, r.gamma)
                  == (best.alpha, best.beta, best.gamma)][0]
        assert winner.score == min(scores)

    def test_records_follow_grid_order(self, small_splits):
        train, val, _ = small_splits
        grid = GridSpec(alpha_grid=(0.001, 1.0), beta_grid=(0.01,),
                        gamma_grid=(0.01, 1.0))
        _, records = grid_search(train, val, grid, FAST)
        assert [(r.alpha, r.beta, r.gamma) for r in records] == grid.cells()

    def test_tie_prefers_lexicographically_smaller(self, small_splits, monkeypatch):
        train, val, _ = small_splits
        import labeldist.experiment as E
        monkeypatch.setattr(E, "_score_cell", lambda args: 0.5)
        grid = GridSpec(alpha_grid=(0.001, 1.0), beta_grid=(0.01, 1.0),
                        gamma_grid=(0.01,))
        best, _ = grid_search(train, val, grid, FAST)
        assert (best.alpha, best.beta, best.gamma) == (0.001, 0.01, 0.01)

    def test_failed_cells_excluded(self, small_splits, monkeypatch):
        train, val, _ = small_splits
        import labeldist.experiment as E

        real = E._score_cell

        def flaky(args):
            if args[3].alpha == 0.001:
                raise RuntimeError("boom")
            return real(args)

        monkeypatch.setattr(E, "_score_cell", flaky)
        grid = GridSpec(alpha_grid=(0.001, 1.0), beta_grid=(0.01,),
                        gamma_grid=(0.01,))
        best, records = grid_search(train, val, grid, FAST)
        assert best.alpha == 1.0
        assert records[0].failed and "boom" in records[0].error
        assert not records[1].failed

    def test_all_cells_failing_raises(self, small_splits, monkeypatch):
        train, val, _ = small_splits
        import labeldist.experiment as E
        monkeypatch.setattr(E, "_score_cell",
                            lambda args: (_ for _ in ()).throw(ValueError("x")))
        with pytest.raises(RuntimeError):
            grid_search(train, val, TINY_GRID, FAST)

    def test_requires_labels_and_truth(self, small_splits):
        train, val, _ = small_splits
        from dataclasses import replace
        with pytest.raises(ValueError):
            grid_search(replace(train, Y=None), val, TINY_GRID, FAST)
        with pytest.raises(ValueError):
            grid_search(train, replace(val, D_true=None), TINY_GRID, FAST)


class TestRunExperiment:
    def test_zero_one_error_on_coincident_supports(self, report):
        assert report.recovery.one_error == 0.0

    def test_metrics_finite(self, report):
        for rep in (report.recovery, report.predictive,
                    report.baseline_recovery, report.baseline_predictive):
            for name in ("chebyshev", "clark", "one_error", "intersection"):
                assert np.isfinite(getattr(rep, name))

    def test_chosen_hyperparams_recorded(self, report):
        assert report.hyperparams["alpha"] == 0.01
        assert report.seed == 7
        assert report.delta == 0.01

    def test_deterministic_reports(self):
        ds = synth_dataset(60, 4, 3, n_clusters=3, temperature=1.0,
                           sparsify_delta=0.01, seed=9)
        r1 = run_experiment(ds, spec=SplitSpec(seed=9), grid=TINY_GRID,
                            params=FAST)
        r2 = run_experiment(ds, spec=SplitSpec(seed=9), grid=TINY_GRID,
                            params=FAST)
        assert r1 == r2

    def test_requires_ground_truth(self):
        from labeldist.datasets import LdlDataset
        ds = LdlDataset(name="t", X=np.random.default_rng(0).normal(size=(10, 3)),
                        Y=np.ones((10, 2), dtype=np.int64))
        with pytest.raises(ValueError):
            run_experiment(ds)

    def test_timing_optional(self, report):
        assert report.wall_clock is None


class TestReports:
    def test_structured_text_round_trip(self, report, tmp_path):
        path = tmp_path / "report.json"
        write_report(report, path)
        assert load_report(path) == report

    def test_round_trip_with_timing(self, tmp_path):
        ds = synth_dataset(60, 4, 3, n_clusters=3, temperature=1.0,
                           sparsify_delta=0.01, seed=7)
        rep = run_experiment(ds, spec=SplitSpec(seed=7), grid=TINY_GRID,
                             params=FAST, timing=True)
        assert rep.wall_clock is not None
        path = tmp_path / "report.json"
        write_report(rep, path)
        assert load_report(path) == rep

    def test_byte_identical_across_runs(self, tmp_path):
        ds = synth_dataset(60, 4, 3, n_clusters=3, temperature=1.0,
                           sparsify_delta=0.01, seed=7)
        paths = []
        for tag in ("a", "b"):
            rep = run_experiment(ds, spec=SplitSpec(seed=7), grid=TINY_GRID,
                                 params=FAST)
            path = tmp_path / f"{tag}.json"
            write_report(rep, path)
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_csv_tables(self, report, tmp_path):
        written = write_report(report, tmp_path / "rep.csv", "csv-tables")
        assert len(written) == 2
        for path in written:
            lines = open(path, encoding="utf-8").read().strip().splitlines()
            assert len(lines) == 3  # header + two methods
            header = lines[0].split(",")
            assert header[0] == "method"
            assert "chebyshev" in header and "chebyshev_rank" in header
            # 4 metric values + 4 ranks + average rank per method row
            assert len(lines[1].split(",")) == 10

    def test_empty_path_rejected(self, report):
        with pytest.raises(OSError):
            write_report(report, "")

    def test_unknown_format_rejected(self, report, tmp_path):
        with pytest.raises(ValueError):
            write_report(report, tmp_path / "x", "yaml")

    def test_json_fields_match_dataclass(self, report, tmp_path):
        path = tmp_path / "report.json"
        write_report(report, path)
        raw = json.loads(path.read_text())
        assert set(raw) == {
            "dataset", "hyperparams", "recovery", "predictive",
            "baseline_recovery", "baseline_predictive", "diagnostics",
            "seed", "one_error_variant", "delta", "grid_records",
            "wall_clock",
        }
