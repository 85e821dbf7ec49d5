import numpy as np
import pytest

from zonecomfort.evaluation import (
    CvReport,
    IterationResult,
    MetricSet,
    ParameterGrid,
    RfConfig,
    SvrConfig,
    compute_metrics,
    default_grid,
    derive_seed,
    enumerate_grid,
    grid_search,
    kfold_split,
    load_folds,
    nested_cv,
    report_rows,
    save_folds,
    save_report_tsv,
    select_zone_champion,
)
from zonecomfort.ingest import FeatureMatrix
from zonecomfort.learners import train_mean_model, train_svr


def make_matrix(n=60, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    onehot = np.zeros((n, 2))
    onehot[np.arange(n), rng.integers(0, 2, n)] = 1.0
    Z = rng.uniform(15.0, 30.0, size=(n, 3))
    X = np.hstack([onehot, Z])
    y = np.clip(0.4 * (Z[:, 0] - 22.0) + noise * rng.normal(size=n), -3.0, 3.0)
    return FeatureMatrix(
        zone=1,
        schema=["user:a", "user:b", "s.temperature", "s.relative_humidity", "s.illuminance"],
        user_registry=["a", "b"],
        sensors=["s"],
        X=X,
        y=y,
    )


class TestComputeMetrics:
    def test_hand_computed_anticorrelated_pair(self):
        m = compute_metrics([-1.0, 1.0], [1.0, -1.0])
        assert m.cod == pytest.approx(-3.0)
        assert m.nrmse == pytest.approx(2.0 / 6.0)
        assert m.cc == pytest.approx(-1.0)
        assert m.gd == pytest.approx(0.0)

    def test_hand_computed_constant_offset(self):
        m = compute_metrics([0.0, 1.0, 2.0, 3.0], [0.5, 1.5, 2.5, 3.5])
        assert m.cod == pytest.approx(1.0 - 1.0 / 5.0)
        assert m.nrmse == pytest.approx(0.5 / 6.0)
        assert m.cc == pytest.approx(1.0)
        assert m.gd == pytest.approx(0.5)

    def test_perfect_prediction(self):
        m = compute_metrics([1.0, -2.0, 0.5], [1.0, -2.0, 0.5])
        assert m.cod == 1.0 and m.nrmse == 0.0 and m.cc == pytest.approx(1.0) and m.gd == 0.0

    def test_mean_model_scores_zero_cod_on_training_targets(self):
        y = np.array([-1.0, 0.0, 2.0, 3.0])
        model = train_mean_model(y)
        m = compute_metrics(y, model.predict(np.zeros((4, 1))))
        assert m.cod == pytest.approx(0.0)
        assert m.cc == 0.0  # constant predictions: correlation reported as 0

    def test_cc_affine_invariance(self):
        rng = np.random.default_rng(3)
        y = rng.normal(size=30)
        assert compute_metrics(y, 2.5 * y + 7.0).cc == pytest.approx(1.0)
        assert compute_metrics(y, -0.5 * y + 1.0).cc == pytest.approx(-1.0)

    def test_gd_is_absolute_and_symmetric(self):
        a = np.array([0.0, 1.0, 2.0])
        b = np.array([1.0, 2.0, 2.0])
        assert compute_metrics(a, b).gd == compute_metrics(b, a).gd == pytest.approx(2.0 / 3.0)

    def test_constant_truth_edge_cases(self):
        same = compute_metrics([2.0, 2.0], [2.0, 2.0])
        assert same.cod == 1.0 and same.nrmse == 0.0
        off = compute_metrics([2.0, 2.0], [2.5, 1.5])
        assert off.cod == 0.0 and off.nrmse > 0.0 and off.cc == 0.0

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            compute_metrics([1.0, 2.0], [1.0])
        with pytest.raises(ValueError):
            compute_metrics([], [])


class TestKfoldSplit:
    def test_partition_properties(self):
        folds = kfold_split(23, 5, seed=7)
        sizes = [f.size for f in folds]
        assert max(sizes) - min(sizes) <= 1
        merged = np.sort(np.concatenate(folds))
        assert np.array_equal(merged, np.arange(23))

    def test_deterministic_per_seed(self):
        a = kfold_split(40, 10, seed=1)
        b = kfold_split(40, 10, seed=1)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
        c = kfold_split(40, 10, seed=2)
        assert any(not np.array_equal(x, y) for x, y in zip(a, c))

    def test_bounds(self):
        with pytest.raises(ValueError):
            kfold_split(5, 1, seed=0)
        with pytest.raises(ValueError):
            kfold_split(5, 6, seed=0)


def test_derive_seed_stable_and_order_sensitive():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert derive_seed(1, 2) != derive_seed(2, 1)


class TestDefaultGrid:
    def test_candidate_counts(self):
        grid = default_grid()
        assert len(grid.svr) == 45
        assert len(grid.rf) == 24
        assert len(enumerate_grid(grid)) == 69

    def test_svr_kernel_breakdown(self):
        grid = default_grid()
        kinds = [c.kernel for c in grid.svr]
        assert kinds.count("rbf") == 21
        assert kinds.count("linear") == 4
        assert kinds.count("poly") == 20

    def test_rf_axes(self):
        grid = default_grid()
        assert {c.n_estimators for c in grid.rf} == {5, 10, 15, 20, 500, 1000}
        assert {c.max_depth for c in grid.rf} == {2, 5, 7, 9}


class TestGridSearch:
    def test_returns_config_from_list_with_scores(self):
        fm = make_matrix()
        configs = [SvrConfig("linear", C=1), SvrConfig("linear", C=10)]
        result = grid_search(fm, np.arange(fm.y.size), configs, inner_k=4, seed=0)
        assert result.best in configs
        assert [c for c, _ in result.scores] == configs
        assert all(np.isfinite(s) for _, s in result.scores)

    def test_tie_goes_to_enumeration_order(self):
        fm = make_matrix()
        configs = [RfConfig(5, 3), RfConfig(5, 3)]
        result = grid_search(fm, np.arange(fm.y.size), configs, inner_k=4, seed=0)
        assert result.scores[0][1] == result.scores[1][1]
        assert result.best is configs[0]

    def test_failed_config_scores_minus_inf(self):
        fm = make_matrix()
        configs = [SvrConfig("linear", C=-1.0), SvrConfig("linear", C=1.0)]
        result = grid_search(fm, np.arange(fm.y.size), configs, inner_k=4, seed=0)
        assert result.scores[0][1] == -np.inf
        assert result.best == configs[1]

    def test_rejects_mixed_families_and_empty(self):
        fm = make_matrix()
        with pytest.raises(ValueError):
            grid_search(fm, np.arange(fm.y.size), [SvrConfig("linear", C=1), RfConfig(5, 2)])
        with pytest.raises(ValueError):
            grid_search(fm, np.arange(fm.y.size), [])

    def test_rf_score_independent_of_grid_companions(self):
        # The shared deep forest must score a configuration exactly as if it
        # were trained alone.
        fm = make_matrix(noise=0.3)
        probe = RfConfig(5, 2)
        alone = grid_search(fm, np.arange(fm.y.size), [probe], inner_k=4, seed=9)
        grouped = grid_search(
            fm, np.arange(fm.y.size), [probe, RfConfig(20, 7), RfConfig(10, 5)], inner_k=4, seed=9
        )
        assert alone.scores[0][1] == grouped.scores[0][1]

    def test_svr_fast_path_matches_direct_training(self):
        fm = make_matrix(noise=0.2)
        config = SvrConfig("rbf", C=10.0, gamma=0.1)
        train_indices = np.arange(fm.y.size)
        result = grid_search(fm, train_indices, [config], inner_k=4, seed=5)

        folds = kfold_split(train_indices.size, 4, seed=5)
        cods = []
        for val_local in folds:
            mask = np.zeros(train_indices.size, dtype=bool)
            mask[val_local] = True
            tr, val = train_indices[~mask], train_indices[mask]
            params = fm.fit_scaling(tr)
            model = train_svr(
                fm.scaled_rows(params, tr), fm.y[tr], config.to_kernel(), C=config.C
            )
            pred = model.predict(fm.scaled_rows(params, val))
            cods.append(compute_metrics(fm.y[val], pred).cod)
        assert result.scores[0][1] == pytest.approx(np.mean(cods), abs=1e-10)


SMALL_GRID = ParameterGrid(
    svr=(SvrConfig("linear", C=1.0), SvrConfig("rbf", C=10.0, gamma=0.1)),
    rf=(RfConfig(5, 2), RfConfig(10, 5)),
)


class TestNestedCv:
    def test_protocol_shape_and_disjoint_folds(self):
        fm = make_matrix(n=60, noise=0.2)
        report = nested_cv(fm, SMALL_GRID, outer_iterations=3, inner_k=5, seed=11)
        assert len(report.iterations) == 3
        all_test = np.sort(np.concatenate([it.outer_test for it in report.iterations]))
        assert np.array_equal(all_test, np.arange(60))
        for it in report.iterations:
            assert set(it.metrics) == {"svr", "rf", "mean"}
            assert len(it.inner_folds) == 5
            inner_all = np.sort(np.concatenate(it.inner_folds))
            assert np.array_equal(inner_all, np.arange(60 - it.outer_test.size))

    def test_learners_beat_mean_on_structured_data(self):
        fm = make_matrix(n=80, noise=0.1)
        report = nested_cv(fm, SMALL_GRID, outer_iterations=3, inner_k=5, seed=0)
        assert report.average("svr").cod > report.average("mean").cod
        assert report.average("rf").cod > report.average("mean").cod
        assert report.average("mean").cod <= 0.05

    def test_replay_from_persisted_folds_is_bit_exact(self, tmp_path):
        fm = make_matrix(n=50, noise=0.3)
        report = nested_cv(fm, SMALL_GRID, outer_iterations=3, inner_k=5, seed=4)
        save_folds(report, tmp_path)
        loaded = load_folds(tmp_path)
        replay = nested_cv(
            fm, SMALL_GRID, outer_iterations=3, inner_k=5, seed=4, outer_folds=loaded
        )
        for a, b in zip(report.iterations, replay.iterations):
            assert np.array_equal(a.outer_test, b.outer_test)
            assert a.best_svr == b.best_svr and a.best_rf == b.best_rf
            for family in ("svr", "rf", "mean"):
                assert a.metrics[family] == b.metrics[family]

    def test_too_small_dataset_raises(self):
        fm = make_matrix(n=12)
        with pytest.raises(ValueError, match="too small"):
            nested_cv(fm, SMALL_GRID, outer_iterations=3, inner_k=10, seed=0)

    def test_report_tsv(self, tmp_path):
        fm = make_matrix(n=50, noise=0.3)
        report = nested_cv(fm, SMALL_GRID, outer_iterations=3, inner_k=5, seed=4)
        rows = report_rows(report)
        assert len(rows) == 9  # 3 iterations x 3 families
        path = tmp_path / "report.tsv"
        save_report_tsv([report], path)
        lines = path.read_text().splitlines()
        assert lines[0].split("\t") == ["zone", "iteration", "model", "cod", "nrmse", "cc", "gd"]
        assert len(lines) == 10


def _fake_report(svr_cods, rf_cods):
    iterations = []
    for i, (sc, rc) in enumerate(zip(svr_cods, rf_cods)):
        iterations.append(
            IterationResult(
                index=i,
                outer_test=np.array([i]),
                inner_folds=[],
                best_svr=SvrConfig("rbf", C=10.0 * (i + 1), gamma=1e-3),
                best_rf=RfConfig(5 * (i + 1), 2),
                metrics={
                    "svr": MetricSet(sc, 0.1, 0.5, 0.0),
                    "rf": MetricSet(rc, 0.1, 0.5, 0.0),
                    "mean": MetricSet(0.0, 0.2, 0.0, 0.0),
                },
            )
        )
    return CvReport(zone=1, seed=0, iterations=iterations, n_samples=len(iterations))


class TestChampionSelection:
    def test_higher_average_cod_wins(self):
        family, config = select_zone_champion(_fake_report([0.2, 0.4], [0.5, 0.6]))
        assert family == "rf"
        assert config == RfConfig(10, 2)  # params from the best-COD iteration

    def test_tie_goes_to_svr(self):
        family, config = select_zone_champion(_fake_report([0.3, 0.5], [0.4, 0.4]))
        assert family == "svr"
        assert config == SvrConfig("rbf", C=20.0, gamma=1e-3)

    def test_average_and_variance(self):
        report = _fake_report([0.2, 0.4], [0.5, 0.7])
        assert report.average("svr").cod == pytest.approx(0.3)
        assert report.variance("rf").cod == pytest.approx(0.01)
