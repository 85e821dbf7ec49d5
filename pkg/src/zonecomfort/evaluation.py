"""Model evaluation: metrics, k-fold machinery, grid search, and nested CV.

Grid search scores configurations by mean inner-fold COD. The nested
cross-validation runs five outer iterations with a 10-fold inner loop,
persists every fold index set, and reports COD/NRMSE/CC/GD per iteration
for SVR, RF, and the mean-model baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from .ingest import FeatureMatrix
from .learners import (
    DEFAULT_EPSILON,
    DEFAULT_MAX_PASSES,
    DEFAULT_TOL,
    Kernel,
    fit_svr_kernelized,
    train_mean_model,
    train_rf,
    train_svr,
)

# Comfort votes span -3..+3; NRMSE is normalized by this full scale so
# numbers stay comparable across zones.
DEFAULT_NRMSE_NORMALIZER = 6.0

DEFAULT_OUTER_ITERATIONS = 5
DEFAULT_INNER_K = 10


# -- Metrics -------------------------------------------------------------------


@dataclass(frozen=True)
class MetricSet:
    cod: float
    nrmse: float
    cc: float
    gd: float

    def as_tuple(self):
        return (self.cod, self.nrmse, self.cc, self.gd)


def compute_metrics(y_true, y_pred, nrmse_normalizer: float = DEFAULT_NRMSE_NORMALIZER) -> MetricSet:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError("y_true and y_pred must be 1-D with equal length")
    if y_true.size == 0:
        raise ValueError("cannot compute metrics on empty vectors")

    residual = y_pred - y_true
    ss_res = float(residual @ residual)
    centered = y_true - y_true.mean()
    ss_tot = float(centered @ centered)
    if ss_tot > 0:
        cod = 1.0 - ss_res / ss_tot
    else:
        cod = 1.0 if ss_res == 0 else 0.0

    nrmse = math.sqrt(ss_res / y_true.size) / nrmse_normalizer

    st = y_true.std()
    sp = y_pred.std()
    if st > 0 and sp > 0:
        cc = float(np.corrcoef(y_true, y_pred)[0, 1])
    else:
        cc = 0.0  # constant on either side: correlation reported as zero

    gd = abs(float(residual.mean()))
    return MetricSet(cod=cod, nrmse=nrmse, cc=cc, gd=gd)


def kfold_split(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Shuffled partition of range(n) into k folds differing in size by <= 1."""
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    return [np.sort(fold) for fold in np.array_split(rng.permutation(n), k)]


def derive_seed(*parts: int) -> int:
    """Stable child seed from integer parts (outer iteration, fold, ...)."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


# -- Parameter grids -----------------------------------------------------------


@dataclass(frozen=True)
class SvrConfig:
    kernel: str
    C: float
    gamma: float | None = None
    degree: int | None = None

    def to_kernel(self) -> Kernel:
        return Kernel(self.kernel, gamma=self.gamma, degree=self.degree)

    def describe(self) -> str:
        parts = [f"kernel={self.kernel}", f"C={self.C:g}"]
        if self.gamma is not None:
            parts.append(f"gamma={self.gamma:g}")
        if self.degree is not None:
            parts.append(f"degree={self.degree}")
        return " ".join(parts)


@dataclass(frozen=True)
class RfConfig:
    n_estimators: int
    max_depth: int

    def describe(self) -> str:
        return f"n_estimators={self.n_estimators} max_depth={self.max_depth}"


@dataclass(frozen=True)
class ParameterGrid:
    svr: tuple[SvrConfig, ...]
    rf: tuple[RfConfig, ...]


def default_grid() -> ParameterGrid:
    rbf = [
        SvrConfig("rbf", C=c, gamma=g)
        for g, c in product([1e-3, 1e-4, 1e-5], [1, 10, 100, 1000, 1500, 2000, 10000])
    ]
    linear = [SvrConfig("linear", C=c) for c in [1, 10, 100, 1000]]
    poly = [
        SvrConfig("poly", C=c, degree=d)
        for c, d in product([1, 10, 100, 1000], [2, 3, 4, 5, 10])
    ]
    rf = [
        RfConfig(n_estimators=n, max_depth=d)
        for n, d in product([5, 10, 15, 20, 500, 1000], [2, 5, 7, 9])
    ]
    return ParameterGrid(svr=tuple(rbf + linear + poly), rf=tuple(rf))


def enumerate_grid(grid: ParameterGrid) -> list:
    """Flat candidate list, SVR configurations first."""
    return list(grid.svr) + list(grid.rf)


# -- Grid search ---------------------------------------------------------------


@dataclass(frozen=True)
class SvrSettings:
    epsilon: float = DEFAULT_EPSILON
    tol: float = DEFAULT_TOL
    max_passes: int = DEFAULT_MAX_PASSES


def _kernel_from_parts(config: SvrConfig, G: np.ndarray, sq: np.ndarray | None, n_features: int):
    if config.kernel == "linear":
        return G
    gamma = config.gamma if config.gamma is not None else 1.0 / n_features
    if config.kernel == "rbf":
        return np.exp(-gamma * sq)
    return (gamma * G) ** config.degree  # poly, coef0 = 0


def _gram_parts(A: np.ndarray, B: np.ndarray, need_sq: bool):
    G = A @ B.T
    sq = None
    if need_sq:
        sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * G
        np.maximum(sq, 0.0, out=sq)
    return G, sq


@dataclass
class GridSearchResult:
    best: object
    scores: list[tuple[object, float]]  # enumeration order, mean inner COD


def grid_search(
    matrix: FeatureMatrix,
    train_indices,
    configs,
    inner_k: int = DEFAULT_INNER_K,
    seed: int = 0,
    svr_settings: SvrSettings = SvrSettings(),
    nrmse_normalizer: float = DEFAULT_NRMSE_NORMALIZER,
) -> GridSearchResult:
    """Mean inner-fold COD per configuration; argmax wins, ties go to the
    first configuration in enumeration order.

    All configurations must belong to one family (SvrConfig or RfConfig).
    Scaling parameters are fitted inside each inner training fold.
    """
    configs = list(configs)
    if not configs:
        raise ValueError("empty configuration list")
    families = {type(c) for c in configs}
    if len(families) != 1:
        raise ValueError("grid_search expects a single model family per call")
    family = families.pop()

    train_indices = np.asarray(train_indices)
    if train_indices.size < inner_k:
        raise ValueError(f"training set of {train_indices.size} too small for {inner_k} folds")
    folds = kfold_split(train_indices.size, inner_k, seed)

    totals = np.zeros(len(configs))
    failures = np.zeros(len(configs), dtype=bool)
    for fold_no, val_local in enumerate(folds):
        val_mask = np.zeros(train_indices.size, dtype=bool)
        val_mask[val_local] = True
        tr_idx = train_indices[~val_mask]
        val_idx = train_indices[val_mask]

        params = matrix.fit_scaling(tr_idx)
        X_tr = matrix.scaled_rows(params, tr_idx)
        X_val = matrix.scaled_rows(params, val_idx)
        y_tr = matrix.y[tr_idx]
        y_val = matrix.y[val_idx]

        if family is SvrConfig:
            need_sq = any(c.kernel == "rbf" for c in configs)
            G_tr, sq_tr = _gram_parts(X_tr, X_tr, need_sq)
            G_val, sq_val = _gram_parts(X_val, X_tr, need_sq)
            for ci, config in enumerate(configs):
                K_tr = np.ascontiguousarray(
                    _kernel_from_parts(config, G_tr, sq_tr, X_tr.shape[1])
                )
                try:
                    beta, bias, _, _, _, _ = fit_svr_kernelized(
                        K_tr,
                        y_tr,
                        config.C,
                        svr_settings.epsilon,
                        svr_settings.tol,
                        svr_settings.max_passes,
                    )
                except (ValueError, FloatingPointError):
                    failures[ci] = True
                    continue
                K_val = _kernel_from_parts(config, G_val, sq_val, X_tr.shape[1])
                pred = K_val @ beta + bias
                totals[ci] += compute_metrics(y_val, pred, nrmse_normalizer).cod
        else:
            # One deep forest per fold serves every configuration: the first
            # n_estimators trees under a depth cap are exactly the forest the
            # smaller configuration would have trained.
            max_trees = max(c.n_estimators for c in configs)
            max_depth = max(c.max_depth for c in configs)
            fold_seed = derive_seed(seed, fold_no)
            try:
                forest = train_rf(X_tr, y_tr, max_trees, max_depth, seed=fold_seed)
            except (ValueError, FloatingPointError):
                failures[:] = True
                continue
            for ci, config in enumerate(configs):
                pred = forest.predict(X_val, n_trees=config.n_estimators, depth_cap=config.max_depth)
                totals[ci] += compute_metrics(y_val, pred, nrmse_normalizer).cod

    means = totals / len(folds)
    means[failures] = -np.inf
    best_i = int(np.argmax(means))  # argmax keeps the first index on ties
    scores = [(c, float(m)) for c, m in zip(configs, means)]
    return GridSearchResult(best=configs[best_i], scores=scores)


# -- Nested cross-validation -----------------------------------------------------


@dataclass
class IterationResult:
    index: int
    outer_test: np.ndarray
    inner_folds: list[np.ndarray]  # local positions within the outer-train set
    best_svr: SvrConfig
    best_rf: RfConfig
    metrics: dict  # family -> MetricSet


@dataclass
class CvReport:
    zone: int
    seed: int
    iterations: list[IterationResult]
    n_samples: int

    FAMILIES = ("svr", "rf", "mean")

    def average(self, family: str) -> MetricSet:
        rows = np.array([it.metrics[family].as_tuple() for it in self.iterations])
        return MetricSet(*rows.mean(axis=0))

    def variance(self, family: str) -> MetricSet:
        rows = np.array([it.metrics[family].as_tuple() for it in self.iterations])
        return MetricSet(*rows.var(axis=0))


def _train_family_on(matrix, config, train_idx, seed):
    params = matrix.fit_scaling(train_idx)
    X_tr = matrix.scaled_rows(params, train_idx)
    y_tr = matrix.y[train_idx]
    if isinstance(config, SvrConfig):
        model = train_svr(X_tr, y_tr, config.to_kernel(), C=config.C)
    else:
        model = train_rf(X_tr, y_tr, config.n_estimators, config.max_depth, seed=seed)
    return model, params


def nested_cv(
    matrix: FeatureMatrix,
    grid: ParameterGrid | None = None,
    outer_iterations: int = DEFAULT_OUTER_ITERATIONS,
    inner_k: int = DEFAULT_INNER_K,
    seed: int = 0,
    svr_settings: SvrSettings = SvrSettings(),
    nrmse_normalizer: float = DEFAULT_NRMSE_NORMALIZER,
    outer_folds: list[np.ndarray] | None = None,
) -> CvReport:
    """Five seeded outer iterations, 10-fold inner tuning, per-family metrics.

    `outer_folds` replays a persisted split instead of drawing a new one.
    """
    grid = grid or default_grid()
    n = matrix.y.size
    if n < inner_k * 2:
        raise ValueError(
            f"dataset of {n} rows is too small for nested CV; "
            f"need at least {inner_k * 2} rows"
        )
    if outer_folds is None:
        outer_folds = kfold_split(n, outer_iterations, seed)
    elif len(outer_folds) != outer_iterations:
        raise ValueError("persisted outer folds do not match outer_iterations")

    iterations = []
    for i, test_idx in enumerate(outer_folds):
        test_idx = np.asarray(test_idx)
        mask = np.ones(n, dtype=bool)
        mask[test_idx] = False
        train_idx = np.nonzero(mask)[0]
        iter_seed = derive_seed(seed, i)

        svr_result = grid_search(
            matrix, train_idx, grid.svr, inner_k, iter_seed, svr_settings, nrmse_normalizer
        )
        rf_result = grid_search(
            matrix, train_idx, grid.rf, inner_k, iter_seed, svr_settings, nrmse_normalizer
        )

        metrics = {}
        for family, config in (("svr", svr_result.best), ("rf", rf_result.best)):
            model, params = _train_family_on(matrix, config, train_idx, derive_seed(seed, i, 1))
            pred = model.predict(matrix.scaled_rows(params, test_idx))
            metrics[family] = compute_metrics(matrix.y[test_idx], pred, nrmse_normalizer)
        mean_model = train_mean_model(matrix.y[train_idx])
        metrics["mean"] = compute_metrics(
            matrix.y[test_idx], mean_model.predict(np.zeros((test_idx.size, 1))), nrmse_normalizer
        )

        inner_folds = kfold_split(train_idx.size, inner_k, iter_seed)
        iterations.append(
            IterationResult(
                index=i,
                outer_test=test_idx,
                inner_folds=inner_folds,
                best_svr=svr_result.best,
                best_rf=rf_result.best,
                metrics=metrics,
            )
        )
    return CvReport(zone=matrix.zone, seed=seed, iterations=iterations, n_samples=n)


def select_zone_champion(report: CvReport):
    """Winning family by average COD (ties go to SVR) and its parameters from
    the best-COD iteration."""
    svr_avg = report.average("svr").cod
    rf_avg = report.average("rf").cod
    family = "svr" if svr_avg >= rf_avg else "rf"
    best_iter = max(report.iterations, key=lambda it: it.metrics[family].cod)
    config = best_iter.best_svr if family == "svr" else best_iter.best_rf
    return family, config


# -- Run-directory persistence ---------------------------------------------------


def save_folds(report: CvReport, run_dir) -> None:
    folds_dir = Path(run_dir) / "folds"
    folds_dir.mkdir(parents=True, exist_ok=True)
    for it in report.iterations:
        lines = ["outer_test\t" + " ".join(str(i) for i in it.outer_test)]
        for fi, fold in enumerate(it.inner_folds):
            lines.append(f"inner_{fi}\t" + " ".join(str(i) for i in fold))
        (folds_dir / f"iteration-{it.index}.idx").write_text("\n".join(lines) + "\n")


def load_folds(run_dir) -> list[np.ndarray]:
    """Outer test index sets, in iteration order."""
    folds_dir = Path(run_dir) / "folds"
    outer = []
    for path in sorted(folds_dir.glob("iteration-*.idx"), key=lambda p: int(p.stem.split("-")[1])):
        first = path.read_text().splitlines()[0]
        tag, values = first.split("\t")
        assert tag == "outer_test"
        outer.append(np.asarray([int(v) for v in values.split()]))
    return outer


def report_rows(report: CvReport) -> list[dict]:
    rows = []
    for it in report.iterations:
        for family in report.FAMILIES:
            m = it.metrics[family]
            rows.append(
                {
                    "zone": report.zone,
                    "iteration": it.index,
                    "model": family,
                    "cod": m.cod,
                    "nrmse": m.nrmse,
                    "cc": m.cc,
                    "gd": m.gd,
                }
            )
    return rows


def save_report_tsv(reports: list[CvReport], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = ["zone", "iteration", "model", "cod", "nrmse", "cc", "gd"]
    lines = ["\t".join(columns)]
    for report in reports:
        for row in report_rows(report):
            lines.append("\t".join(repr(row[c]) if isinstance(row[c], float) else str(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n")


def save_champions(champions: dict, path) -> None:
    """champions: zone -> (family, config)."""
    lines = []
    for zone in sorted(champions):
        family, config = champions[zone]
        lines.append(f"zone {zone}\t{family}\t{config.describe()}")
    Path(path).write_text("\n".join(lines) + "\n")
