"""From-scratch regressors: epsilon-SVR via SMO, CART random forest, mean model.

All three share the same predict(X) -> vector convention and serialize to a
versioned JSON artifact carrying the preprocessing schema hash.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _fast

ARTIFACT_VERSION = 1

DEFAULT_EPSILON = 0.1
DEFAULT_TOL = 1e-3
DEFAULT_MAX_PASSES = 10_000


@dataclass(frozen=True)
class Kernel:
    kind: str  # rbf | linear | poly
    gamma: float | None = None
    degree: int | None = None
    coef0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("rbf", "linear", "poly"):
            raise ValueError(f"unknown kernel kind: {self.kind!r}")
        if self.kind == "poly" and self.degree is None:
            raise ValueError("poly kernel requires a degree")

    def resolve(self, n_features: int) -> "Kernel":
        """Fill the data-dependent default gamma = 1/n_features."""
        if self.kind != "linear" and self.gamma is None:
            return Kernel(self.kind, 1.0 / n_features, self.degree, self.coef0)
        return self

    def describe(self) -> str:
        parts = [self.kind]
        if self.kind != "linear" and self.gamma is not None:
            parts.append(f"gamma={self.gamma:g}")
        if self.kind == "poly":
            parts.append(f"degree={self.degree}")
        return " ".join(parts)


def kernel_eval(kernel: Kernel, x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("kernel arguments must have equal dimension")
    k = kernel.resolve(x.shape[0])
    if k.kind == "linear":
        return float(x @ y)
    if k.kind == "rbf":
        d = x - y
        return float(np.exp(-k.gamma * (d @ d)))
    return float((k.gamma * (x @ y) + k.coef0) ** k.degree)


def kernel_matrix(kernel: Kernel, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Gram matrix K[i, j] = k(X[i], Z[j])."""
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    k = kernel.resolve(X.shape[1])
    G = X @ Z.T
    if k.kind == "linear":
        return G
    if k.kind == "poly":
        return (k.gamma * G + k.coef0) ** k.degree
    sq = (X * X).sum(axis=1)[:, None] + (Z * Z).sum(axis=1)[None, :] - 2.0 * G
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-k.gamma * sq)


def _check_training_data(X, y, min_rows):
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D and y 1-D with matching row counts")
    if X.shape[0] < min_rows:
        raise ValueError(f"need at least {min_rows} training rows, got {X.shape[0]}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("training data contains non-finite values")
    return X, y


# -- SVR ---------------------------------------------------------------------


@dataclass(frozen=True)
class SvrModel:
    kernel: Kernel
    C: float
    epsilon: float
    support_vectors: np.ndarray  # rows with nonzero dual coefficient
    dual_coef: np.ndarray  # alpha - alpha_star on the support rows
    bias: float
    n_features: int
    iterations: int
    kkt_gap: float
    dual_objective: float
    converged: bool

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ValueError(
                f"expected {self.n_features} features, got {X.shape[1]}"
            )
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        K = kernel_matrix(self.kernel, X, self.support_vectors)
        return K @ self.dual_coef + self.bias


def fit_svr_kernelized(
    K: np.ndarray,
    y: np.ndarray,
    C: float,
    epsilon: float = DEFAULT_EPSILON,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
):
    """SMO on a precomputed training Gram matrix.

    Returns (beta, bias, iterations, gap, dual_objective, converged) with
    beta over all training rows. Used directly by the grid-search fast path.
    """
    if C <= 0:
        raise ValueError("C must be > 0")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    return _fast.smo_solve(
        np.ascontiguousarray(K, dtype=float),
        np.ascontiguousarray(y, dtype=float),
        float(C),
        float(epsilon),
        float(tol),
        int(max_passes),
    )


def train_svr(
    X,
    y,
    kernel: Kernel,
    C: float,
    epsilon: float = DEFAULT_EPSILON,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
) -> SvrModel:
    X, y = _check_training_data(X, y, min_rows=2)
    kernel = kernel.resolve(X.shape[1])
    K = kernel_matrix(kernel, X, X)
    beta, bias, iterations, gap, objective, converged = fit_svr_kernelized(
        K, y, C, epsilon, tol, max_passes
    )
    support = np.abs(beta) > 0
    return SvrModel(
        kernel=kernel,
        C=float(C),
        epsilon=float(epsilon),
        support_vectors=X[support].copy(),
        dual_coef=beta[support].copy(),
        bias=float(bias),
        n_features=X.shape[1],
        iterations=int(iterations),
        kkt_gap=float(gap),
        dual_objective=float(objective),
        converged=bool(converged),
    )


def predict_svr(model: SvrModel, X) -> np.ndarray:
    return model.predict(X)


# -- Random forest -----------------------------------------------------------


@dataclass(frozen=True)
class RfModel:
    n_estimators: int
    max_depth: int
    seed: int
    n_features: int
    # Flat node storage: per-tree slices via offsets.
    features: np.ndarray
    thresholds: np.ndarray
    lefts: np.ndarray
    rights: np.ndarray
    values: np.ndarray
    depths: np.ndarray
    offsets: np.ndarray
    importance_raw: np.ndarray  # summed per-feature SSE decrease over trees
    target_range: tuple[float, float]

    def predict(self, X, n_trees: int | None = None, depth_cap: int | None = None):
        X = np.atleast_2d(np.ascontiguousarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        n_trees = self.n_estimators if n_trees is None else n_trees
        depth_cap = self.max_depth if depth_cap is None else depth_cap
        return _fast.predict_forest(
            X,
            self.features,
            self.thresholds,
            self.lefts,
            self.rights,
            self.values,
            self.depths,
            self.offsets,
            int(n_trees),
            int(depth_cap),
        )


def train_rf(X, y, n_estimators: int, max_depth: int, seed: int = 0) -> RfModel:
    """Bootstrap CART forest; all features considered at every split."""
    X, y = _check_training_data(X, y, min_rows=1)
    if n_estimators < 1:
        raise ValueError("n_estimators must be >= 1")
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    n = X.shape[0]
    rng = np.random.default_rng(seed)
    base_order = _fast.presort_features(X)
    features, thresholds, lefts, rights, values, depths = [], [], [], [], [], []
    offsets = [0]
    importance = np.zeros(X.shape[1])
    for _ in range(n_estimators):
        counts = np.bincount(rng.integers(0, n, size=n), minlength=n)
        f, t, l, r, v, d, count, imp = _fast.build_tree(
            X, y, base_order, counts, int(max_depth), 2
        )
        features.append(f)
        thresholds.append(t)
        lefts.append(l)
        rights.append(r)
        values.append(v)
        depths.append(d)
        offsets.append(offsets[-1] + count)
        importance += imp
    return RfModel(
        n_estimators=int(n_estimators),
        max_depth=int(max_depth),
        seed=int(seed),
        n_features=X.shape[1],
        features=np.concatenate(features),
        thresholds=np.concatenate(thresholds),
        lefts=np.concatenate(lefts),
        rights=np.concatenate(rights),
        values=np.concatenate(values),
        depths=np.concatenate(depths),
        offsets=np.asarray(offsets, dtype=np.int64),
        importance_raw=importance,
        target_range=(float(y.min()), float(y.max())),
    )


def predict_rf(model: RfModel, X) -> np.ndarray:
    return model.predict(X)


def feature_importance(model: RfModel) -> np.ndarray:
    """Mean impurity decrease per feature, normalized to sum to one."""
    total = model.importance_raw.sum()
    if total <= 0:
        return np.full(model.n_features, 1.0 / model.n_features)
    return model.importance_raw / total


# -- Mean model ---------------------------------------------------------------


@dataclass(frozen=True)
class MeanModel:
    mean: float
    n_features: int | None = None

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.full(X.shape[0], self.mean)


def train_mean_model(y, n_features: int | None = None) -> MeanModel:
    y = np.asarray(y, dtype=float)
    if y.size < 1:
        raise ValueError("need at least one target value")
    return MeanModel(mean=float(y.mean()), n_features=n_features)


def predict_mean(model: MeanModel, X) -> np.ndarray:
    return model.predict(X)


# -- Artifact serialization ----------------------------------------------------


def schema_hash(schema: list[str]) -> str:
    return hashlib.sha256("\n".join(schema).encode()).hexdigest()


def model_to_artifact(model, schema: list[str], extra: dict | None = None) -> dict:
    art = {
        "version": ARTIFACT_VERSION,
        "schema": list(schema),
        "schema_hash": schema_hash(schema),
    }
    if extra:
        art.update(extra)
    if isinstance(model, SvrModel):
        art["family"] = "svr"
        art["model"] = {
            "kernel": {
                "kind": model.kernel.kind,
                "gamma": model.kernel.gamma,
                "degree": model.kernel.degree,
                "coef0": model.kernel.coef0,
            },
            "C": model.C,
            "epsilon": model.epsilon,
            "support_vectors": model.support_vectors.tolist(),
            "dual_coef": model.dual_coef.tolist(),
            "bias": model.bias,
            "n_features": model.n_features,
            "iterations": model.iterations,
            "kkt_gap": model.kkt_gap,
            "dual_objective": model.dual_objective,
            "converged": model.converged,
        }
    elif isinstance(model, RfModel):
        art["family"] = "rf"
        art["model"] = {
            "n_estimators": model.n_estimators,
            "max_depth": model.max_depth,
            "seed": model.seed,
            "n_features": model.n_features,
            "features": model.features.tolist(),
            "thresholds": model.thresholds.tolist(),
            "lefts": model.lefts.tolist(),
            "rights": model.rights.tolist(),
            "values": model.values.tolist(),
            "depths": model.depths.tolist(),
            "offsets": model.offsets.tolist(),
            "importance_raw": model.importance_raw.tolist(),
            "target_range": list(model.target_range),
        }
    elif isinstance(model, MeanModel):
        art["family"] = "mean"
        art["model"] = {"mean": model.mean, "n_features": model.n_features}
    else:
        raise TypeError(f"unsupported model type: {type(model).__name__}")
    return art


def model_from_artifact(art: dict, expected_schema: list[str] | None = None):
    if art.get("version") != ARTIFACT_VERSION:
        raise ValueError(f"unsupported artifact version: {art.get('version')!r}")
    if art.get("schema_hash") != schema_hash(art.get("schema", [])):
        raise ValueError("artifact schema hash does not match its schema")
    if expected_schema is not None and art["schema_hash"] != schema_hash(expected_schema):
        raise ValueError("artifact schema does not match the expected schema")
    family = art["family"]
    m = art["model"]
    if family == "svr":
        k = m["kernel"]
        return SvrModel(
            kernel=Kernel(k["kind"], k["gamma"], k["degree"], k["coef0"]),
            C=m["C"],
            epsilon=m["epsilon"],
            support_vectors=np.asarray(m["support_vectors"], dtype=float).reshape(
                -1, m["n_features"]
            ),
            dual_coef=np.asarray(m["dual_coef"], dtype=float),
            bias=m["bias"],
            n_features=m["n_features"],
            iterations=m["iterations"],
            kkt_gap=m["kkt_gap"],
            dual_objective=m["dual_objective"],
            converged=m["converged"],
        )
    if family == "rf":
        return RfModel(
            n_estimators=m["n_estimators"],
            max_depth=m["max_depth"],
            seed=m["seed"],
            n_features=m["n_features"],
            features=np.asarray(m["features"], dtype=np.int64),
            thresholds=np.asarray(m["thresholds"], dtype=float),
            lefts=np.asarray(m["lefts"], dtype=np.int64),
            rights=np.asarray(m["rights"], dtype=np.int64),
            values=np.asarray(m["values"], dtype=float),
            depths=np.asarray(m["depths"], dtype=np.int64),
            offsets=np.asarray(m["offsets"], dtype=np.int64),
            importance_raw=np.asarray(m["importance_raw"], dtype=float),
            target_range=(m["target_range"][0], m["target_range"][1]),
        )
    if family == "mean":
        return MeanModel(mean=m["mean"], n_features=m.get("n_features"))
    raise ValueError(f"unknown model family: {family!r}")


def save_model(model, schema: list[str], path, extra: dict | None = None) -> None:
    Path(path).write_text(json.dumps(model_to_artifact(model, schema, extra)))


def load_model(path, expected_schema: list[str] | None = None):
    art = json.loads(Path(path).read_text())
    return model_from_artifact(art, expected_schema), art
