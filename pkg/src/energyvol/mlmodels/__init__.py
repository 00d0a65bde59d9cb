"""Regressor suite for next-day variance: linear, tree, KNN and MLP models."""
from __future__ import annotations

import itertools
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np

from energyvol.mlmodels.features import FeatureError, FeatureMatrix, build_features, default_roles, next_features
from energyvol.mlmodels.knn import KnnModel, fit_knn
from energyvol.mlmodels.linear import LinearModel, LinearModelError, fit_linear
from energyvol.mlmodels.mlp import MlpError, MlpModel, fit_mlp
from energyvol.mlmodels.trees import Tree, TreeEnsemble, TreeError, fit_boosted, fit_forest, fit_tree

__all__ = [
    "FeatureMatrix",
    "build_features",
    "next_features",
    "default_roles",
    "LinearModel",
    "fit_linear",
    "Tree",
    "TreeEnsemble",
    "fit_tree",
    "fit_forest",
    "fit_boosted",
    "KnnModel",
    "fit_knn",
    "MlpModel",
    "fit_mlp",
    "MODEL_KINDS",
    "DEFAULT_HYPERPARAMS",
    "DEFAULT_GRIDS",
    "fit_model",
    "predict",
    "select_hyperparameters",
    "ModelError",
]

ModelError = (FeatureError, LinearModelError, TreeError, MlpError, ValueError)

MODEL_KINDS = ("ols", "ridge", "lasso", "enet", "tree", "forest", "boost", "knn", "mlp")

DEFAULT_HYPERPARAMS: dict[str, dict[str, Any]] = {
    "ols": {},
    "ridge": {"lam": 0.1},
    "lasso": {"lam": 1e-6},
    "enet": {"lam": 1e-6, "mix": 0.5},
    "tree": {"max_depth": 4, "min_leaf": 20},
    "forest": {"n_trees": 100, "max_depth": 6, "min_leaf": 10, "feature_fraction": 1 / 3},
    "boost": {"n_rounds": 100, "learning_rate": 0.05, "max_depth": 3, "lambda_l2": 1.0,
              "alpha_l1": 0.0, "min_child_weight": 10.0},
    "knn": {"k": 20},
    "mlp": {"hidden_width": 8, "epochs": 1000, "step_size": 0.05},
}

# small fixed grids, searched on the last 20% of the training window
DEFAULT_GRIDS: dict[str, dict[str, Sequence]] = {
    "ols": {},
    "ridge": {"lam": [0.01, 0.1, 1.0, 10.0]},
    "lasso": {"lam": [1e-7, 1e-6, 1e-5, 1e-4]},
    "enet": {"lam": [1e-7, 1e-6, 1e-5, 1e-4], "mix": [0.5]},
    "tree": {"max_depth": [2, 4, 6], "min_leaf": [20]},
    "forest": {"max_depth": [4, 6]},
    "boost": {"max_depth": [2, 3], "n_rounds": [50, 100]},
    "knn": {"k": [5, 20, 50]},
    "mlp": {"hidden_width": [4, 8]},
}


def fit_model(kind: str, fm: FeatureMatrix, seed: int = 0, **hyper) -> Any:
    """Fit one of :data:`MODEL_KINDS` with defaults overridden by ``hyper``."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {', '.join(MODEL_KINDS)}")
    hp = {**DEFAULT_HYPERPARAMS[kind], **hyper}
    X, y = fm.X, fm.y
    if kind in ("ols", "ridge", "lasso", "enet"):
        penalty = {"ols": "none"}.get(kind, kind)
        return fit_linear(X, y, penalty=penalty, **hp)
    if kind == "tree":
        model = fit_tree(X, y, **hp)
    elif kind == "forest":
        model = fit_forest(X, y, seed=seed, **hp)
    elif kind == "boost":
        model = fit_boosted(X, y, **hp)
    elif kind == "knn":
        return fit_knn(X, y, **hp)
    else:
        return fit_mlp(X, y, seed=seed, **hp)
    model.feature_names = list(fm.feature_names)
    return model


def predict(model, X) -> np.ndarray:
    """Predictions of any fitted model on the rows of ``X`` (may be negative)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = getattr(model, "n_features", None)
    if n and X.shape[1] != n:
        raise ValueError(f"model expects {n} columns, got {X.shape[1]}")
    return np.asarray(model.predict(X), dtype=float)


def select_hyperparameters(
    kind: str,
    fm: FeatureMatrix,
    grid: Optional[Mapping[str, Sequence]] = None,
    validation_fraction: float = 0.2,
    seed: int = 0,
    base: Optional[Mapping[str, Any]] = None,
) -> dict[str, Any]:
    """Grid point with the lowest MSE on the chronologically last
    ``validation_fraction`` of ``fm`` when trained on the rows before it.
    Ties keep the earlier grid point."""
    grid = DEFAULT_GRIDS[kind] if grid is None else grid
    base = dict(base or {})
    if not grid:
        return base
    n_val = max(1, int(round(validation_fraction * len(fm))))
    train, val = fm.head(len(fm) - n_val), fm.tail(n_val)
    keys = list(grid)
    best, best_mse = None, np.inf
    for combo in itertools.product(*(grid[k] for k in keys)):
        hp = {**base, **dict(zip(keys, combo))}
        try:
            model = fit_model(kind, train, seed=seed, **hp)
        except ModelError:
            continue
        mse = float(np.mean((predict(model, val.X) - val.y) ** 2))
        if mse < best_mse:
            best, best_mse = hp, mse
    return best if best is not None else base
