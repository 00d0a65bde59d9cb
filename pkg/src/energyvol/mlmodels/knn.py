"""K-nearest-neighbour regression on standardized features."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from energyvol.mlmodels.linear import standardize

__all__ = ["KnnError", "KnnModel", "fit_knn"]


class KnnError(ValueError):
    pass


@dataclass
class KnnModel:
    k: int
    X_train: np.ndarray  # standardized
    y_train: np.ndarray
    x_mean: np.ndarray
    x_scale: np.ndarray

    @property
    def n_features(self) -> int:
        return self.x_mean.size

    def neighbours(self, X) -> np.ndarray:
        """Indices of the k nearest training rows per query; distance ties
        go to the lower row index."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise KnnError(f"expected {self.n_features} columns, got {X.shape[1]}")
        Z = (X - self.x_mean) / self.x_scale
        out = np.empty((Z.shape[0], self.k), dtype=np.int64)
        for i, z in enumerate(Z):
            d = np.sum((self.X_train - z) ** 2, axis=1)
            out[i] = np.argsort(d, kind="stable")[: self.k]
        return out

    def predict(self, X) -> np.ndarray:
        return self.y_train[self.neighbours(X)].mean(axis=1)


def fit_knn(X, y=None, k: int = 5) -> KnnModel:
    if y is None:
        X, y = X.X, X.y
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if not 1 <= k <= y.size:
        raise KnnError(f"k must lie in [1, {y.size}]")
    mean, scale = standardize(X)
    return KnnModel(int(k), (X - mean) / scale, y.copy(), mean, scale)
