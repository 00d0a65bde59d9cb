"""
OLS, ridge, lasso and elastic net on standardized features.

All penalised fits minimise

    1/(2T) ||y - ybar - Z b||^2 + lam * (mix ||b||_1 + (1 - mix)/2 ||b||_2^2)

over the standardized design ``Z`` (zero mean, unit population variance per
column) with an unpenalised intercept.  Ridge is ``mix = 0``, lasso
``mix = 1``.  Coefficients are reported on the original feature scale.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

__all__ = ["LinearModelError", "LinearModel", "fit_linear", "soft_threshold", "standardize"]

PENALTIES = ("none", "ridge", "lasso", "enet")


class LinearModelError(ValueError):
    pass


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and population standard deviations (1 for constant columns)."""
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return mean, scale


@dataclass
class LinearModel:
    intercept: float
    coefficients: np.ndarray
    penalty: str
    lam: float
    mix: float
    x_mean: np.ndarray
    x_scale: np.ndarray
    n_iter: int = 0

    @property
    def n_features(self) -> int:
        return self.coefficients.size

    @property
    def std_coefficients(self) -> np.ndarray:
        return self.coefficients * self.x_scale

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise LinearModelError(f"expected {self.n_features} columns, got {X.shape[1]}")
        return self.intercept + X @ self.coefficients


@numba.njit(cache=True)
def _coordinate_descent(G, c, l1, l2, beta, tol, max_sweeps):
    p = c.size
    for sweep in range(max_sweeps):
        max_step = 0.0
        for j in range(p):
            d = G[j, j]
            if d <= 0.0:
                continue
            rho = c[j]
            for k in range(p):
                if k != j:
                    rho -= G[j, k] * beta[k]
            if rho > l1:
                new = (rho - l1) / (d + l2)
            elif rho < -l1:
                new = (rho + l1) / (d + l2)
            else:
                new = 0.0
            step = abs(new - beta[j])
            if step > max_step:
                max_step = step
            beta[j] = new
        if max_step < tol:
            return beta, sweep + 1, True
    return beta, max_sweeps, False


def fit_linear(
    X,
    y=None,
    penalty: str = "none",
    lam: float = 0.0,
    mix: float = 0.5,
    *,
    tol: float = 1e-9,
    max_sweeps: int = 100_000,
) -> LinearModel:
    """Fit a (penalised) linear regression.

    ``X`` may be a :class:`FeatureMatrix`, in which case ``y`` is taken from
    it.  OLS and ridge solve the normal equations; lasso and elastic net use
    cyclic coordinate descent with soft-thresholding, stopping once no
    coefficient moves by more than ``tol`` in a sweep.
    """
    if y is None:
        X, y = X.X, X.y
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if penalty not in PENALTIES:
        raise LinearModelError(f"unknown penalty {penalty!r}")
    T, p = X.shape
    if T <= 2:
        raise LinearModelError("need more than 2 observations")
    if lam < 0 or not 0 <= mix <= 1:
        raise LinearModelError("require lam >= 0 and 0 <= mix <= 1")
    if penalty == "lasso":
        mix = 1.0
    elif penalty == "ridge":
        mix = 0.0
    elif penalty == "none":
        lam, mix = 0.0, 0.0

    x_mean, x_scale = standardize(X)
    Z = (X - x_mean) / x_scale
    ybar = float(y.mean())
    G = Z.T @ Z / T
    c = Z.T @ (y - ybar) / T
    n_iter = 0
    if penalty in ("none", "ridge"):
        A = G + lam * np.eye(p)
        if np.linalg.cond(A) > 1e12:
            raise LinearModelError("singular normal equations; use a ridge or lasso penalty")
        b = np.linalg.solve(A, c)
    else:
        b, n_iter, _ = _coordinate_descent(
            np.ascontiguousarray(G), c, lam * mix, lam * (1 - mix), np.zeros(p), tol, max_sweeps
        )
    coef = b / x_scale
    intercept = ybar - float(x_mean @ coef)
    return LinearModel(intercept, coef, penalty, float(lam), float(mix), x_mean, x_scale, int(n_iter))
