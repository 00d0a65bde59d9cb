"""
One-hidden-layer perceptron, tanh activation, linear output, trained by
full-batch gradient descent on half the mean squared error.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from energyvol.mlmodels.linear import standardize

__all__ = ["MlpError", "MlpModel", "fit_mlp", "init_params", "forward", "loss_and_grad"]


class MlpError(ValueError):
    pass


def init_params(n_in: int, width: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Symmetric uniform draws with bound 1/sqrt(fan_in) per layer."""
    b1 = 1.0 / np.sqrt(n_in)
    b2 = 1.0 / np.sqrt(width)
    return {
        "W1": rng.uniform(-b1, b1, (width, n_in)),
        "b1": rng.uniform(-b1, b1, width),
        "w2": rng.uniform(-b2, b2, width),
        "b2": np.array(rng.uniform(-b2, b2)),
    }


def forward(params: dict, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.tanh(Z @ params["W1"].T + params["b1"])
    return a @ params["w2"] + params["b2"], a


def loss_and_grad(params: dict, Z: np.ndarray, t: np.ndarray) -> tuple[float, dict]:
    """L = 1/(2n) sum (out - t)^2 and its gradient."""
    out, a = forward(params, Z)
    n = t.size
    r = out - t
    loss = 0.5 * float(r @ r) / n
    d = r / n
    da = np.outer(d, params["w2"]) * (1.0 - a * a)
    grad = {
        "W1": da.T @ Z,
        "b1": da.sum(axis=0),
        "w2": a.T @ d,
        "b2": np.array(d.sum()),
    }
    return loss, grad


@dataclass
class MlpModel:
    params: dict
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    y_scale: float
    hidden_width: int
    losses: list

    @property
    def n_features(self) -> int:
        return self.x_mean.size

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise MlpError(f"expected {self.n_features} columns, got {X.shape[1]}")
        out, _ = forward(self.params, (X - self.x_mean) / self.x_scale)
        return self.y_mean + self.y_scale * out


def fit_mlp(
    X,
    y=None,
    hidden_width: int = 8,
    epochs: int = 2000,
    step_size: float = 0.1,
    seed: int = 0,
    standardize_target: bool = True,
) -> MlpModel:
    """Train on standardized inputs (and target, by default).

    Raises :class:`MlpError` if the loss exceeds 1e6 times its initial value.
    """
    if y is None:
        X, y = X.X, X.y
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if hidden_width < 1:
        raise MlpError("hidden_width must be >= 1")
    x_mean, x_scale = standardize(X)
    Z = (X - x_mean) / x_scale
    y_mean, y_scale = 0.0, 1.0
    if standardize_target:
        y_mean = float(y.mean())
        y_scale = float(y.std()) or 1.0
    t = (y - y_mean) / y_scale
    params = init_params(X.shape[1], hidden_width, np.random.default_rng(seed))
    loss0, grad = loss_and_grad(params, Z, t)
    losses = [loss0]
    for _ in range(epochs):
        for key in params:
            params[key] = params[key] - step_size * grad[key]
        loss, grad = loss_and_grad(params, Z, t)
        if not np.isfinite(loss) or loss > 1e6 * max(loss0, 1e-300):
            raise MlpError(f"training diverged (loss {loss:.3g}); use a smaller step size")
        losses.append(loss)
    return MlpModel(params, x_mean, x_scale, y_mean, y_scale, int(hidden_width), losses)
