"""Lagged feature matrices for next-day variance regression."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from energyvol.ingest import AlignedPanel

__all__ = ["FeatureError", "FeatureMatrix", "build_features", "next_features", "default_roles"]


class FeatureError(ValueError):
    pass


@dataclass
class FeatureMatrix:
    """Row ``t``: features dated ``<= t-1``; ``y[t]`` is the squared target
    return of day ``t``."""

    dates: pd.DatetimeIndex
    X: np.ndarray
    feature_names: list[str]
    y: np.ndarray
    target_name: str

    def __post_init__(self) -> None:
        if self.X.ndim != 2 or self.X.shape[0] != self.y.size or self.X.shape[1] != len(self.feature_names):
            raise FeatureError("inconsistent feature matrix dimensions")
        if self.X.shape[1] < 1:
            raise FeatureError("at least one feature is required")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise FeatureError("feature matrix contains missing values")

    def __len__(self) -> int:
        return self.y.size

    def head(self, n: int) -> "FeatureMatrix":
        return FeatureMatrix(self.dates[:n], self.X[:n], self.feature_names, self.y[:n], self.target_name)

    def tail(self, n: int) -> "FeatureMatrix":
        s = slice(len(self) - n, None)
        return FeatureMatrix(self.dates[s], self.X[s], self.feature_names, self.y[s], self.target_name)


def default_roles(panel: AlignedPanel) -> tuple[list[str], list[str]]:
    """Columns tagged as log returns are commodities, the rest exogenous."""
    commodities = [c for c in panel.columns if panel.tags.get(c) in ("log_return", "asinh_diff")]
    exogenous = [c for c in panel.columns if c not in commodities]
    return commodities, exogenous


def _layout(panel, target, commodities, exogenous, lags):
    if commodities is None or exogenous is None:
        dc, de = default_roles(panel)
        commodities = dc if commodities is None else list(commodities)
        exogenous = de if exogenous is None else list(exogenous)
    commodities, exogenous = list(commodities), list(exogenous)
    missing = [c for c in [target, *commodities, *exogenous] if c not in panel.columns]
    if missing:
        raise FeatureError(f"unknown column(s): {', '.join(missing)}")
    if lags < 1:
        raise FeatureError("lags must be >= 1")
    names = [f"{c}_sq_lag{k}" for c in commodities for k in range(1, lags + 1)]
    names += [f"{e}_lag1" for e in exogenous]
    return commodities, exogenous, names


def _row(panel: AlignedPanel, t: int, commodities, exogenous, lags) -> np.ndarray:
    """Features for day t built from rows t-1, t-2, ..."""
    vals = [panel.frame[c].iat[t - k] ** 2 for c in commodities for k in range(1, lags + 1)]
    vals += [panel.frame[e].iat[t - 1] for e in exogenous]
    return np.array(vals, dtype=float)


def build_features(
    panel: AlignedPanel,
    target: str,
    lags: int = 1,
    commodities: Optional[Sequence[str]] = None,
    exogenous: Optional[Sequence[str]] = None,
) -> FeatureMatrix:
    """Lagged squared returns of every commodity (lags ``1..lags``) and each
    exogenous column at lag 1; target ``y_t = r_{target,t}^2``.

    The first ``lags`` panel rows only serve as history.
    """
    commodities, exogenous, names = _layout(panel, target, commodities, exogenous, lags)
    T = len(panel)
    if T <= lags:
        raise FeatureError(f"need more than {lags} rows of history, got {T}")
    sq = {c: panel[c] ** 2 for c in commodities}
    cols = [sq[c][lags - k : T - k] for c in commodities for k in range(1, lags + 1)]
    cols += [panel[e][lags - 1 : T - 1] for e in exogenous]
    X = np.column_stack(cols) if cols else np.zeros((T - lags, 0))
    y = panel[target][lags:] ** 2
    return FeatureMatrix(panel.dates[lags:], X, names, y, target)


def next_features(
    panel: AlignedPanel,
    target: str,
    lags: int = 1,
    commodities: Optional[Sequence[str]] = None,
    exogenous: Optional[Sequence[str]] = None,
) -> np.ndarray:
    """Feature row (1 x p) for the day after the panel's last row."""
    commodities, exogenous, _ = _layout(panel, target, commodities, exogenous, lags)
    if len(panel) < lags:
        raise FeatureError(f"need at least {lags} rows of history")
    return _row(panel, len(panel), commodities, exogenous, lags)[None, :]
