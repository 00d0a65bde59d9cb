"""
Rolling-window one-step-ahead backtest and forecast loss metrics.

For every out-of-sample row ``t`` each forecaster is (re)fitted on the
``in_sample_length`` rows ``[t - in_sample_length, t)`` and asked for the
variance of row ``t``.  The realised proxy is the squared return of row ``t``.

Metrics on errors ``d_t = predicted_t - actual_t``::

    RMSE = sqrt(mean(d^2))          MAE  = MMEO + MMEU
    MMEO = sum(max(d, 0)) / n       MMEU = sum(max(-d, 0)) / n

Both mixed-error metrics are divided by the full ``n``, so their sum is the
mean absolute error.
"""
from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Protocol, Sequence

import numpy as np
import pandas as pd

from energyvol import bekk, garch
from energyvol.ingest import AlignedPanel
from energyvol.mlmodels import build_features, fit_model, next_features, predict, select_hyperparameters

__all__ = [
    "HarnessError",
    "BacktestConfig",
    "ForecastRecord",
    "MetricRow",
    "EvaluationReport",
    "Forecaster",
    "ConstantForecaster",
    "GarchForecaster",
    "BekkForecaster",
    "MlForecaster",
    "rolling_backtest",
    "loss_metrics",
    "evaluate",
    "compare_report",
    "write_records",
    "read_records",
    "METRICS",
]

METRICS = ("rmse", "mae", "mmeo", "mmeu")
SCALES = ("variance", "volatility")


class HarnessError(ValueError):
    pass


@dataclass(frozen=True)
class BacktestConfig:
    in_sample_length: int = 3506
    out_of_sample_length: int = 1000
    reestimation_period: int = 1
    volatility_floor: float = 0.0
    scale: str = "variance"

    def __post_init__(self) -> None:
        if self.in_sample_length < 1 or self.out_of_sample_length < 1:
            raise HarnessError("in-sample and out-of-sample lengths must be positive")
        if self.reestimation_period < 1:
            raise HarnessError("reestimation_period must be >= 1")
        if self.volatility_floor < 0:
            raise HarnessError("volatility_floor must be >= 0")
        if self.scale not in SCALES:
            raise HarnessError(f"scale must be one of {SCALES}")

    def check_length(self, n_rows: int) -> None:
        need = self.in_sample_length + self.out_of_sample_length
        if need > n_rows:
            raise HarnessError(
                f"in_sample_length + out_of_sample_length = {need} exceeds the {n_rows} available rows"
            )

    def refit_day(self, k: int) -> bool:
        """Whether out-of-sample day ``k`` (0-based) triggers a refit."""
        return k % self.reestimation_period == 0


@dataclass(frozen=True)
class ForecastRecord:
    date: pd.Timestamp
    model_id: str
    commodity: str
    actual: float
    predicted: float
    refit: bool = True
    failed: bool = False
    train_start: Optional[pd.Timestamp] = None
    train_end: Optional[pd.Timestamp] = None

    def __post_init__(self) -> None:
        if not self.actual >= 0:
            raise HarnessError("actual variance proxy must be nonnegative")
        if not math.isfinite(self.predicted):
            raise HarnessError("predicted value must be finite")


# ---------------------------------------------------------------------------
# forecasters


class Forecaster(Protocol):
    """Adapter between a model family and the harness.

    ``fit`` returns an opaque state (``previous`` is the prior state, usable
    as a warm start) and ``forecast`` maps a state plus the current trailing
    window to a variance forecast per target for the row after the window.
    """

    model_id: str
    targets: tuple[str, ...]
    floor_predictions: bool

    def fit(self, window: AlignedPanel, previous: Any) -> Any: ...

    def forecast(self, state: Any, window: AlignedPanel) -> dict[str, float]: ...


@dataclass
class ConstantForecaster:
    """Always predicts ``value``; a reference for harness accounting."""

    value: float
    targets: tuple[str, ...]
    model_id: str = "constant"
    floor_predictions: bool = False

    def fit(self, window, previous):
        return None

    def forecast(self, state, window):
        return {c: float(self.value) for c in self.targets}


@dataclass
class GarchForecaster:
    target: str
    spec: garch.GarchSpec = field(default_factory=garch.GarchSpec)
    model_id: str = ""
    warm_start: bool = True
    floor_predictions: bool = False

    def __post_init__(self) -> None:
        self.model_id = self.model_id or self.spec.kind
        self.targets = (self.target,)

    def _data(self, window: AlignedPanel):
        exog = window.select(self.spec.exogenous).frame.to_numpy(float) if self.spec.exogenous else None
        return window[self.target], exog

    def fit(self, window, previous):
        r, X = self._data(window)
        start = previous[0].params if (self.warm_start and previous is not None) else None
        return garch.fit(self.spec, r, X, start=start), window.dates[-1]

    def forecast(self, state, window):
        gfit, fitted_through = state
        r, X = self._data(window)
        if window.dates[-1] != fitted_through:
            res = garch.filter_variance(self.spec, gfit.params, r, X)
            gfit = dataclasses.replace(gfit, variance_path=res.variance, last_return=float(r[-1]))
        x_last = None if X is None else X[-1]
        return {self.target: garch.forecast_one_step(gfit, latest_exog=x_last)}


@dataclass
class BekkForecaster:
    """One BEKK fit on ``columns`` forecasts the variance of each of ``targets``."""

    columns: tuple[str, ...]
    targets: tuple[str, ...] = ()
    model_id: str = "BEKK"
    warm_start: bool = True
    floor_predictions: bool = False

    def __post_init__(self) -> None:
        self.columns = tuple(self.columns)
        self.targets = tuple(self.targets) or self.columns
        unknown = [t for t in self.targets if t not in self.columns]
        if unknown:
            raise HarnessError(f"BEKK targets not among its columns: {unknown}")

    def fit(self, window, previous):
        E = window.select(self.columns).frame.to_numpy(float)
        start = previous[0].params if (self.warm_start and previous is not None) else None
        return bekk.fit(E, columns=self.columns, start=start, std_errors=False), window.dates[-1]

    def forecast(self, state, window):
        bfit, fitted_through = state
        if window.dates[-1] != fitted_through:
            E = window.select(self.columns).frame.to_numpy(float) - bfit.means
            path = bekk.filter_covariance(bfit.params, E)
            bfit = dataclasses.replace(bfit, covariance_path=path, last_residual=E[-1].copy())
        d = bekk.forecast_one_step(bfit)
        return {t: float(d[self.columns.index(t)]) for t in self.targets}


@dataclass
class MlForecaster:
    """ML regressor on lagged squared returns and exogenous columns.

    With ``tune`` set, hyperparameters are chosen once on the first window
    (last 20% held out) and then frozen for the rest of the backtest.
    """

    kind: str
    target: str
    hyper: dict = field(default_factory=dict)
    seed: int = 0
    lags: int = 1
    commodities: Optional[Sequence[str]] = None
    exogenous: Optional[Sequence[str]] = None
    tune: bool = False
    grid: Optional[Mapping[str, Sequence]] = None
    model_id: str = ""
    floor_predictions: bool = True

    def __post_init__(self) -> None:
        self.model_id = self.model_id or self.kind
        self.targets = (self.target,)
        self._tuned: Optional[dict] = None

    def _features_kw(self):
        return dict(lags=self.lags, commodities=self.commodities, exogenous=self.exogenous)

    def fit(self, window, previous):
        fm = build_features(window, self.target, **self._features_kw())
        if self.tune and self._tuned is None:
            self._tuned = select_hyperparameters(self.kind, fm, self.grid, seed=self.seed, base=self.hyper)
        hp = self._tuned if self._tuned is not None else self.hyper
        return fit_model(self.kind, fm, seed=self.seed, **hp)

    def forecast(self, state, window):
        x = next_features(window, self.target, **self._features_kw())
        return {self.target: float(predict(state, x)[0])}


# ---------------------------------------------------------------------------
# backtest loop


def _fallback(window: AlignedPanel, target: str) -> float:
    return float(np.var(window[target]))


def rolling_backtest(
    panel: AlignedPanel, forecasters: Sequence[Forecaster], config: BacktestConfig = BacktestConfig()
) -> list[ForecastRecord]:
    """Run every forecaster over the last ``out_of_sample_length`` rows.

    A failed fit keeps the previous state (or none) and, like a failed
    forecast, yields a record flagged ``failed`` that carries the previous
    forecast.  Before any forecast exists the window's sample variance is
    carried instead.  Records are sorted by (model_id, commodity, date).
    """
    T = len(panel)
    config.check_length(T)
    keys = [(f.model_id, c) for f in forecasters for c in f.targets]
    if len(set(keys)) != len(keys):
        raise HarnessError("each (model_id, target) pair must be unique")
    for f in forecasters:
        missing = [c for c in f.targets if c not in panel.columns]
        if missing:
            raise HarnessError(f"{f.model_id}: unknown target column(s) {missing}")

    n_in, n_out = config.in_sample_length, config.out_of_sample_length
    first = T - n_out
    dates = panel.dates
    records: list[ForecastRecord] = []
    for f in forecasters:
        state, have_state = None, False
        last: dict[str, float] = {}
        for k in range(n_out):
            t = first + k
            window = panel.rows(t - n_in, t)
            # structural no-lookahead check: training rows strictly precede t
            assert len(window) == n_in and window.dates[-1] < dates[t]
            refit = config.refit_day(k) or not have_state
            failed = False
            if refit:
                try:
                    state = f.fit(window, state if have_state else None)
                    have_state = True
                except Exception:
                    failed = True
            out: dict[str, float] = {}
            if have_state:
                try:
                    out = f.forecast(state, window)
                    if not all(math.isfinite(v) for v in out.values()):
                        out, failed = {}, True
                except Exception:
                    out, failed = {}, True
            for c in f.targets:
                if c in out and not failed:
                    pred = out[c]
                    if f.floor_predictions:
                        pred = max(pred, config.volatility_floor)
                else:
                    failed = True
                    pred = last.get(c, _fallback(window, c))
                last[c] = pred
            for c in f.targets:
                records.append(
                    ForecastRecord(
                        date=dates[t],
                        model_id=f.model_id,
                        commodity=c,
                        actual=float(panel.frame[c].iat[t] ** 2),
                        predicted=float(last[c]),
                        refit=bool(refit),
                        failed=failed,
                        train_start=window.dates[0],
                        train_end=window.dates[-1],
                    )
                )
    records.sort(key=lambda r: (r.model_id, r.commodity, r.date))
    return records


# ---------------------------------------------------------------------------
# evaluation


def loss_metrics(actual, predicted) -> dict[str, float]:
    """RMSE, MAE, MMEO and MMEU of ``predicted`` against ``actual``."""
    a = np.asarray(actual, dtype=float).ravel()
    p = np.asarray(predicted, dtype=float).ravel()
    if a.size == 0 or a.size != p.size:
        raise HarnessError("need equally long, nonempty actual and predicted arrays")
    d = p - a
    n = d.size
    mmeo = math.fsum(np.maximum(d, 0.0)) / n
    mmeu = math.fsum(np.maximum(-d, 0.0)) / n
    # scale before squaring so tiny errors do not underflow (or huge ones overflow)
    big = float(np.max(np.abs(d)))
    rmse = big * math.sqrt(math.fsum((d / big) ** 2) / n) if big > 0 else 0.0
    return {
        "rmse": rmse,
        "mae": mmeo + mmeu,
        "mmeo": mmeo,
        "mmeu": mmeu,
    }


@dataclass
class MetricRow:
    model_id: str
    commodity: str
    rmse: float
    mae: float
    mmeo: float
    mmeu: float
    n_forecasts: int
    n_failed: int = 0
    best: dict[str, bool] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class EvaluationReport:
    rows: list[MetricRow]
    scale: str = "variance"

    def row(self, model_id: str, commodity: str) -> MetricRow:
        for r in self.rows:
            if r.model_id == model_id and r.commodity == commodity:
                return r
        raise KeyError((model_id, commodity))

    def to_dict(self) -> dict:
        return {"scale": self.scale, "rows": [r.to_dict() for r in self.rows]}

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame([{k: v for k, v in r.to_dict().items() if k != "best"} for r in self.rows])
        for m in METRICS:
            df[f"best_{m}"] = [r.best.get(m, False) for r in self.rows]
        return df


def _mark_best(rows: list[MetricRow]) -> None:
    """Flag every row attaining the minimum of a metric within its commodity."""
    by_commodity: dict[str, list[MetricRow]] = {}
    for r in rows:
        by_commodity.setdefault(r.commodity, []).append(r)
    for group in by_commodity.values():
        for m in METRICS:
            lo = min(getattr(r, m) for r in group)
            for r in group:
                r.best[m] = getattr(r, m) == lo


def evaluate(records: Iterable[ForecastRecord], scale: str = "variance") -> EvaluationReport:
    """Metrics per (model_id, commodity).

    With ``scale="volatility"`` both sides are square-rooted first
    (negative predictions count as zero).
    """
    if scale not in SCALES:
        raise HarnessError(f"scale must be one of {SCALES}")
    groups: dict[tuple[str, str], list[ForecastRecord]] = {}
    for rec in records:
        groups.setdefault((rec.model_id, rec.commodity), []).append(rec)
    if not groups:
        raise HarnessError("no forecast records to evaluate")
    rows = []
    for (mid, com), recs in sorted(groups.items()):
        a = np.array([r.actual for r in recs])
        p = np.array([r.predicted for r in recs])
        if scale == "volatility":
            a, p = np.sqrt(a), np.sqrt(np.maximum(p, 0.0))
        m = loss_metrics(a, p)
        rows.append(MetricRow(mid, com, n_forecasts=len(recs), n_failed=sum(r.failed for r in recs), **m))
    _mark_best(rows)
    return EvaluationReport(rows, scale)


def compare_report(reports: Sequence[EvaluationReport] | EvaluationReport) -> dict:
    """Merge reports into one models-by-commodities table with best markers.

    Returns a JSON-ready dict ``{"scale", "metrics", "rows"}``; rows are
    sorted by (commodity, model_id) and every minimum per metric and
    commodity is marked (ties mark all).
    """
    if isinstance(reports, EvaluationReport):
        reports = [reports]
    if not reports:
        raise HarnessError("need at least one report")
    scales = {r.scale for r in reports}
    if len(scales) != 1:
        raise HarnessError("reports use different scales")
    rows = [dataclasses.replace(r, best={}) for rep in reports for r in rep.rows]
    keys = [(r.model_id, r.commodity) for r in rows]
    if len(set(keys)) != len(keys):
        raise HarnessError("duplicate (model, commodity) rows across reports")
    _mark_best(rows)
    rows.sort(key=lambda r: (r.commodity, r.model_id))
    return {"scale": scales.pop(), "metrics": list(METRICS), "rows": [r.to_dict() for r in rows]}


# ---------------------------------------------------------------------------
# records I/O

_RECORD_FIELDS = ("date", "model", "commodity", "actual", "predicted", "refit_flag", "failed_flag",
                  "train_start", "train_end")


def _day(ts) -> str:
    return "" if ts is None else pd.Timestamp(ts).strftime("%Y-%m-%d")


def write_records(records: Sequence[ForecastRecord], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_RECORD_FIELDS)
        for r in records:
            w.writerow([_day(r.date), r.model_id, r.commodity, repr(r.actual), repr(r.predicted),
                        int(r.refit), int(r.failed), _day(r.train_start), _day(r.train_end)])
    return path


def read_records(path: str | Path) -> list[ForecastRecord]:
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(ForecastRecord(
                date=pd.Timestamp(row["date"]),
                model_id=row["model"],
                commodity=row["commodity"],
                actual=float(row["actual"]),
                predicted=float(row["predicted"]),
                refit=row["refit_flag"] == "1",
                failed=row["failed_flag"] == "1",
                train_start=pd.Timestamp(row["train_start"]) if row.get("train_start") else None,
                train_end=pd.Timestamp(row["train_end"]) if row.get("train_end") else None,
            ))
    return out
