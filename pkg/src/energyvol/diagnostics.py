"""
Descriptive statistics, normality and unit-root tests, and residual
diagnostics for conditional-variance models.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

__all__ = [
    "DiagnosticsError",
    "TestResult",
    "Summary",
    "chi2_sf",
    "describe",
    "jarque_bera",
    "ljung_box_squared",
    "arch_lm",
    "adf",
    "ADF_CRITICAL_VALUES",
    "multivariate_ljung_box_squared",
]

LEVELS = (0.10, 0.05, 0.01)

# Constant-only Dickey-Fuller critical values (large-sample, MacKinnon)
ADF_CRITICAL_VALUES = {0.01: -3.43, 0.05: -2.86, 0.10: -2.57}


class DiagnosticsError(ValueError):
    pass


@dataclass
class TestResult:
    """Outcome of a hypothesis test.

    ``p_value`` is ``None`` when only critical-value bands are available
    (ADF).  ``verdicts`` maps each significance level to ``True`` when the
    null is rejected.
    """

    __test__ = False  # keep pytest from collecting this class

    name: str
    statistic: float
    p_value: Optional[float]
    lag_order: Optional[int] = None
    verdicts: dict[float, bool] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "test": self.name,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "lag_order": self.lag_order,
            "verdicts": {f"{k:.2f}": ("reject" if v else "fail_to_reject") for k, v in self.verdicts.items()},
        }


@dataclass
class Summary:
    n: int
    mean: float
    max: float
    min: float
    std: float
    skewness: Optional[float]
    excess_kurtosis: Optional[float]

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def chi2_sf(x: float, df: int) -> float:
    """Upper tail probability of a chi-square variable."""
    return float(stats.chi2.sf(x, df))


def _pvalue_verdicts(p: float) -> dict[float, bool]:
    return {a: bool(p < a) for a in LEVELS}


def _as_vector(x, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DiagnosticsError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(x)):
        raise DiagnosticsError(f"{name} contains non-finite values")
    return x


def _central_moments(x: np.ndarray) -> tuple[float, float, float]:
    d = x - x.mean()
    d2 = d * d
    return float(d2.mean()), float((d2 * d).mean()), float((d2 * d2).mean())


def describe(x) -> Summary:
    """Mean, extremes, standard deviation (n-1 denominator), skewness and
    excess kurtosis.  Higher moments are ``None`` for a constant vector."""
    x = _as_vector(x)
    if x.size < 2:
        raise DiagnosticsError("describe needs at least 2 observations")
    m2, m3, m4 = _central_moments(x)
    skew = kurt = None
    if m2 > 0 and np.ptp(x) > 0:
        skew = m3 / m2**1.5
        kurt = m4 / m2**2 - 3.0
    constant = np.ptp(x) == 0
    return Summary(
        n=int(x.size),
        mean=float(x[0]) if constant else float(x.mean()),
        max=float(x.max()),
        min=float(x.min()),
        std=0.0 if constant else float(x.std(ddof=1)),
        skewness=skew,
        excess_kurtosis=kurt,
    )


def jarque_bera(x) -> TestResult:
    """JB = n/6 (S^2 + (K-3)^2/4), referred to chi-square(2)."""
    x = _as_vector(x)
    if x.size < 8:
        raise DiagnosticsError("Jarque-Bera needs at least 8 observations")
    m2, m3, m4 = _central_moments(x)
    if m2 <= 0 or np.ptp(x) == 0:
        raise DiagnosticsError("Jarque-Bera undefined for a constant series")
    s = m3 / m2**1.5
    k = m4 / m2**2
    jb = x.size / 6.0 * (s * s + (k - 3.0) ** 2 / 4.0)
    p = chi2_sf(jb, 2)
    return TestResult("jarque_bera", float(jb), p, None, _pvalue_verdicts(p))


def _autocorr(x: np.ndarray, nlags: int) -> np.ndarray:
    d = x - x.mean()
    denom = float(d @ d)
    if denom <= 0:
        raise DiagnosticsError("autocorrelation undefined for a constant series")
    n = d.size
    return np.array([float(d[k:] @ d[: n - k]) / denom for k in range(1, nlags + 1)])


def ljung_box_squared(residuals, m: int = 40) -> TestResult:
    """Ljung-Box portmanteau on squared (standardized) residuals.

    Q = n(n+2) sum_{k=1..m} rho_k^2 / (n-k), chi-square(m) under the null of
    no serial correlation in the squares.
    """
    z = _as_vector(residuals, "residuals")
    n = z.size
    if m < 1 or m >= n:
        raise DiagnosticsError(f"lag order m={m} must satisfy 1 <= m < n={n}")
    rho = _autocorr(z * z, m)
    k = np.arange(1, m + 1)
    q = float(n * (n + 2) * np.sum(rho**2 / (n - k)))
    p = chi2_sf(q, m)
    return TestResult("ljung_box_squared", q, p, m, _pvalue_verdicts(p))


def arch_lm(residuals, m: int = 40) -> TestResult:
    """Engle's LM test: regress e_t^2 on a constant and m own lags; LM = n R^2
    with n the number of regression observations, chi-square(m)."""
    e = _as_vector(residuals, "residuals")
    n = e.size
    if m < 1 or n <= 2 * m:
        raise DiagnosticsError(f"ARCH-LM needs n > 2m (n={n}, m={m})")
    e2 = e * e
    y = e2[m:]
    cols = [np.ones(n - m)] + [e2[m - k : n - k] for k in range(1, m + 1)]
    X = np.column_stack(cols)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise DiagnosticsError("ARCH-LM auxiliary regression is singular")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    tss = float(((y - y.mean()) ** 2).sum())
    if tss <= 0:
        raise DiagnosticsError("ARCH-LM undefined for constant squared residuals")
    r2 = 1.0 - float(resid @ resid) / tss
    lm = max(y.size * r2, 0.0)
    p = chi2_sf(lm, m)
    return TestResult("arch_lm", float(lm), p, m, _pvalue_verdicts(p))


def _adf_regression(x: np.ndarray, lag: int, start: int):
    dx = np.diff(x)
    # rows indexed by t where dx[t-1] = x_t - x_{t-1}; uses dx[t-1-j], j=1..lag
    rows = np.arange(start, dx.size)
    y = dx[rows]
    cols = [np.ones(rows.size), x[rows]]
    cols += [dx[rows - j] for j in range(1, lag + 1)]
    return y, np.column_stack(cols)


def _ols(y: np.ndarray, X: np.ndarray):
    xtx = X.T @ X
    if np.linalg.cond(xtx) > 1e12:
        raise DiagnosticsError("ADF design matrix is near-singular")
    beta = np.linalg.solve(xtx, X.T @ y)
    resid = y - X @ beta
    return beta, resid, xtx


def adf(x, max_lag: int = 10) -> TestResult:
    """Augmented Dickey-Fuller test with a constant and no trend.

    The augmentation lag is the AIC minimiser over ``0..max_lag`` on a common
    estimation sample; the chosen regression is then refit on all available
    rows.  Only critical-value verdicts are reported (``p_value`` is None).
    """
    x = _as_vector(x)
    if max_lag < 0:
        raise DiagnosticsError("max_lag must be nonnegative")
    if x.size <= max_lag + 10:
        raise DiagnosticsError(f"ADF needs more than max_lag + 10 = {max_lag + 10} observations")
    best_lag, best_aic = 0, np.inf
    for lag in range(max_lag + 1):
        y, X = _adf_regression(x, lag, max_lag)
        _, resid, _ = _ols(y, X)
        nobs = y.size
        aic = nobs * np.log(float(resid @ resid) / nobs) + 2 * X.shape[1]
        if aic < best_aic - 1e-12:
            best_lag, best_aic = lag, aic
    y, X = _adf_regression(x, best_lag, best_lag)
    beta, resid, xtx = _ols(y, X)
    dof = y.size - X.shape[1]
    s2 = float(resid @ resid) / dof
    se = np.sqrt(s2 * np.linalg.inv(xtx)[1, 1])
    tstat = float(beta[1] / se)
    verdicts = {a: bool(tstat < ADF_CRITICAL_VALUES[a]) for a in LEVELS}
    return TestResult("adf", tstat, None, best_lag, verdicts)


def multivariate_ljung_box_squared(std_residuals, m: int = 40) -> TestResult:
    """Hosking portmanteau on the vectorized outer products of standardized
    residuals (upper triangle incl. diagonal), chi-square(k^2 m) with
    k = N(N+1)/2."""
    z = np.asarray(std_residuals, dtype=float)
    if z.ndim != 2:
        raise DiagnosticsError("std_residuals must be a T x N matrix")
    n, N = z.shape
    iu = np.triu_indices(N)
    v = np.einsum("ti,tj->tij", z, z)[:, iu[0], iu[1]]
    v = v - v.mean(axis=0)
    k = v.shape[1]
    if m < 1 or m >= n:
        raise DiagnosticsError(f"lag order m={m} must satisfy 1 <= m < n={n}")
    c0 = v.T @ v / n
    try:
        c0_inv = np.linalg.inv(c0)
    except np.linalg.LinAlgError:
        raise DiagnosticsError("singular lag-0 covariance of squared residuals") from None
    q = 0.0
    for lag in range(1, m + 1):
        cl = v[lag:].T @ v[:-lag] / n
        q += np.trace(cl.T @ c0_inv @ cl @ c0_inv) / (n - lag)
    q *= n * n
    df = k * k * m
    p = chi2_sf(q, df)
    return TestResult("multivariate_ljung_box_squared", float(q), p, m, _pvalue_verdicts(p))
