"""
Univariate GARCH(1,1), GJR-GARCH and EGARCH with optional exogenous
regressors in the variance equation, estimated by Gaussian QML.

Return model: ``r_t = mu + eps_t``, ``eps_t = sigma_t z_t``.  Variance
recursions (``X_{t-1}`` is the exogenous row observed one day earlier)::

    GARCH11  s2_t = w + a e_{t-1}^2 + b s2_{t-1} + d'X_{t-1}
    GJR      s2_t = w + (a + g 1{e_{t-1}<0}) e_{t-1}^2 + b s2_{t-1} + d'X_{t-1}
    EGARCH   ln s2_t = w + a(|z_{t-1}| - E|z|) + g z_{t-1} + b ln s2_{t-1} + d'X_{t-1}

The recursion starts at the sample variance of the returns.  Estimation runs
BFGS on an unconstrained reparameterisation of the admissible region with an
analytic gradient; standard errors come from the inverse Hessian of the
negative log-likelihood mapped back by the delta method.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numba
import numpy as np
from scipy.optimize import minimize

__all__ = [
    "GarchError",
    "GarchSpec",
    "GarchParams",
    "GarchFit",
    "FilterResult",
    "filter_variance",
    "log_likelihood",
    "fit",
    "forecast_one_step",
    "persistence",
    "long_run_variance",
    "simulate",
]

KINDS = ("GARCH11", "GJR", "EGARCH")
_KIND_CODE = {"GARCH11": 0, "GJR": 1, "EGARCH": 2}
VARIANCE_FLOOR = 1e-12
LOG2PI = math.log(2.0 * math.pi)
EABS_Z = math.sqrt(2.0 / math.pi)
_PENALTY = 1e10


class GarchError(ValueError):
    pass


@dataclass(frozen=True)
class GarchSpec:
    """Model choice.

    ``fixed_mean`` pins ``mu`` instead of estimating it (use 0.0 for
    demeaned data).
    """

    kind: str = "GARCH11"
    exogenous: tuple[str, ...] = ()
    fixed_mean: Optional[float] = None

    def __post_init__(self) -> None:
        kind = self.kind.upper()
        kind = {"GARCH": "GARCH11", "GJR-GARCH": "GJR"}.get(kind, kind)
        if kind not in KINDS:
            raise GarchError(f"unknown GARCH kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "exogenous", tuple(self.exogenous))
        if len(set(self.exogenous)) != len(self.exogenous):
            raise GarchError("exogenous names must be distinct")

    @property
    def has_gamma(self) -> bool:
        return self.kind != "GARCH11"

    @property
    def param_names(self) -> list[str]:
        names = [] if self.fixed_mean is not None else ["mu"]
        names += ["omega", "alpha", "beta"]
        if self.has_gamma:
            names.append("gamma")
        return names + [f"exo[{x}]" for x in self.exogenous]


@dataclass
class GarchParams:
    mu: float = 0.0
    omega: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    exo_coefs: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        self.exo_coefs = np.atleast_1d(np.asarray(self.exo_coefs, dtype=float))

    def full_vector(self) -> np.ndarray:
        return np.concatenate([[self.mu, self.omega, self.alpha, self.beta, self.gamma], self.exo_coefs])

    @classmethod
    def from_full_vector(cls, v) -> "GarchParams":
        v = np.asarray(v, dtype=float)
        return cls(*map(float, v[:5]), exo_coefs=v[5:].copy())

    def check(self, spec: GarchSpec) -> None:
        """Raise :class:`GarchError` unless the parameters are admissible."""
        if self.exo_coefs.size != len(spec.exogenous):
            raise GarchError(
                f"{self.exo_coefs.size} exogenous coefficients for {len(spec.exogenous)} regressors"
            )
        if spec.kind == "EGARCH":
            if not abs(self.beta) < 1:
                raise GarchError("EGARCH requires |beta| < 1")
            return
        if not (self.omega > 0 and self.alpha >= 0 and self.beta >= 0):
            raise GarchError("requires omega > 0, alpha >= 0, beta >= 0")
        if spec.kind == "GARCH11":
            if not self.alpha + self.beta < 1:
                raise GarchError("GARCH(1,1) requires alpha + beta < 1")
        elif not (self.alpha + self.beta + self.gamma / 2 < 1 and self.alpha + self.gamma >= 0):
            raise GarchError("GJR requires alpha + beta + gamma/2 < 1 and alpha + gamma >= 0")


class FilterResult(NamedTuple):
    variance: np.ndarray
    residuals: np.ndarray
    floor_hits: int


@dataclass
class GarchFit:
    spec: GarchSpec
    params: GarchParams
    std_errors: Optional[dict[str, float]]
    log_likelihood: float
    variance_path: np.ndarray
    std_residuals: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float = float("nan")
    floor_hits: int = 0
    last_return: float = float("nan")
    nobs: int = 0

    @property
    def residuals(self) -> np.ndarray:
        return self.std_residuals * np.sqrt(self.variance_path)

    @property
    def persistence(self) -> float:
        return persistence(self)


# --------------------------------------------------------------------------
# recursion kernels: log-likelihood, gradient w.r.t. the full natural vector
# (mu, omega, alpha, beta, gamma, delta_1..delta_m) and the variance path


@numba.njit(cache=True)
def _garch_kernel(theta, kind, r, X, s2_init, want_grad):
    n = r.shape[0]
    m = X.shape[1]
    k = 5 + m
    mu, omega, alpha, beta, gamma = theta[0], theta[1], theta[2], theta[3], theta[4]
    path = np.empty(n)
    grad = np.zeros(k)
    ds2 = np.zeros(k)
    s2 = s2_init
    ll = 0.0
    hits = 0
    for t in range(n):
        if t > 0:
            e = r[t - 1] - mu
            neg = 1.0 if (kind == 1 and e < 0.0) else 0.0
            a_eff = alpha + gamma * neg
            new = omega + a_eff * e * e + beta * s2
            for i in range(m):
                new += theta[5 + i] * X[t - 1, i]
            if want_grad:
                ds2[0] = -2.0 * a_eff * e + beta * ds2[0]
                ds2[1] = 1.0 + beta * ds2[1]
                ds2[2] = e * e + beta * ds2[2]
                ds2[3] = s2 + beta * ds2[3]
                ds2[4] = neg * e * e + beta * ds2[4]
                for i in range(m):
                    ds2[5 + i] = X[t - 1, i] + beta * ds2[5 + i]
            if new < 1e-12:
                new = 1e-12
                hits += 1
                for j in range(k):
                    ds2[j] = 0.0
            s2 = new
        if not (s2 > 0.0 and s2 < np.inf):
            return np.nan, grad, path, hits, t
        path[t] = s2
        et = r[t] - mu
        ll += -0.5 * (LOG2PI + math.log(s2) + et * et / s2)
        if want_grad:
            c = -0.5 * (1.0 / s2 - et * et / (s2 * s2))
            for j in range(k):
                grad[j] += c * ds2[j]
            grad[0] += et / s2
    return ll, grad, path, hits, -1


@numba.njit(cache=True)
def _egarch_kernel(theta, r, X, s2_init, want_grad):
    n = r.shape[0]
    m = X.shape[1]
    k = 5 + m
    mu, omega, alpha, beta, gamma = theta[0], theta[1], theta[2], theta[3], theta[4]
    path = np.empty(n)
    grad = np.zeros(k)
    dl = np.zeros(k)
    dz = np.zeros(k)
    lv = math.log(s2_init)
    ll = 0.0
    for t in range(n):
        if t > 0:
            e = r[t - 1] - mu
            sd = math.exp(0.5 * lv)
            z = e / sd
            az = abs(z)
            sgn = 1.0 if z > 0 else (-1.0 if z < 0 else 0.0)
            new = omega + alpha * (az - EABS_Z) + gamma * z + beta * lv
            for i in range(m):
                new += theta[5 + i] * X[t - 1, i]
            if want_grad:
                for j in range(k):
                    dz[j] = -0.5 * z * dl[j]
                dz[0] -= 1.0 / sd
                slope = alpha * sgn + gamma
                old_lv = lv
                for j in range(k):
                    dl[j] = slope * dz[j] + beta * dl[j]
                dl[1] += 1.0
                dl[2] += az - EABS_Z
                dl[3] += old_lv
                dl[4] += z
                for i in range(m):
                    dl[5 + i] += X[t - 1, i]
            lv = new
        s2 = math.exp(lv) if lv < 700.0 else np.inf
        if not (s2 > 0.0 and s2 < np.inf):
            return np.nan, grad, path, 0, t
        path[t] = s2
        et = r[t] - mu
        ll += -0.5 * (LOG2PI + lv + et * et / s2)
        if want_grad:
            c = -0.5 * (1.0 - et * et / s2)
            for j in range(k):
                grad[j] += c * dl[j]
            grad[0] += et / s2
    return ll, grad, path, 0, -1


def _run_kernel(spec: GarchSpec, theta: np.ndarray, r: np.ndarray, X: np.ndarray, s2_init: float, want_grad: bool):
    if spec.kind == "EGARCH":
        return _egarch_kernel(theta, r, X, s2_init, want_grad)
    return _garch_kernel(theta, _KIND_CODE[spec.kind], r, X, s2_init, want_grad)


def _prepare(spec: GarchSpec, returns, exog) -> tuple[np.ndarray, np.ndarray]:
    r = np.ascontiguousarray(np.asarray(returns, dtype=float))
    if r.ndim != 1 or r.size < 2:
        raise GarchError("returns must be a vector with at least 2 observations")
    if not np.all(np.isfinite(r)):
        raise GarchError("returns contain non-finite values")
    m = len(spec.exogenous)
    if exog is None:
        X = np.zeros((r.size, 0))
    else:
        X = np.asarray(exog, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
    if X.shape != (r.size, m):
        raise GarchError(f"exogenous matrix must be {r.size} x {m}, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise GarchError("exogenous regressors contain non-finite values")
    return r, np.ascontiguousarray(X)


def _mu(spec: GarchSpec, params: GarchParams) -> float:
    return params.mu if spec.fixed_mean is None else spec.fixed_mean


def _theta(spec: GarchSpec, params: GarchParams) -> np.ndarray:
    theta = params.full_vector()
    theta[0] = _mu(spec, params)
    if not spec.has_gamma:
        theta[4] = 0.0
    return theta


def filter_variance(spec: GarchSpec, params: GarchParams, returns, exog=None) -> FilterResult:
    """Conditional variance path and residuals ``r_t - mu``.

    ``exog`` row ``t`` is the regressor value dated ``t``; it enters the
    variance of day ``t + 1``.  For the additive models the variance is
    floored at 1e-12 and the number of floored days is reported.
    """
    params.check(spec)
    r, X = _prepare(spec, returns, exog)
    theta = _theta(spec, params)
    ll, _, path, hits, bad = _run_kernel(spec, theta, r, X, float(np.var(r)), False)
    if bad >= 0:
        raise GarchError(f"non-finite conditional variance at t={bad}")
    return FilterResult(path, r - theta[0], int(hits))


def log_likelihood(spec: GarchSpec, params: GarchParams, returns, exog=None) -> float:
    """Gaussian log-likelihood -1/2 sum(ln 2pi + ln s2_t + e_t^2 / s2_t)."""
    params.check(spec)
    r, X = _prepare(spec, returns, exog)
    ll, _, _, _, bad = _run_kernel(spec, _theta(spec, params), r, X, float(np.var(r)), False)
    if bad >= 0:
        raise GarchError(f"non-finite conditional variance at t={bad}")
    return float(ll)


# --------------------------------------------------------------------------
# reparameterisation


def _expit(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    ex = math.exp(x)
    return ex / (1.0 + ex)


def _logit(p: float) -> float:
    return math.log(p) - math.log1p(-p)


class _Reparam:
    """Smooth bijection between R^d and the admissible parameter region.

    GARCH11: alpha = s w, beta = s (1 - w) with s, w logistic.
    GJR: with c = alpha + gamma, the triple (alpha/2, beta, c/2) = s * softmax(v1, v2, 0),
         so alpha + beta + gamma/2 = s < 1 and alpha, beta, c > 0.
    EGARCH: beta = tanh(u); omega, alpha, gamma free.
    omega (additive models) = v0 exp(u); mu = m0 + s0 u; delta_i = k_i u.
    """

    def __init__(self, spec: GarchSpec, v0: float, m0: float, s0: float, xsd: np.ndarray):
        self.spec = spec
        self.v0, self.m0, self.s0 = v0, m0, s0
        xsd = np.where(xsd > 0, xsd, 1.0)
        self.kscale = (1.0 / xsd) if spec.kind == "EGARCH" else (v0 / xsd)
        self.m = len(spec.exogenous)
        self.est_mu = spec.fixed_mean is None
        core = {"GARCH11": 3, "GJR": 4, "EGARCH": 4}[spec.kind]
        self.dim = int(self.est_mu) + core + self.m

    def to_natural(self, u: np.ndarray) -> np.ndarray:
        theta, _ = self._map(u, jac=False)
        return theta

    def jacobian(self, u: np.ndarray) -> np.ndarray:
        return self._map(u, jac=True)[1]

    def _map(self, u, jac):
        spec = self.spec
        theta = np.zeros(5 + self.m)
        J = np.zeros((5 + self.m, self.dim)) if jac else None
        i = 0
        if self.est_mu:
            theta[0] = self.m0 + self.s0 * u[0]
            if jac:
                J[0, 0] = self.s0
            i = 1
        else:
            theta[0] = spec.fixed_mean
        if spec.kind == "EGARCH":
            theta[1], theta[2], theta[4] = u[i], u[i + 1], u[i + 2]
            b = math.tanh(u[i + 3])
            theta[3] = b
            if jac:
                J[1, i] = J[2, i + 1] = J[4, i + 2] = 1.0
                J[3, i + 3] = 1.0 - b * b
            i += 4
        else:
            om = self.v0 * math.exp(u[i])
            theta[1] = om
            if jac:
                J[1, i] = om
            s = _expit(u[i + 1])
            ds = s * (1.0 - s)
            if spec.kind == "GARCH11":
                w = _expit(u[i + 2])
                dw = w * (1.0 - w)
                theta[2], theta[3] = s * w, s * (1.0 - w)
                if jac:
                    J[2, i + 1], J[2, i + 2] = ds * w, s * dw
                    J[3, i + 1], J[3, i + 2] = ds * (1.0 - w), -s * dw
                i += 3
            else:
                v = np.array([u[i + 2], u[i + 3], 0.0])
                e = np.exp(v - v.max())
                p = e / e.sum()
                a, b, c = 2 * s * p[0], s * p[1], 2 * s * p[2]
                theta[2], theta[3], theta[4] = a, b, c - a
                if jac:
                    # d p_i / d v_j = p_i (delta_ij - p_j), j in {0, 1}
                    dp = np.array([[p[r] * ((r == q) - p[q]) for q in range(2)] for r in range(3)])
                    da = np.concatenate([[2 * ds * p[0]], 2 * s * dp[0]])
                    db = np.concatenate([[ds * p[1]], s * dp[1]])
                    dc = np.concatenate([[2 * ds * p[2]], 2 * s * dp[2]])
                    J[2, i + 1 : i + 4] = da
                    J[3, i + 1 : i + 4] = db
                    J[4, i + 1 : i + 4] = dc - da
                i += 4
        theta[5:] = self.kscale * u[i:]
        if jac:
            J[5:, i:] = np.diag(self.kscale)
        return theta, J

    def to_free(self, theta: np.ndarray) -> np.ndarray:
        spec = self.spec
        u = []
        if self.est_mu:
            u.append((theta[0] - self.m0) / self.s0)
        if spec.kind == "EGARCH":
            u += [theta[1], theta[2], theta[4], math.atanh(theta[3])]
        else:
            u.append(math.log(theta[1] / self.v0))
            if spec.kind == "GARCH11":
                s = theta[2] + theta[3]
                u += [_logit(s), _logit(theta[2] / s)]
            else:
                a, b, c = theta[2], theta[3], theta[2] + theta[4]
                s = a / 2 + b + c / 2
                p = np.array([a / 2, b, c / 2]) / s
                u += [_logit(s), math.log(p[0] / p[2]), math.log(p[1] / p[2])]
        u += list(theta[5:] / self.kscale)
        return np.array(u, dtype=float)


def _default_start(spec: GarchSpec, r: np.ndarray, alpha=0.05, beta=0.90) -> np.ndarray:
    v0 = float(np.var(r))
    theta = np.zeros(5 + len(spec.exogenous))
    theta[0] = float(np.mean(r)) if spec.fixed_mean is None else spec.fixed_mean
    theta[2], theta[3] = alpha, beta
    if spec.kind == "EGARCH":
        theta[1] = (1.0 - beta) * math.log(v0)
    else:
        theta[1] = v0 * (1.0 - alpha - beta)
    return theta


def _clip_start(spec: GarchSpec, theta: np.ndarray) -> np.ndarray:
    """Nudge a (warm) start strictly inside the open admissible region."""
    theta = theta.copy()
    eps = 1e-6
    if spec.kind == "EGARCH":
        theta[3] = float(np.clip(theta[3], -1 + 1e-4, 1 - 1e-4))
        return theta
    theta[1] = max(theta[1], 1e-12)
    if spec.kind == "GARCH11":
        theta[2], theta[3] = max(theta[2], eps), max(theta[3], eps)
        s = theta[2] + theta[3]
        if s >= 1 - 1e-4:
            theta[2:4] *= (1 - 1e-4) / s
    else:
        a, b, c = max(theta[2], eps), max(theta[3], eps), max(theta[2] + theta[4], eps)
        s = a / 2 + b + c / 2
        if s >= 1 - 1e-4:
            f = (1 - 1e-4) / s
            a, b, c = a * f, b * f, c * f
        theta[2], theta[3], theta[4] = a, b, c - a
    return theta


def fit(
    spec: GarchSpec,
    returns,
    exog=None,
    *,
    start: Optional[GarchParams] = None,
    maxiter: int = 500,
    gtol: float = 1e-8,
    multistart: bool = False,
    min_obs: int = 250,
) -> GarchFit:
    """Gaussian QML estimate.

    Parameters
    ----------
    spec : GarchSpec
    returns : array_like
        Return series ``r_1..r_n`` (``n >= min_obs``).
    exog : array_like, optional
        ``n x m`` regressors; row ``t`` enters the variance of day ``t + 1``.
    start : GarchParams, optional
        Warm start.  The default is alpha=0.05, beta=0.90, gamma=0, zero
        exogenous coefficients and omega matching the sample variance.
    maxiter, gtol
        BFGS iteration cap and gradient tolerance (per-observation scale).
    multistart : bool
        Also try a small fixed grid of (alpha, beta) starts; keep the best.

    Returns
    -------
    GarchFit
        ``converged`` is False when the gradient norm of the per-observation
        negative log-likelihood exceeds 1e-5 at termination.  ``std_errors``
        is None when the Hessian is not positive definite.
    """
    r, X = _prepare(spec, returns, exog)
    n = r.size
    if n < min_obs:
        raise GarchError(f"need at least {min_obs} observations, got {n}")
    v0, m0, s0 = float(np.var(r)), float(np.mean(r)), float(np.std(r))
    if not v0 > 0:
        raise GarchError("returns have zero variance")
    rp = _Reparam(spec, v0, m0, s0, X.std(axis=0) if X.shape[1] else np.zeros(0))

    def objective(u):
        theta = rp.to_natural(u)
        ll, g, _, _, bad = _run_kernel(spec, theta, r, X, v0, True)
        if bad >= 0 or not np.isfinite(ll):
            return _PENALTY, np.zeros_like(u)
        grad = -(rp.jacobian(u).T @ g) / n
        return -ll / n, grad

    starts = []
    if start is not None:
        th = _theta(spec, start)
        starts.append(_clip_start(spec, th))
    else:
        starts.append(_default_start(spec, r))
    if multistart:
        for a, b in ((0.10, 0.85), (0.20, 0.70), (0.02, 0.97)):
            starts.append(_default_start(spec, r, a, b))

    best = None
    for k, th0 in enumerate(starts):
        u0 = rp.to_free(th0)
        f0, _ = objective(u0)
        if f0 >= _PENALTY:
            if k == 0:
                raise GarchError("variance filter fails at the starting point")
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(objective, u0, jac=True, method="BFGS",
                           options={"maxiter": maxiter, "gtol": gtol})
        if best is None or res.fun < best.fun:
            best = res

    u = best.x
    theta = rp.to_natural(u)
    _, g_nat, path, hits, bad = _run_kernel(spec, theta, r, X, v0, True)
    ll = float(_run_kernel(spec, theta, r, X, v0, False)[0])
    grad = -(rp.jacobian(u).T @ g_nat) / n
    gnorm = float(np.max(np.abs(grad)))
    params = GarchParams.from_full_vector(theta)
    if spec.fixed_mean is not None:
        params.mu = spec.fixed_mean
    if not spec.has_gamma:
        params.gamma = 0.0
    resid = r - theta[0]
    return GarchFit(
        spec=spec,
        params=params,
        std_errors=_standard_errors(spec, rp, objective, u, n),
        log_likelihood=ll,
        variance_path=path,
        std_residuals=resid / np.sqrt(path),
        converged=bool(gnorm <= 1e-5),
        iterations=int(best.nit),
        grad_norm=gnorm,
        floor_hits=int(hits),
        last_return=float(r[-1]),
        nobs=n,
    )


def _standard_errors(spec, rp: _Reparam, objective, u, n) -> Optional[dict[str, float]]:
    d = u.size
    H = np.zeros((d, d))
    for j in range(d):
        h = 1e-5 * max(1.0, abs(u[j]))
        up, dn = u.copy(), u.copy()
        up[j] += h
        dn[j] -= h
        gp, gm = objective(up)[1], objective(dn)[1]
        H[:, j] = (gp - gm) / (2 * h)
    H = 0.5 * (H + H.T) * n
    try:
        np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        return None
    J = rp.jacobian(u)
    cov = J @ np.linalg.inv(H) @ J.T
    idx = ([0] if spec.fixed_mean is None else []) + [1, 2, 3]
    if spec.has_gamma:
        idx.append(4)
    idx += list(range(5, 5 + rp.m))
    var = np.diag(cov)[idx]
    if np.any(var < 0) or not np.all(np.isfinite(var)):
        return None
    return dict(zip(spec.param_names, map(float, np.sqrt(var))))


def forecast_one_step(fit: GarchFit, latest_return: Optional[float] = None, latest_exog=None) -> float:
    """Variance forecast for the day after the last filtered day.

    ``latest_return`` defaults to the last return in the fitted sample and
    ``latest_exog`` is the regressor row dated on that same day.
    """
    spec, p = fit.spec, fit.params
    r_last = fit.last_return if latest_return is None else float(latest_return)
    e = r_last - _mu(spec, p)
    s2 = float(fit.variance_path[-1])
    m = len(spec.exogenous)
    x = np.zeros(m) if latest_exog is None else np.asarray(latest_exog, dtype=float).ravel()
    if x.size != m:
        raise GarchError(f"expected {m} exogenous values, got {x.size}")
    exo = float(p.exo_coefs @ x) if m else 0.0
    if spec.kind == "EGARCH":
        z = e / math.sqrt(s2)
        lv = p.omega + p.alpha * (abs(z) - EABS_Z) + p.gamma * z + p.beta * math.log(s2) + exo
        out = math.exp(lv)
    else:
        a = p.alpha + (p.gamma if (spec.kind == "GJR" and e < 0) else 0.0)
        out = max(p.omega + a * e * e + p.beta * s2 + exo, VARIANCE_FLOOR)
    if not (out > 0 and math.isfinite(out)):
        raise GarchError("non-finite variance forecast")
    return out


def persistence(fit_or_params, kind: Optional[str] = None) -> float:
    """alpha+beta (GARCH11), alpha+beta+gamma/2 (GJR) or |beta| (EGARCH)."""
    if isinstance(fit_or_params, GarchFit):
        p, kind = fit_or_params.params, fit_or_params.spec.kind
    else:
        p = fit_or_params
        kind = GarchSpec(kind or "GARCH11").kind
    if kind == "GARCH11":
        return p.alpha + p.beta
    if kind == "GJR":
        return p.alpha + p.beta + p.gamma / 2
    return abs(p.beta)


def long_run_variance(fit_or_params, kind: Optional[str] = None) -> float:
    """omega / (1 - persistence) for the additive models without regressors."""
    if isinstance(fit_or_params, GarchFit):
        p, kind = fit_or_params.params, fit_or_params.spec.kind
    else:
        p = fit_or_params
        kind = GarchSpec(kind or "GARCH11").kind
    if kind == "EGARCH":
        raise GarchError("long-run variance is not closed-form for EGARCH")
    pers = persistence(p, kind)
    if pers >= 1:
        return float("inf")
    return p.omega / (1.0 - pers)


def simulate(
    spec: GarchSpec,
    params: GarchParams,
    n: int,
    seed: int | np.random.Generator = 0,
    burn: int = 500,
    exog=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` returns with Gaussian innovations; returns (r, sigma2).

    The recursion is written out independently of the estimation kernels so
    that simulated data can serve as a check on them.
    """
    params.check(spec)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    m = len(spec.exogenous)
    total = n + burn
    if m:
        X = np.asarray(exog, dtype=float).reshape(n, m)
        X = np.vstack([np.repeat(X[:1], burn, axis=0), X])
    z = rng.standard_normal(total)
    r = np.empty(total)
    s2 = np.empty(total)
    p = params
    if spec.kind == "EGARCH":
        s2[0] = math.exp(p.omega / (1 - p.beta))
    else:
        s2[0] = p.omega / max(1e-6, 1 - persistence(p, spec.kind))
    mu = _mu(spec, p)
    for t in range(total):
        if t > 0:
            e = r[t - 1] - mu
            exo = float(p.exo_coefs @ X[t - 1]) if m else 0.0
            if spec.kind == "EGARCH":
                zz = e / math.sqrt(s2[t - 1])
                s2[t] = math.exp(p.omega + p.alpha * (abs(zz) - EABS_Z) + p.gamma * zz
                                 + p.beta * math.log(s2[t - 1]) + exo)
            else:
                lev = p.gamma if (spec.kind == "GJR" and e < 0) else 0.0
                s2[t] = max(p.omega + (p.alpha + lev) * e * e + p.beta * s2[t - 1] + exo, VARIANCE_FLOOR)
        r[t] = mu + math.sqrt(s2[t]) * z[t]
    return r[burn:], s2[burn:]
