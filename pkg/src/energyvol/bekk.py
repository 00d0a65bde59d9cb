"""
Full BEKK(1,1) multivariate GARCH.

    H_t = C'C + A' e_{t-1} e_{t-1}' A + B' H_{t-1} B

with ``C`` lower triangular.  Returns are demeaned by their sample means and
the recursion starts at the sample covariance.  The process is covariance
stationary when the spectral radius of ``kron(A, A) + kron(B, B)`` is below
one.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numba
import numpy as np
from scipy.optimize import minimize

__all__ = [
    "BekkError",
    "BekkParams",
    "BekkFit",
    "filter_covariance",
    "log_likelihood",
    "spectral_radius",
    "fit",
    "forecast_one_step",
    "standardized_residuals",
    "simulate",
    "lower_factor",
]

LOG2PI = math.log(2.0 * math.pi)
_PENALTY = 1e10


class BekkError(ValueError):
    pass


@dataclass
class BekkParams:
    C: np.ndarray
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self) -> None:
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        n = self.C.shape[0]
        for name, M in (("C", self.C), ("A", self.A), ("B", self.B)):
            if M.shape != (n, n):
                raise BekkError(f"{name} must be {n} x {n}, got {M.shape}")
        if np.any(np.triu(self.C, 1) != 0):
            raise BekkError("C must be lower triangular")

    @property
    def n(self) -> int:
        return self.C.shape[0]

    def canonical(self) -> "BekkParams":
        """Sign-normalised copy: C rows with nonnegative diagonal, A and B with
        a nonnegative first nonzero diagonal entry.  H_t is unchanged."""
        C = self.C * np.where(np.diag(self.C) < 0, -1.0, 1.0)[:, None]
        return BekkParams(C, _sign_normalise(self.A), _sign_normalise(self.B))

    def to_vector(self) -> np.ndarray:
        il = np.tril_indices(self.n)
        return np.concatenate([self.C[il], self.A.ravel(), self.B.ravel()])

    @classmethod
    def from_vector(cls, v, n: int) -> "BekkParams":
        v = np.asarray(v, dtype=float)
        k = n * (n + 1) // 2
        C = np.zeros((n, n))
        C[np.tril_indices(n)] = v[:k]
        return cls(C, v[k : k + n * n].reshape(n, n), v[k + n * n :].reshape(n, n))

    @staticmethod
    def n_free(n: int) -> int:
        return n * (n + 1) // 2 + 2 * n * n


def _sign_normalise(M: np.ndarray) -> np.ndarray:
    d = np.diag(M)
    nz = np.flatnonzero(d != 0)
    if nz.size and d[nz[0]] < 0:
        return -M
    return M.copy()


@dataclass
class BekkFit:
    params: BekkParams
    log_likelihood: float
    covariance_path: np.ndarray
    spectral_radius: float
    converged: bool
    means: np.ndarray
    last_residual: np.ndarray
    iterations: int = 0
    grad_norm: float = float("nan")
    std_errors: Optional[BekkParams] = None
    columns: tuple[str, ...] = ()

    @property
    def stationary(self) -> bool:
        return self.spectral_radius < 1.0


def lower_factor(S: np.ndarray) -> np.ndarray:
    """Lower-triangular ``C`` with ``C'C = S`` and positive diagonal."""
    P = np.eye(S.shape[0])[::-1]
    L = np.linalg.cholesky(P @ S @ P)
    return P @ L.T @ P


@numba.njit(cache=True)
def _bekk_kernel(C, A, B, eps, H0, store):
    T, N = eps.shape
    CC = C.T @ C
    H = H0.copy()
    L = np.zeros((N, N))
    y = np.zeros(N)
    path = np.empty((T if store else 0, N, N))
    ll = 0.0
    for t in range(T):
        if t > 0:
            v = A.T @ eps[t - 1]
            H = CC + np.outer(v, v) + B.T @ H @ B
            # symmetrise round-off
            H = 0.5 * (H + H.T)
        if store:
            path[t] = H
        # Cholesky
        for i in range(N):
            for j in range(i + 1):
                s = H[i, j]
                for k in range(j):
                    s -= L[i, k] * L[j, k]
                if i == j:
                    if not (s > 0.0) or not np.isfinite(s):
                        return -np.inf, path, t
                    L[i, i] = math.sqrt(s)
                else:
                    L[i, j] = s / L[j, j]
        logdet = 0.0
        for i in range(N):
            logdet += 2.0 * math.log(L[i, i])
            s = eps[t, i]
            for k in range(i):
                s -= L[i, k] * y[k]
            y[i] = s / L[i, i]
        quad = 0.0
        for i in range(N):
            quad += y[i] * y[i]
        ll += -0.5 * (N * LOG2PI + logdet + quad)
    return ll, path, -1


def _as_matrix(returns) -> np.ndarray:
    E = np.asarray(returns, dtype=float)
    if E.ndim == 1:
        E = E[:, None]
    if E.ndim != 2:
        raise BekkError("returns must be a T x N matrix")
    if not np.all(np.isfinite(E)):
        raise BekkError("returns contain non-finite values")
    return np.ascontiguousarray(E)


def filter_covariance(params: BekkParams, returns, H0=None) -> np.ndarray:
    """Conditional covariance path (T x N x N) for demeaned returns.

    ``H0`` defaults to the sample covariance (1/T normalisation).
    """
    E = _as_matrix(returns)
    if E.shape[1] != params.n:
        raise BekkError(f"returns have {E.shape[1]} columns, parameters are {params.n}-dimensional")
    H0 = np.cov(E, rowvar=False, bias=True).reshape(params.n, params.n) if H0 is None else np.asarray(H0, float)
    _, path, bad = _bekk_kernel(params.C, params.A, params.B, E, H0, True)
    if bad >= 0:
        if not np.all(np.isfinite(path[bad])):
            raise BekkError(f"non-finite covariance at t={bad}")
        raise BekkError(f"covariance not positive definite at t={bad}")
    return path


def log_likelihood(params: BekkParams, returns, H0=None) -> float:
    """-1/2 sum(N ln 2pi + ln det H_t + e_t' H_t^{-1} e_t) on demeaned returns;
    ``-inf`` when some H_t is not positive definite."""
    E = _as_matrix(returns)
    H0 = np.cov(E, rowvar=False, bias=True).reshape(params.n, params.n) if H0 is None else np.asarray(H0, float)
    ll, _, _ = _bekk_kernel(params.C, params.A, params.B, E, H0, False)
    return float(ll)


def spectral_radius(params: BekkParams) -> float:
    """Largest eigenvalue modulus of ``kron(A, A) + kron(B, B)``."""
    M = np.kron(params.A, params.A) + np.kron(params.B, params.B)
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def _num_grad(f, x: np.ndarray, f0=None) -> np.ndarray:
    g = np.empty_like(x)
    for i in range(x.size):
        h = 1e-6 * max(1.0, abs(x[i]))
        up, dn = x.copy(), x.copy()
        up[i] += h
        dn[i] -= h
        g[i] = (f(up) - f(dn)) / (2 * h)
    return g


def fit(
    returns,
    *,
    columns: Sequence[str] = (),
    start: Optional[BekkParams] = None,
    maxiter: int = 500,
    gtol: float = 1e-8,
    std_errors: bool = True,
) -> BekkFit:
    """QML estimate of a full BEKK(1,1).

    The search runs on series rescaled to unit variance, starting from
    A = 0.3 I, B = 0.9 I and C'C = (1 - 0.3^2 - 0.9^2) * sample covariance,
    unless ``start`` is given (on the original scale).  Candidates whose
    covariance path loses positive definiteness are rejected by a penalty.
    """
    E_raw = _as_matrix(returns)
    T, N = E_raw.shape
    if T <= N:
        raise BekkError("need more observations than series")
    means = E_raw.mean(axis=0)
    E = E_raw - means
    sd = E.std(axis=0)
    if np.any(sd <= 0):
        raise BekkError("a series has zero variance")
    Es = np.ascontiguousarray(E / sd)
    S = np.cov(Es, rowvar=False, bias=True).reshape(N, N)

    if start is None:
        a, b = 0.3, 0.9
        p0 = BekkParams(lower_factor(S * (1 - a * a - b * b)), a * np.eye(N), b * np.eye(N))
    else:
        p0 = _rescale(start, sd, inverse=True)

    def negll(v):
        p = BekkParams.from_vector(v, N)
        ll, _, bad = _bekk_kernel(p.C, p.A, p.B, Es, S, False)
        if bad >= 0 or not np.isfinite(ll):
            return _PENALTY
        return -ll / T

    def objective(v):
        f0 = negll(v)
        if f0 >= _PENALTY:
            return f0, np.zeros_like(v)
        return f0, _num_grad(negll, v)

    v0 = p0.to_vector()
    if negll(v0) >= _PENALTY:
        raise BekkError("covariance filter fails at the starting point")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(objective, v0, jac=True, method="BFGS", options={"maxiter": maxiter, "gtol": gtol})
    v = res.x
    grad = _num_grad(negll, v)
    gnorm = float(np.max(np.abs(grad)))

    scaled = BekkParams.from_vector(v, N).canonical()
    params = _rescale(scaled, sd)
    ses = None
    if std_errors:
        ses = _standard_errors(negll, scaled, T, sd)
    path = filter_covariance(params, E)
    ll = log_likelihood(params, E)
    return BekkFit(
        params=params,
        log_likelihood=ll,
        covariance_path=path,
        spectral_radius=spectral_radius(params),
        converged=bool(gnorm <= 1e-5),
        means=means,
        last_residual=E[-1].copy(),
        iterations=int(res.nit),
        grad_norm=gnorm,
        std_errors=ses,
        columns=tuple(columns),
    )


def _rescale(p: BekkParams, sd: np.ndarray, inverse: bool = False) -> BekkParams:
    """Map parameters between unit-variance and original scales.

    With e = D e~ (D = diag(sd)): C = C~ D, A = D^-1 A~ D, B = D^-1 B~ D.
    """
    D = sd if not inverse else 1.0 / sd
    return BekkParams(p.C * D[None, :], p.A * D[None, :] / D[:, None], p.B * D[None, :] / D[:, None])


def _standard_errors(negll, scaled: BekkParams, T: int, sd: np.ndarray) -> Optional[BekkParams]:
    v = scaled.to_vector()
    d = v.size
    H = np.zeros((d, d))
    for j in range(d):
        h = 1e-4 * max(1.0, abs(v[j]))
        up, dn = v.copy(), v.copy()
        up[j] += h
        dn[j] -= h
        H[:, j] = (_num_grad(negll, up) - _num_grad(negll, dn)) / (2 * h)
    H = 0.5 * (H + H.T) * T
    try:
        np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        return None
    se = np.sqrt(np.diag(np.linalg.inv(H)))
    # elementwise scale map is linear and sign-free
    return _rescale(BekkParams.from_vector(se, scaled.n), sd)


def forecast_one_step(fit: BekkFit, latest_residuals=None) -> np.ndarray:
    """Diagonal of H_{T+1} = C'C + A'ee'A + B'H_T B.

    ``latest_residuals`` is the demeaned return vector of day T; it defaults
    to the last in-sample residual.
    """
    p = fit.params
    e = fit.last_residual if latest_residuals is None else np.asarray(latest_residuals, float).ravel()
    if e.size != p.n:
        raise BekkError(f"expected {p.n} residuals, got {e.size}")
    v = p.A.T @ e
    H = p.C.T @ p.C + np.outer(v, v) + p.B.T @ fit.covariance_path[-1] @ p.B
    d = np.diag(H).copy()
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise BekkError("non-positive variance forecast")
    return d


def standardized_residuals(fit: BekkFit, returns) -> np.ndarray:
    """L_t^{-1} e_t with L_t the Cholesky factor of H_t."""
    E = _as_matrix(returns) - fit.means
    out = np.empty_like(E)
    for t in range(E.shape[0]):
        L = np.linalg.cholesky(fit.covariance_path[t])
        out[t] = np.linalg.solve(L, E[t])
    return out


def simulate(params: BekkParams, T: int, seed: int | np.random.Generator = 0, burn: int = 500) -> np.ndarray:
    """Gaussian BEKK draws (T x N), started at the unconditional covariance
    when it exists."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    N = params.n
    CC = params.C.T @ params.C
    if spectral_radius(params) < 1:
        M = np.kron(params.A.T, params.A.T) + np.kron(params.B.T, params.B.T)
        H = np.linalg.solve(np.eye(N * N) - M, CC.reshape(-1)).reshape(N, N)
        H = 0.5 * (H + H.T)
    else:
        H = CC.copy()
    out = np.empty((T + burn, N))
    e = np.zeros(N)
    for t in range(T + burn):
        if t > 0:
            v = params.A.T @ e
            H = CC + np.outer(v, v) + params.B.T @ H @ params.B
        e = np.linalg.cholesky(H) @ rng.standard_normal(N)
        out[t] = e
    return out[burn:]
