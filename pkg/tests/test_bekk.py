import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from energyvol import bekk, garch
from energyvol.bekk import BekkError, BekkParams

LN2PI = math.log(2 * math.pi)


def oracle_path(p: BekkParams, E, H0):
    """Direct matrix recursion and likelihood as a reference."""
    H = [np.array(H0, float)]
    for t in range(1, len(E)):
        e = E[t - 1][:, None]
        H.append(p.C.T @ p.C + p.A.T @ e @ e.T @ p.A + p.B.T @ H[-1] @ p.B)
    ll = -0.5 * sum(len(E[0]) * LN2PI + np.linalg.slogdet(h)[1] + e @ np.linalg.solve(h, e)
                    for h, e in zip(H, E))
    return np.array(H), ll


def random_params(rng, n, scale_a=0.35, scale_b=0.9):
    C = np.tril(rng.normal(scale=0.3, size=(n, n)))
    C[np.diag_indices(n)] = np.abs(C[np.diag_indices(n)]) + 0.1
    A = rng.normal(scale=0.1, size=(n, n)) + scale_a * np.eye(n)
    B = rng.normal(scale=0.05, size=(n, n)) + scale_b * np.eye(n)
    return BekkParams(C, A, B)


def test_no_dynamics_gives_constant_covariance(rng):
    C = np.array([[1.0, 0.0], [0.4, 0.5]])
    p = BekkParams(C, np.zeros((2, 2)), np.zeros((2, 2)))
    H = bekk.filter_covariance(p, rng.normal(size=(20, 2)))
    for t in range(1, 20):
        np.testing.assert_array_equal(H[t], C.T @ C)


@given(st.floats(0.01, 1.0), st.floats(0.0, 0.6), st.floats(0.0, 0.75), st.integers(0, 2**32 - 1))
def test_scalar_case_is_garch11(c, a, b, seed):
    r = np.random.default_rng(seed).standard_t(5, size=300)
    e = r - r.mean()
    H = bekk.filter_covariance(BekkParams([[c]], [[a]], [[b]]), e[:, None])[:, 0, 0]
    g = garch.filter_variance(garch.GarchSpec("GARCH11"), garch.GarchParams(r.mean(), c * c, a * a, b * b), r)
    np.testing.assert_allclose(H, g.variance, rtol=1e-12)


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
def test_filter_matches_reference_recursion(seed, n):
    rng = np.random.default_rng(seed)
    p = random_params(rng, n)
    E = rng.normal(size=(60, n))
    H0 = np.cov(E, rowvar=False, bias=True)
    H_ref, ll_ref = oracle_path(p, E, H0)
    np.testing.assert_allclose(bekk.filter_covariance(p, E), H_ref, rtol=1e-12, atol=1e-14)
    assert bekk.log_likelihood(p, E) == pytest.approx(ll_ref, rel=1e-11)


@given(st.integers(0, 2**32 - 1))
def test_every_covariance_is_positive_definite(seed):
    rng = np.random.default_rng(seed)
    p = random_params(rng, 2)
    assume(bekk.spectral_radius(p) < 1)
    E = rng.standard_t(4, size=(1000, 2))
    H = bekk.filter_covariance(p, E)
    np.testing.assert_array_equal(H, np.transpose(H, (0, 2, 1)))
    assert np.min(np.linalg.eigvalsh(H)) > 0


@pytest.mark.parametrize("a,b,rho", [(0.3, 0.9, 0.90), (0.0, 0.0, 0.0), (0.8, 0.8, 1.28)])
def test_spectral_radius_diagonal_examples(a, b, rho):
    p = BekkParams(np.eye(2), a * np.eye(2), b * np.eye(2))
    assert bekk.spectral_radius(p) == pytest.approx(rho, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_spectral_radius_matches_power_iteration(seed):
    rng = np.random.default_rng(seed)
    p = random_params(rng, 3)
    M = np.kron(p.A, p.A) + np.kron(p.B, p.B)
    # Gelfand's formula as an independent estimate
    k = 200
    est = np.linalg.norm(np.linalg.matrix_power(M / np.linalg.norm(M, 2), k), 2) ** (1 / k) * np.linalg.norm(M, 2)
    assert bekk.spectral_radius(p) == pytest.approx(est, rel=0.05)


@given(st.integers(0, 2**32 - 1), st.lists(st.booleans(), min_size=2, max_size=2))
def test_likelihood_invariant_under_sign_flips(seed, flips):
    rng = np.random.default_rng(seed)
    p = random_params(rng, 2)
    E = rng.normal(size=(200, 2))
    sa = -1.0 if flips[0] else 1.0
    sb = -1.0 if flips[1] else 1.0
    q = BekkParams(p.C, sa * p.A, sb * p.B)
    assert bekk.log_likelihood(q, E) == pytest.approx(bekk.log_likelihood(p, E), rel=1e-13)
    canon = q.canonical()
    np.testing.assert_array_equal(canon.A, p.A)
    np.testing.assert_array_equal(canon.B, p.B)


def test_stationary_path_has_no_trend():
    p = BekkParams(np.array([[0.2, 0.0], [0.05, 0.2]]), 0.3 * np.eye(2), 0.9 * np.eye(2))
    E = bekk.simulate(p, 20000, seed=5)
    v = bekk.filter_covariance(p, E)[:, 0, 0]
    first, second = v[:10000].mean(), v[10000:].mean()
    assert 0.5 < second / first < 2.0


def test_forecast_without_dynamics_is_cc():
    C = np.array([[0.5, 0.0], [0.2, 0.3]])
    p = BekkParams(C, np.zeros((2, 2)), np.zeros((2, 2)))
    f = bekk.BekkFit(p, 0.0, np.array([np.eye(2)]), 0.0, True, np.zeros(2), np.array([3.0, -1.0]))
    np.testing.assert_allclose(bekk.forecast_one_step(f), np.diag(C.T @ C), rtol=1e-15)


def test_scalar_forecast_matches_garch():
    c, a, b = 0.2, 0.3, 0.9
    f = bekk.BekkFit(BekkParams([[c]], [[a]], [[b]]), 0.0, np.array([[[1.7]]]), 0.0, True, np.zeros(1),
                     np.array([0.4]))
    g = garch.GarchFit(garch.GarchSpec("GARCH11"), garch.GarchParams(0.0, c * c, a * a, b * b), None, 0.0,
                       np.array([1.7]), np.zeros(1), True, 0, last_return=0.4)
    assert bekk.forecast_one_step(f)[0] == pytest.approx(garch.forecast_one_step(g), rel=1e-14)


@pytest.mark.parametrize("a12,rises", [(0.4, True), (0.0, False)])
def test_shock_spillover(a12, rises):
    A = np.array([[0.3, a12], [0.0, 0.3]])
    p = BekkParams(0.1 * np.eye(2), A, 0.5 * np.eye(2))
    f = bekk.BekkFit(p, 0.0, np.array([np.eye(2)]), 0.0, True, np.zeros(2), np.zeros(2))
    calm = bekk.forecast_one_step(f, [0.0, 0.0])
    shocked = bekk.forecast_one_step(f, [5.0, 0.0])
    spill = (A.T @ np.outer([5.0, 0.0], [5.0, 0.0]) @ A)[1, 1]
    assert (spill > 0) == rises
    assert (shocked[1] > calm[1]) == rises
    assert shocked[1] - calm[1] == pytest.approx(spill, abs=1e-14)


def test_recovers_diagonal_parameters_small_sample():
    truth = BekkParams(np.array([[0.3, 0.0], [0.1, 0.25]]), 0.3 * np.eye(2), 0.9 * np.eye(2))
    E = bekk.simulate(truth, 3000, seed=11)
    f = bekk.fit(E, std_errors=False)
    assert f.stationary and f.spectral_radius < 1
    np.testing.assert_allclose(np.diag(f.params.A), 0.3, atol=0.08)
    np.testing.assert_allclose(np.diag(f.params.B), 0.9, atol=0.05)
    assert np.all(np.diag(f.params.C) >= 0)
    assert np.min(np.linalg.eigvalsh(f.covariance_path)) > 0


def test_scalar_fit_agrees_with_garch_fit():
    r, _ = garch.simulate(garch.GarchSpec("GARCH11"), garch.GarchParams(0.0, 0.05, 0.08, 0.90), 3000, seed=21)
    b = bekk.fit(r[:, None], std_errors=False)
    g = garch.fit(garch.GarchSpec("GARCH11", fixed_mean=float(r.mean())), r)
    assert b.log_likelihood == pytest.approx(g.log_likelihood, abs=1e-4)
    c, a, bb = b.params.C[0, 0], b.params.A[0, 0], b.params.B[0, 0]
    np.testing.assert_allclose([c * c, a * a, bb * bb], [g.params.omega, g.params.alpha, g.params.beta], atol=1e-3)


def test_standardized_residuals_are_whitened():
    truth = BekkParams(np.array([[0.3, 0.0], [0.1, 0.25]]), 0.3 * np.eye(2), 0.9 * np.eye(2))
    E = bekk.simulate(truth, 400, seed=2)
    H = bekk.filter_covariance(truth, E - E.mean(axis=0))
    f = bekk.BekkFit(truth, 0.0, H, 0.9, True, E.mean(axis=0), E[-1] - E.mean(axis=0))
    z = bekk.standardized_residuals(f, E)
    L = np.linalg.cholesky(H)
    np.testing.assert_allclose(np.einsum("tij,tj->ti", L, z), E - E.mean(axis=0), atol=1e-12)


def test_parameter_validation():
    with pytest.raises(BekkError, match="lower triangular"):
        BekkParams(np.ones((2, 2)), np.eye(2), np.eye(2))
    with pytest.raises(BekkError):
        BekkParams(np.eye(2), np.eye(3), np.eye(2))


def test_non_finite_covariance_names_t():
    p = BekkParams(np.eye(2), 3.0 * np.eye(2), 3.0 * np.eye(2))
    with pytest.raises(BekkError, match=r"t=\d+"):
        bekk.filter_covariance(p, np.full((2000, 2), 100.0))
