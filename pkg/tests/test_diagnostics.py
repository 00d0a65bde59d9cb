import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from statsmodels.stats.diagnostic import acorr_ljungbox, het_arch
from statsmodels.stats.stattools import jarque_bera as sm_jarque_bera
from statsmodels.tsa.stattools import adfuller

from energyvol import garch
from energyvol.diagnostics import (
    ADF_CRITICAL_VALUES,
    DiagnosticsError,
    adf,
    arch_lm,
    chi2_sf,
    describe,
    jarque_bera,
    ljung_box_squared,
)


# --- describe -------------------------------------------------------------


def test_describe_small_vector():
    s = describe([1.0, 2.0, 3.0])
    assert s.mean == 2.0 and s.std == 1.0
    assert (s.min, s.max) == (1.0, 3.0)
    assert s.skewness == pytest.approx(0.0, abs=1e-15)


def test_describe_constant_vector_has_no_higher_moments():
    s = describe([4.2] * 10)
    assert s.std == 0.0
    assert s.skewness is None and s.excess_kurtosis is None


def test_describe_standard_normal_sample():
    x = np.random.default_rng(7).standard_normal(100_000)
    s = describe(x)
    assert abs(s.mean) < 0.02 and abs(s.std - 1) < 0.02
    assert abs(s.excess_kurtosis) < 0.1


def test_describe_needs_two_points():
    with pytest.raises(DiagnosticsError):
        describe([1.0])


# --- Jarque-Bera ----------------------------------------------------------


def test_jarque_bera_is_zero_for_normal_moments():
    # symmetric three-point law with kurtosis exactly 3: P(0) = 2/3, P(+-sqrt 3) = 1/6 each
    x = np.array([0.0] * 4 + [math.sqrt(3.0), -math.sqrt(3.0)])
    x = np.tile(x, 3)
    r = jarque_bera(x)
    assert r.statistic == pytest.approx(0.0, abs=1e-12)
    assert r.p_value == pytest.approx(1.0, abs=1e-12)


def test_jarque_bera_kurtosis_six_gives_225():
    # P(0) = 5/6, P(+-sqrt 3) = 1/12 each: variance 1/2, fourth moment 3/2, kurtosis 6
    x = np.array([0.0] * 10 + [math.sqrt(3.0), -math.sqrt(3.0)])
    x = np.tile(x, 50)
    assert x.size == 600
    r = jarque_bera(x)
    assert r.statistic == pytest.approx(225.0, rel=1e-12)
    assert r.p_value == pytest.approx(math.exp(-225.0 / 2), rel=1e-9)


def test_jarque_bera_matches_statsmodels(rng):
    x = rng.standard_t(5, size=777)
    ref = sm_jarque_bera(x)
    r = jarque_bera(x)
    assert r.statistic == pytest.approx(ref[0], rel=1e-10)
    assert r.p_value == pytest.approx(ref[1], rel=1e-8, abs=1e-300)


def test_jarque_bera_detects_heavy_tails():
    x = np.random.default_rng(3).standard_t(3, size=5000)
    assert jarque_bera(x).p_value < 0.01


def test_jarque_bera_rejects_constant_input():
    with pytest.raises(DiagnosticsError):
        jarque_bera(np.ones(20))


# --- Ljung-Box on squares ---------------------------------------------------


def test_ljung_box_matches_statsmodels_on_squares(rng):
    z = rng.standard_normal(1500)
    ref = acorr_ljungbox(z**2, lags=[40], return_df=True)
    r = ljung_box_squared(z, 40)
    assert r.statistic == pytest.approx(float(ref["lb_stat"].iloc[0]), rel=1e-10)
    assert r.p_value == pytest.approx(float(ref["lb_pvalue"].iloc[0]), rel=1e-8)
    assert r.lag_order == 40


def test_ljung_box_size_under_iid_noise():
    rejections = 0
    for seed in range(500):
        z = np.random.default_rng(10_000 + seed).standard_normal(5000)
        rejections += ljung_box_squared(z, 40).p_value < 0.05
    assert abs(rejections / 500 - 0.05) <= 0.02


def test_ljung_box_zero_for_uncorrelated_squares():
    # alternating projections remove the lag-1..m sample autocorrelation of a
    # vector, which is then used as the squared residual series
    m, n = 3, 400
    v = np.random.default_rng(0).standard_normal(n)
    for _ in range(200):
        for k in range(1, m + 1):
            v = v - v.mean()
            c = v[k:] @ v[:-k] / (v @ v)
            v[k:] = v[k:] - 0.5 * c * v[:-k]
            v[:-k] = v[:-k] - 0.5 * c * v[k:]
    squares = v - v.min() + 1.0
    assert ljung_box_squared(np.sqrt(squares), m).statistic < 1e-6


def test_ljung_box_detects_strong_arch():
    spec = garch.GarchSpec("GARCH11")
    r, s2 = garch.simulate(spec, garch.GarchParams(0.0, 0.1, 0.5, 0.3), 3000, seed=11)
    assert ljung_box_squared(r, 40).p_value < 0.01


def test_ljung_box_lag_must_be_below_n():
    with pytest.raises(DiagnosticsError):
        ljung_box_squared(np.arange(10.0), 10)


# --- ARCH-LM ----------------------------------------------------------------


def test_arch_lm_matches_statsmodels(rng):
    e = rng.standard_normal(900)
    lm, lmp, _, _ = het_arch(e, nlags=5)
    r = arch_lm(e, 5)
    assert r.statistic == pytest.approx(lm, rel=1e-9)
    assert r.p_value == pytest.approx(lmp, rel=1e-7)


def test_arch_lm_rarely_rejects_iid_noise():
    # at n = 100 the asymptotic LM test is slightly conservative (about 7% at the
    # 10% level), which is what makes a 90% non-rejection rate attainable
    ok = sum(arch_lm(np.random.default_rng(500 + s).standard_normal(100), 5).p_value > 0.10
             for s in range(200))
    assert ok >= 180


def test_arch_lm_detects_garch_effects():
    spec = garch.GarchSpec("GARCH11")
    r, _ = garch.simulate(spec, garch.GarchParams(0.0, 0.05, 0.3, 0.6), 3000, seed=5)
    assert arch_lm(r, 5).p_value < 0.01


def test_arch_lm_on_true_standardized_residuals():
    spec = garch.GarchSpec("GARCH11")
    ok = 0
    for s in range(20):
        r, s2 = garch.simulate(spec, garch.GarchParams(0.0, 0.05, 0.3, 0.6), 2000, seed=900 + s)
        ok += arch_lm(r / np.sqrt(s2), 5).p_value > 0.10
    assert ok >= 15


def test_arch_lm_needs_enough_observations():
    with pytest.raises(DiagnosticsError):
        arch_lm(np.random.default_rng(0).standard_normal(10), 5)


# --- ADF --------------------------------------------------------------------


def test_adf_critical_values():
    assert ADF_CRITICAL_VALUES == {0.01: -3.43, 0.05: -2.86, 0.10: -2.57}


def test_adf_matches_statsmodels_lag_and_statistic(rng):
    x = np.cumsum(rng.standard_normal(600)) + 0.3 * rng.standard_normal(600)
    r = adf(x, 8)
    stat, _, usedlag, *_ = adfuller(x, maxlag=8, regression="c", autolag="AIC")
    assert r.lag_order == usedlag
    assert r.statistic == pytest.approx(stat, rel=1e-8)
    fixed = adfuller(x, maxlag=r.lag_order, regression="c", autolag=None)[0]
    assert r.statistic == pytest.approx(fixed, rel=1e-8)
    assert r.p_value is None


def test_adf_random_walk_size():
    fails = sum(not adf(np.cumsum(np.random.default_rng(2000 + s).standard_normal(2000)), 10).verdicts[0.05]
                for s in range(200))
    assert fails >= 180


def test_adf_iid_noise_power():
    rejects = sum(adf(np.random.default_rng(3000 + s).standard_normal(2000), 10).verdicts[0.01]
                  for s in range(200))
    assert rejects >= 190


def test_adf_rejects_stationary_ar1():
    rng = np.random.default_rng(17)
    e = rng.standard_normal(2000)
    x = np.empty(2000)
    x[0] = e[0]
    for t in range(1, 2000):
        x[t] = 0.5 * x[t - 1] + e[t]
    assert adf(x, 10).verdicts[0.05]


def test_adf_verdicts_follow_statistic(rng):
    r = adf(np.cumsum(rng.standard_normal(300)), 4)
    for level, crit in ADF_CRITICAL_VALUES.items():
        assert r.verdicts[level] == (r.statistic < crit)


def test_adf_length_precondition():
    with pytest.raises(DiagnosticsError):
        adf(np.arange(15.0), 5)


# --- chi-square tail and invariances ----------------------------------------

CHI2_POINTS = [(0.5, 1), (1.0, 1), (3.84, 1), (6.63, 1), (0.1, 2), (2.0, 2), (5.99, 2), (13.8, 2),
               (1.0, 3), (7.81, 3), (4.0, 5), (11.07, 5), (20.0, 5), (2.0, 10), (18.3, 10),
               (30.0, 10), (40.0, 40), (55.76, 40), (63.69, 40), (100.0, 40)]


@pytest.mark.parametrize("x,df", CHI2_POINTS)
def test_chi2_survival_against_incomplete_gamma(x, df):
    mpmath.mp.dps = 40
    ref = float(mpmath.gammainc(mpmath.mpf(df) / 2, mpmath.mpf(x) / 2, mpmath.inf, regularized=True))
    assert abs(chi2_sf(x, df) - ref) <= 1e-10


@given(st.floats(0, 200), st.floats(0, 200), st.integers(1, 60))
def test_chi2_survival_is_monotone(a, b, df):
    lo, hi = min(a, b), max(a, b)
    assert chi2_sf(hi, df) <= chi2_sf(lo, df)
    assert 0.0 <= chi2_sf(hi, df) <= 1.0


@given(st.floats(0.01, 100), st.floats(-50, 50), st.integers(0, 2**31))
def test_statistics_invariant_under_affine_rescaling(scale, shift, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_t(6, size=400)
    jb1, jb2 = jarque_bera(x).statistic, jarque_bera(scale * x + shift).statistic
    assert jb2 == pytest.approx(jb1, rel=1e-6, abs=1e-9)
    lb1, lb2 = ljung_box_squared(x, 10).statistic, ljung_box_squared(scale * x, 10).statistic
    assert lb2 == pytest.approx(lb1, rel=1e-6, abs=1e-9)
    w = np.cumsum(x)
    a1, a2 = adf(w, 3), adf(scale * w, 3)
    assert a2.lag_order == a1.lag_order
    assert a2.statistic == pytest.approx(a1.statistic, rel=1e-6)
