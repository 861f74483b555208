import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from countpred.asymptotic import (
    bartlett_longrun_cov,
    delta_ci_param,
    grad_predictive_inarch,
    grad_predictive_poi_inar,
    longrun_sigma,
    nonparam_ci,
    predictive_gradient,
    z_quantile,
)
from countpred.estimation import fit_cml
from countpred.exceptions import InsufficientVisits, ZeroGradient
from countpred.prediction import model_predictive_prob
from countpred.models import get_family
from countpred.series import CountSeries, PredictionSet

S12 = PredictionSet.finite([1, 2])


def _fd(family, theta, x_n, S, h=1e-6):
    fam = get_family(family)
    theta = np.asarray(theta, float)
    out = []
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h * (1 + abs(theta[i]))
        out.append((model_predictive_prob(fam.model(theta + e), x_n, S)
                    - model_predictive_prob(fam.model(theta - e), x_n, S)) / (2 * e[i]))
    return np.array(out)


def test_z_quantile():
    assert z_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-15)
    assert z_quantile(0.5) == 0.0
    with pytest.raises(ValueError):
        z_quantile(1.0)


@given(alpha=st.floats(0.05, 0.95), lam=st.floats(0.2, 4.0), x_n=st.integers(0, 8))
def test_poi_inar_gradient_matches_fd(alpha, lam, x_n):
    g = grad_predictive_poi_inar(alpha, lam, x_n, S12)
    np.testing.assert_allclose(g, _fd("poi-inar", [alpha, lam], x_n, S12), rtol=1e-6, atol=1e-9)


@given(beta=st.floats(0.2, 4.0), alpha=st.floats(0.05, 0.95), x_n=st.integers(0, 8))
def test_inarch_gradient_matches_fd(beta, alpha, x_n):
    g = grad_predictive_inarch(beta, alpha, x_n, S12)
    np.testing.assert_allclose(g, _fd("inarch", [beta, alpha], x_n, S12), rtol=1e-6, atol=1e-9)
    assert g[1] == pytest.approx(x_n * g[0])


def test_ray_gradient_is_minus_complement():
    g_ray = grad_predictive_poi_inar(0.4, 1.2, 3, PredictionSet.ray(2))
    g_fin = grad_predictive_poi_inar(0.4, 1.2, 3, PredictionSet.finite([0, 1]))
    np.testing.assert_allclose(g_ray, -g_fin)


def test_numeric_gradient_families():
    for family, theta in [("nb-inar", [0.5, 2.0, 2 / 3]), ("geo-inar", [0.5, 0.5])]:
        g = predictive_gradient(family, theta, 2, S12)
        np.testing.assert_allclose(g, _fd(family, theta, 2, S12, h=1e-5), rtol=1e-4,
                                   atol=1e-9)


def test_delta_ci_recomputed_by_hand(inarch_series):
    fit = fit_cml("inarch", inarch_series)
    x_n = inarch_series.last
    ci, comps = delta_ci_param(fit, x_n, S12, 0.05)
    g = grad_predictive_inarch(*fit.theta, x_n, S12)
    var = g @ np.linalg.solve(fit.info_matrix, g)
    half = norm.ppf(0.975) * math.sqrt(var / (len(inarch_series) - 1))
    point = model_predictive_prob(fit.model, x_n, S12)
    assert ci.lower == pytest.approx(point - half, rel=1e-10)
    assert ci.upper == pytest.approx(point + half, rel=1e-10)
    assert comps.sigma2 == pytest.approx(var, rel=1e-10)
    assert ci.method == "asymptotic-parametric"


def test_full_support_gives_zero_gradient(poi_series):
    fit = fit_cml("poi-inar", poi_series)
    with pytest.raises(ZeroGradient):
        delta_ci_param(fit, 2, PredictionSet.ray(0))


def test_bartlett_matches_loop_oracle():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(60, 2))
    L = 4
    zc = z - z.mean(axis=0)
    oracle = np.zeros((2, 2))
    for h in range(-L, L + 1):
        w = 1 - abs(h) / (L + 1)
        for t in range(60):
            if 0 <= t - h < 60:
                oracle += w * np.outer(zc[t], zc[t - h]) / 60
    np.testing.assert_allclose(bartlett_longrun_cov(z, L), oracle, atol=1e-12)


def test_zero_bandwidth_variance_closed_form(poi_series):
    # without lags the ratio variance reduces to p(1 - p) / q
    comps = longrun_sigma(poi_series, 1, S12, bandwidth=0)
    p = comps.q_hat_S / comps.q_hat
    assert comps.sigma2 == pytest.approx(p * (1 - p) / comps.q_hat, rel=1e-10)
    np.testing.assert_array_equal(comps.sigma_matrix, comps.sigma_matrix.T)


def test_default_bandwidth(poi_series):
    assert longrun_sigma(poi_series, 1, S12).bandwidth == math.ceil(500 ** (1 / 3))


def test_insufficient_visits():
    s = CountSeries(np.array([0, 1, 0, 1, 0, 1, 0, 5, 0, 1, 0, 1]))
    with pytest.raises(InsufficientVisits):
        nonparam_ci(s, 5, S12)


@pytest.fixture(scope="module")
def poi_fit(poi_series):
    return fit_cml("poi-inar", poi_series)


@given(d1=st.floats(0.01, 0.5), d2=st.floats(0.01, 0.5))
def test_asymptotic_intervals_nest_in_delta(poi_series, poi_fit, d1, d2):
    lo, hi = sorted((d1, d2))
    wide, _ = delta_ci_param(poi_fit, 1, S12, lo)
    narrow, _ = delta_ci_param(poi_fit, 1, S12, hi)
    assert wide.lower <= narrow.lower and narrow.upper <= wide.upper
    wide = nonparam_ci(poi_series, 1, S12, lo)
    narrow = nonparam_ci(poi_series, 1, S12, hi)
    assert wide.lower <= narrow.lower and narrow.upper <= wide.upper
