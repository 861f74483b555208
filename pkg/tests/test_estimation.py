import numpy as np
import pytest
from scipy.optimize import minimize
from scipy.stats import binom, poisson

from countpred.estimation import (
    TransitionCounts,
    conditional_loglik,
    fit_cml,
    information_matrix,
)
from countpred.exceptions import DegenerateSeries, NonConvergence, ZeroLikelihood
from countpred.series import CountSeries

SERIES = CountSeries(np.array([1, 2, 1, 0, 0, 1, 3, 2, 2, 1, 0, 1, 2, 4, 3, 1, 1, 0, 2, 2,
                               1, 3, 2, 1, 0, 0, 1, 2, 3, 2]))


def _loop_loglik_poi_inar(alpha, lam, x):
    total = 0.0
    for a, b in zip(x[:-1], x[1:]):
        k = np.arange(min(a, b) + 1)
        total += np.log(np.sum(binom.pmf(k, a, alpha) * poisson.pmf(b - k, lam)))
    return total


def test_pair_counts_hand_counted():
    tc = TransitionCounts.from_series(CountSeries(np.array([0, 1, 0, 1, 1])))
    pairs = {(int(p), int(q)): int(c) for p, q, c in zip(tc.prev, tc.next, tc.counts)}
    assert pairs == {(0, 1): 2, (1, 0): 1, (1, 1): 1}


def test_loglik_matches_per_step_loop():
    x = SERIES.values
    for alpha, lam in [(0.3, 1.0), (0.6, 0.7)]:
        assert conditional_loglik("poi-inar", [alpha, lam], SERIES) == \
            pytest.approx(_loop_loglik_poi_inar(alpha, lam, x), rel=1e-12)
    beta, alpha = 0.8, 0.4
    oracle = np.sum(poisson.logpmf(x[1:], beta + alpha * x[:-1]))
    assert conditional_loglik("inarch", [beta, alpha], SERIES) == pytest.approx(oracle, rel=1e-12)


def test_zero_likelihood_reports_first_time_index(monkeypatch):
    # log-space kernels never underflow for these families, so force one
    # impossible transition (0 -> 4) to exercise the reporting path
    from countpred.models import InarchModel

    original = InarchModel.log_transition_matrix

    def patched(self, max_prev, max_next):
        out = original(self, max_prev, max_next).copy()
        out[0, 4] = -np.inf
        return out

    monkeypatch.setattr(InarchModel, "log_transition_matrix", patched)
    s = CountSeries(np.array([0, 1, 0, 0, 4, 0, 0, 4, 0, 1]))
    with pytest.raises(ZeroLikelihood) as info:
        conditional_loglik("inarch", [1.0, 0.5], s)
    assert (info.value.t, info.value.x_prev, info.value.x_next) == (5, 0, 4)


def test_fit_matches_brute_force_oracle():
    x = SERIES.values
    res = minimize(lambda th: -_loop_loglik_poi_inar(th[0], th[1], x), [0.4, 1.0],
                   method="Nelder-Mead", bounds=[(1e-4, 1 - 1e-4), (1e-4, 10)],
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 5000})
    fit = fit_cml("poi-inar", SERIES)
    assert fit.converged
    np.testing.assert_allclose(fit.theta, res.x, atol=1e-5)
    assert fit.loglik == pytest.approx(-res.fun, abs=1e-9)


def test_fit_recovers_parameters(poi_series, inarch_series):
    poi = fit_cml("poi-inar", poi_series)
    assert abs(poi.theta[0] - 0.5) < 0.1 and abs(poi.theta[1] - 1.0) < 0.2
    arch = fit_cml("inarch", inarch_series)
    assert abs(arch.theta[0] - 1.0) < 0.3 and abs(arch.theta[1] - 0.5) < 0.1
    assert arch.info_pd and poi.info_pd


def test_fit_is_seed_deterministic(poi_series):
    a = fit_cml("nb-inar", poi_series, seed=4)
    b = fit_cml("nb-inar", poi_series, seed=4)
    np.testing.assert_array_equal(a.theta, b.theta)


def test_fit_rejects_degenerate_series():
    with pytest.raises(DegenerateSeries):
        fit_cml("poi-inar", CountSeries(np.full(20, 2)))
    with pytest.raises(DegenerateSeries):
        fit_cml("poi-inar", CountSeries(np.array([1, 2, 3])))


def test_strict_fit_raises_on_iteration_cap(poi_series):
    with pytest.raises(NonConvergence):
        fit_cml("nb-inar", poi_series, multistarts=0, max_iter=1, strict=True)


def test_inarch_information_closed_form_vs_numeric(inarch_series):
    fit = fit_cml("inarch", inarch_series, compute_info=False)
    closed = information_matrix("inarch", fit.theta, inarch_series)
    numeric = information_matrix("inarch", fit.theta, inarch_series, method="numeric")
    np.testing.assert_allclose(closed, numeric, rtol=1e-4)
    # per-step oracle: J_t = X_t / lam_t^2 [[1, x], [x, x^2]]
    x = inarch_series.values.astype(float)
    lam = fit.theta[0] + fit.theta[1] * x[:-1]
    w = x[1:] / lam ** 2
    oracle = np.array([[w.sum(), (w * x[:-1]).sum()],
                       [(w * x[:-1]).sum(), (w * x[:-1] ** 2).sum()]]) / (len(x) - 1)
    np.testing.assert_allclose(closed, oracle, rtol=1e-12)


def test_information_is_symmetric_positive_definite(poi_series):
    fit = fit_cml("poi-inar", poi_series)
    info = fit.info_matrix
    np.testing.assert_array_equal(info, info.T)
    assert np.all(np.linalg.eigvalsh(info) > 0)


def test_fit_result_dict_has_params(poi_series):
    d = fit_cml("poi-inar", poi_series).to_dict()
    assert {"alpha", "lambda", "loglik", "info_alpha_lambda"} <= set(d)
