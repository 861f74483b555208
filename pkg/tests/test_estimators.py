import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from countpred.estimation import fit_cml
from countpred.estimators import NonparametricPredictor, ParametricPredictor, check_count_series
from countpred.prediction import predictive_prob_nonparam
from countpred.series import PredictionSet

S12 = PredictionSet.finite([1, 2])


def test_check_count_series_shapes():
    assert check_count_series([[1], [2], [3]]).values.tolist() == [1, 2, 3]
    with pytest.raises(ValueError):
        check_count_series(np.ones((3, 2)))
    with pytest.raises(ValueError):
        check_count_series([1])


def test_params_and_clone():
    est = ParametricPredictor("inarch", multistarts=2, random_state=3)
    assert est.get_params() == {"family": "inarch", "multistarts": 2, "tol": 1e-10,
                                "random_state": 3}
    assert clone(est).get_params() == est.get_params()
    est.set_params(family="poi-inar")
    assert est.family == "poi-inar"


def test_unfitted_raises():
    with pytest.raises(NotFittedError):
        ParametricPredictor().predict_proba(S12)


def test_parametric_predictor_matches_functional_api(poi_series):
    est = ParametricPredictor("poi-inar", random_state=0).fit(poi_series.values)
    fit = fit_cml("poi-inar", poi_series, seed=0)
    np.testing.assert_array_equal(est.theta_, fit.theta)
    p = est.predict_proba(S12)
    assert p == pytest.approx(est.predict_proba({1, 2}, x_n=poi_series.last))
    ci = est.confidence_interval(S12)
    assert ci.lower < p < ci.upper
    assert est.score(poi_series) == pytest.approx(fit.loglik / (len(poi_series) - 1))
    assert isinstance(est.predict(), int)
    assert len(est.sample(50, random_state=1)) == 50


def test_parametric_bootstrap_interval(poi_series):
    est = ParametricPredictor("poi-inar", random_state=0).fit(poi_series)
    ci = est.confidence_interval(S12, method="bootstrap-percentile", B=100, generator="npara")
    assert 0 <= ci.lower <= ci.upper <= 1


def test_nonparametric_predictor(poi_series):
    est = NonparametricPredictor().fit(poi_series)
    assert est.predict_proba(S12, x_n=1) == predictive_prob_nonparam(poi_series, 1, S12).value
    ci = est.confidence_interval(S12, x_n=1)
    assert ci.method == "asymptotic-nonparametric"
    boot = est.confidence_interval(S12, x_n=1, method="bootstrap-basic", B=100)
    assert boot.method == "bootstrap-basic"
    row = est.transition_model_.row(1)
    assert est.predict(1) == max(row, key=row.get)
    with pytest.raises(ValueError):
        est.confidence_interval(S12, method="wald")
