import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from countpred.exceptions import TruncationTooTight
from countpred.models import InarchModel, InarModel, Poisson, empirical_transition_model
from countpred.prediction import (
    hstep_predictive_prob,
    model_predictive_prob,
    predictive_prob_from_row,
    predictive_prob_nonparam,
    predictive_prob_nonparam_order_p,
    predictive_prob_param,
)
from countpred.series import CountSeries, PredictionSet

EXAMPLE_ROW = {0: 0.58, 1: 0.2, 2: 0.11, 3: 0.09, 4: 0.01, 5: 0.01}

# (series, x_n, S, hand-counted value, visited)
HAND_COUNTED = [
    ([0, 1, 0, 1, 1, 2, 0, 1], 1, {0}, 1 / 3, True),
    ([0, 1, 0, 1, 1, 2, 0, 1], 1, {1, 2}, 2 / 3, True),
    ([2, 2, 2, 3, 2, 2], 2, {2}, 3 / 4, True),
    ([2, 2, 2, 3, 2, 2], 2, ">=3", 1 / 4, True),
    ([0, 0, 0, 0, 1], 1, {0}, 0.0, False),
    ([3, 0, 3, 1, 3, 3, 2, 3], 3, {0, 1}, 1 / 2, True),
    ([3, 0, 3, 1, 3, 3, 2, 3], 3, {3}, 1 / 4, True),
    ([1, 2, 3, 1, 2, 1], 1, {2}, 1.0, True),
    ([1, 2, 3, 1, 2, 1], 1, {1}, 0.0, True),
]


@pytest.mark.parametrize("S,value", [
    ({1, 2, 3}, 0.40), ({0, 1, 2}, 0.89), ({0, 1, 2, 4, 5}, 0.91), ({0, 1, 2, 3}, 0.98),
])
def test_example_row_coverages(S, value):
    assert predictive_prob_from_row(EXAMPLE_ROW, PredictionSet.finite(S)) == pytest.approx(value)


def test_row_with_excess_mass_rejected():
    with pytest.raises(ValueError):
        predictive_prob_from_row({0: 0.7, 1: 0.5}, PredictionSet.finite([0]))


@pytest.mark.parametrize("values,x_n,S,expected,visited", HAND_COUNTED)
def test_nonparam_hand_counted(values, x_n, S, expected, visited):
    S = PredictionSet.parse(S) if isinstance(S, str) else PredictionSet.finite(S)
    est = predictive_prob_nonparam(CountSeries(np.array(values)), x_n, S)
    assert est.value == expected
    assert est.support_flag is visited


def test_order_p_hand_counted():
    s = CountSeries(np.array([0, 1, 0, 1, 0, 1, 1]))
    est = predictive_prob_nonparam_order_p(s, (0, 1), PredictionSet.finite([1]))
    assert est.value == pytest.approx(1 / 3)
    # p = 1 reduces to the first-order estimator
    one = predictive_prob_nonparam_order_p(s, (1,), PredictionSet.finite([0]))
    assert one.value == predictive_prob_nonparam(s, 1, PredictionSet.finite([0])).value


def test_param_ray_equals_complement(poi_inar):
    ray = model_predictive_prob(poi_inar, 3, PredictionSet.ray(2))
    fin = model_predictive_prob(poi_inar, 3, PredictionSet.finite([0, 1]))
    assert ray == pytest.approx(1 - fin, abs=1e-15)
    assert model_predictive_prob(poi_inar, 3, PredictionSet.ray(0)) == 1.0


def test_param_value_closed_form():
    # x_n = 0: only innovations matter, P({1, 2}) = e^-1 (1 + 1/2)
    est = predictive_prob_param("poi-inar", [0.5, 1.0], 0, PredictionSet.finite([1, 2]))
    assert est.value == pytest.approx(1.5 * np.exp(-1))


def test_empirical_chain_agrees_with_nonparam():
    s = CountSeries(np.array([0, 1, 0, 1, 1, 2, 0, 1, 2, 2, 1]))
    chain = empirical_transition_model(s)
    for x_n in (0, 1, 2):
        for S in ([0], [1, 2], [2]):
            S = PredictionSet.finite(S)
            assert model_predictive_prob(chain, x_n, S) == pytest.approx(
                predictive_prob_nonparam(s, x_n, S).value)


_sets = st.sets(st.integers(0, 12), max_size=6)


@given(alpha=st.floats(0.05, 0.95), lam=st.floats(0.1, 3.0), x_n=st.integers(0, 8),
       A=_sets, B=_sets)
def test_param_additive_and_monotone(alpha, lam, x_n, A, B):
    model = InarModel(alpha, Poisson(lam))
    p = lambda s: model_predictive_prob(model, x_n, PredictionSet.finite(s))  # noqa: E731
    assert p(A | B) == pytest.approx(p(A) + p(B - A), abs=1e-12)
    assert p(A) <= p(A | B) + 1e-12
    assert 0.0 <= p(A) <= 1.0


@given(values=st.lists(st.integers(0, 4), min_size=3, max_size=40), x_n=st.integers(0, 4),
       A=st.sets(st.integers(0, 5)), B=st.sets(st.integers(0, 5)))
def test_nonparam_additive_and_monotone(values, x_n, A, B):
    s = CountSeries(np.array(values))
    p = lambda S: predictive_prob_nonparam(s, x_n, PredictionSet.finite(S)).value  # noqa: E731
    assert p(A | B) == pytest.approx(p(A) + p(B - A), abs=1e-12)
    assert p(A) <= p(A | B) + 1e-12


@given(beta=st.floats(0.2, 3.0), alpha=st.floats(0.0, 0.9), x_n=st.integers(0, 10),
       S=st.sets(st.integers(0, 15), min_size=1, max_size=5))
def test_hstep_one_step_matches_direct(beta, alpha, x_n, S):
    model = InarchModel(beta, alpha)
    S = PredictionSet.finite(S)
    h = hstep_predictive_prob(model, x_n, [S])
    assert h.value == pytest.approx(model_predictive_prob(model, x_n, S), abs=1e-9)
    assert h.tail_bound <= 1e-6


def test_hstep_two_steps_against_explicit_sum(poi_inar):
    S1, S2 = PredictionSet.finite([1, 2]), PredictionSet.finite([0, 1])
    explicit = sum(poi_inar.transition_prob(2, y) * poi_inar.transition_prob(y, z)
                   for y in (1, 2) for z in (0, 1))
    h = hstep_predictive_prob(poi_inar, 2, [S1, S2])
    assert h.value == pytest.approx(explicit, rel=1e-12)


def test_hstep_truncation_check(poi_inar):
    with pytest.raises(TruncationTooTight):
        hstep_predictive_prob(poi_inar, 2, [PredictionSet.ray(0)] * 2, K=3)
