"""Estimator-style front end: ``fit`` a count series, then query predictive
probabilities and their confidence intervals.

>>> from countpred import ParametricPredictor
>>> est = ParametricPredictor("poi-inar").fit([0, 1, 2, 1, 0, 0, 1, 3, 2, 1, 1, 0])
>>> 0 <= est.predict_proba({1, 2}) <= 1
True
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .asymptotic import delta_ci_param, nonparam_ci
from .bootstrap import NONPARAMETRIC, BootstrapScenario, run_bootstrap
from .estimation import _mean_loglik, TransitionCounts, fit_cml
from .models import empirical_transition_model, get_family
from .prediction import _as_set, model_predictive_prob, predictive_prob_nonparam
from .series import CountSeries, as_series

__all__ = ["check_count_series", "ParametricPredictor", "NonparametricPredictor"]

_CI_METHODS = ("asymptotic", "bootstrap-basic", "bootstrap-percentile")


def check_count_series(X, min_length: int = 2) -> CountSeries:
    """Validate ``X`` as a univariate count series.

    Accepts a :class:`CountSeries`, a 1-D array-like or an ``(n, 1)``
    column. Values must be non-negative integers.
    """
    if isinstance(X, CountSeries):
        series = X
    else:
        arr = np.asarray(X)
        if arr.ndim == 2 and arr.shape[1] == 1:
            arr = arr[:, 0]
        if arr.ndim != 1:
            raise ValueError(f"expected a univariate series, got shape {arr.shape}")
        series = as_series(arr)
    if len(series) < min_length:
        raise ValueError(f"need at least {min_length} observations, got {len(series)}")
    return series


def _mode(row: dict) -> int:
    return min(row, key=lambda s: (-row[s], s))


class _PredictorBase(BaseEstimator):
    def _x_n(self, x_n):
        check_is_fitted(self, "series_")
        return self.series_.last if x_n is None else int(x_n)

    def bootstrap(self, S, x_n=None, B=500, delta=0.05, generator=None, seed=None,
                  n_jobs=1):
        """Run the bootstrap with this estimator; returns a BootstrapResult."""
        x_n = self._x_n(x_n)
        estimator = self._estimator_name
        scenario = BootstrapScenario(estimator if generator is None else generator, estimator)
        seed = self.random_state if seed is None else seed
        return run_bootstrap(self.series_, scenario, S, x_n, B=B, delta=delta,
                             seed=0 if seed is None else seed, n_jobs=n_jobs,
                             point_fit=getattr(self, "fit_result_", None))

    def _bootstrap_ci(self, method, S, x_n, delta, B, generator, seed):
        res = self.bootstrap(S, x_n, B=B, delta=delta, generator=generator, seed=seed)
        return res.ci_basic if method == "bootstrap-basic" else res.ci_percentile


class ParametricPredictor(_PredictorBase):
    """Plug-in predictor for a parametric INAR(1)/INARCH(1) family.

    Parameters
    ----------
    family : {"poi-inar", "nb-inar", "geo-inar", "inarch"}
    multistarts : int
        Random restarts of the likelihood optimizer.
    tol : float
        Optimizer tolerance on the mean log-likelihood.
    random_state : int, optional
        Seed for restarts and bootstrap streams.

    Attributes
    ----------
    fit_result_ : FitResult
    theta_ : ndarray
    model_ : fitted model
    """

    def __init__(self, family="poi-inar", multistarts=5, tol=1e-10, random_state=None):
        self.family = family
        self.multistarts = multistarts
        self.tol = tol
        self.random_state = random_state

    @property
    def _estimator_name(self) -> str:
        return get_family(self.family).name

    def fit(self, X, y=None):
        self.series_ = check_count_series(X, min_length=10)
        seed = 0 if self.random_state is None else self.random_state
        self.fit_result_ = fit_cml(self.family, self.series_, multistarts=self.multistarts,
                                   tol=self.tol, seed=seed)
        self.theta_ = self.fit_result_.theta
        self.params_ = self.fit_result_.params
        self.model_ = self.fit_result_.model
        return self

    def predict_proba(self, S, x_n=None) -> float:
        """P(X_{n+1} in S | X_n = x_n) under the fitted model."""
        x_n = self._x_n(x_n)
        return model_predictive_prob(self.model_, x_n, S)

    def predict(self, x_n=None) -> int:
        """Most probable next count (a coherent point forecast)."""
        x_n = self._x_n(x_n)
        upper = self.model_.row_support(x_n)
        row = self.model_.transition_row(x_n, upper)
        return int(np.argmax(row))

    def confidence_interval(self, S, x_n=None, method="asymptotic", delta=0.05, B=500,
                            generator=None, seed=None, clip=False):
        if method not in _CI_METHODS:
            raise ValueError(f"method must be one of {_CI_METHODS}")
        x_n = self._x_n(x_n)
        if method == "asymptotic":
            return delta_ci_param(self.fit_result_, x_n, S, delta, clip=clip)[0]
        return self._bootstrap_ci(method, S, x_n, delta, B, generator, seed)

    def score(self, X, y=None) -> float:
        """Mean conditional log-likelihood per transition of ``X``."""
        check_is_fitted(self, "theta_")
        series = check_count_series(X)
        return _mean_loglik(get_family(self.family), self.theta_,
                            TransitionCounts.from_series(series))

    def sample(self, n, random_state=None) -> CountSeries:
        check_is_fitted(self, "model_")
        return self.model_.simulate(n, rng=np.random.default_rng(random_state))


class NonparametricPredictor(_PredictorBase):
    """Relative-frequency predictor from observed one-step transitions.

    Parameters
    ----------
    bandwidth : int or "auto"
        Bartlett bandwidth of the asymptotic interval; ``"auto"`` uses
        ceil(n^(1/3)).
    random_state : int, optional
    """

    _estimator_name = NONPARAMETRIC

    def __init__(self, bandwidth="auto", random_state=None):
        self.bandwidth = bandwidth
        self.random_state = random_state

    def fit(self, X, y=None):
        self.series_ = check_count_series(X)
        self.transition_model_ = empirical_transition_model(self.series_)
        return self

    def predict_proba(self, S, x_n=None) -> float:
        x_n = self._x_n(x_n)
        return predictive_prob_nonparam(self.series_, x_n, _as_set(S)).value

    def predict(self, x_n=None) -> int:
        return _mode(self.transition_model_.row(self._x_n(x_n)))

    def confidence_interval(self, S, x_n=None, method="asymptotic", delta=0.05, B=500,
                            generator=None, seed=None, clip=False):
        if method not in _CI_METHODS:
            raise ValueError(f"method must be one of {_CI_METHODS}")
        x_n = self._x_n(x_n)
        if method == "asymptotic":
            return nonparam_ci(self.series_, x_n, S, delta, self.bandwidth, clip=clip)
        return self._bootstrap_ci(method, S, x_n, delta, B, generator, seed)

    def sample(self, n, random_state=None) -> CountSeries:
        check_is_fitted(self, "transition_model_")
        return self.transition_model_.simulate(n, rng=np.random.default_rng(random_state))
