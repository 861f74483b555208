"""CLT-based confidence intervals for predictive probabilities.

Two constructions:

* parametric: delta method around the CML estimate,
  half-width z * sqrt(grad' I^-1 grad) / sqrt(n - 1);
* non-parametric: the ratio estimator Q_S / Q with a Bartlett-weighted
  long-run covariance of the indicator pair
  (1{X_{t+1} in S, X_t = x_n}, 1{X_t = x_n}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ndtri

from .estimation import FitResult
from .exceptions import InsufficientVisits, NonConvergence, SingularInformation, ZeroGradient
from .models import get_family
from .prediction import _as_set, model_predictive_prob, predictive_prob_nonparam
from .series import ConfidenceInterval, PredictionSet, as_series

__all__ = [
    "DeltaComponents",
    "LongRunComponents",
    "grad_predictive_poi_inar",
    "grad_predictive_inarch",
    "predictive_gradient",
    "z_quantile",
    "delta_ci_param",
    "longrun_sigma",
    "nonparam_ci",
]

MIN_VISITS = 5


def z_quantile(p: float) -> float:
    """Standard normal quantile: P(Z <= z_quantile(p)) = p."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    return float(ndtri(p))


def _finite_elements(S: PredictionSet) -> np.ndarray:
    return np.asarray(S.elements, dtype=float)


def grad_predictive_poi_inar(alpha: float, lam: float, x_n: int, S) -> np.ndarray:
    """Gradient of the Poi-INAR(1) predictive probability in (alpha, lambda).

    For a ray the gradient is minus that of its finite complement.
    """
    S = _as_set(S)
    if S.is_ray:
        return -grad_predictive_poi_inar(alpha, lam, x_n, S.finite_complement())
    if not 0 < alpha < 1 or not lam > 0:
        raise ValueError("need 0 < alpha < 1 and lambda > 0")
    x_n = int(x_n)
    j = _finite_elements(S)[:, None]
    k = np.arange(x_n + 1, dtype=float)[None, :]
    valid = k <= j
    m = np.where(valid, j - k, 0.0)
    log_choose = gammaln(x_n + 1) - gammaln(k + 1) - gammaln(x_n - k + 1)
    choose = np.exp(log_choose)
    inv_fact = np.exp(-gammaln(m + 1))
    e = math.exp(-lam)
    d_alpha = (choose * lam ** m * inv_fact * e
               * alpha ** (k - 1) * (k - x_n * alpha) * (1 - alpha) ** (x_n - k - 1))
    d_lam = (choose * alpha ** k * (1 - alpha) ** (x_n - k) * inv_fact
             * (-e) * lam ** (m - 1) * (-m + lam))
    return np.array([np.sum(d_alpha, where=valid), np.sum(d_lam, where=valid)])


def grad_predictive_inarch(beta: float, alpha: float, x_n: int, S) -> np.ndarray:
    """Gradient of the INARCH(1) predictive probability in (beta, alpha).

    The second coordinate is exactly ``x_n`` times the first.
    """
    S = _as_set(S)
    if S.is_ray:
        return -grad_predictive_inarch(beta, alpha, x_n, S.finite_complement())
    if not beta > 0 or not 0 <= alpha < 1:
        raise ValueError("need beta > 0 and 0 <= alpha < 1")
    j = _finite_elements(S)
    rate = beta + alpha * x_n
    d_beta = float(np.sum(np.exp(-gammaln(j + 1) - rate) * rate ** (j - 1) * (j - rate)))
    return np.array([d_beta, x_n * d_beta])


def _numeric_gradient(fam, theta, x_n, S) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    grad = np.empty(theta.size)
    for i, d in enumerate(fam.domains):
        room = theta[i] if d == "positive" else min(theta[i], 1 - theta[i])
        h = min(1e-6 * (1 + abs(theta[i])), room / 4)
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (model_predictive_prob(fam.model(up), x_n, S)
                   - model_predictive_prob(fam.model(dn), x_n, S)) / (2 * h)
    return grad


def predictive_gradient(family, theta, x_n: int, S) -> np.ndarray:
    """Analytic for Poi-INAR and INARCH, central differences otherwise."""
    fam = get_family(family)
    S = _as_set(S)
    if fam.name == "poi-inar":
        return grad_predictive_poi_inar(theta[0], theta[1], x_n, S)
    if fam.name == "inarch":
        return grad_predictive_inarch(theta[0], theta[1], x_n, S)
    return _numeric_gradient(fam, theta, x_n, S)


@dataclass(frozen=True, eq=False)
class DeltaComponents:
    gradient: np.ndarray
    info_inverse: np.ndarray
    sigma2: float
    point: float
    n: int


def _interval(point, half, level, method, clip) -> ConfidenceInterval:
    ci = ConfidenceInterval(point - half, point + half, level, method)
    return ci.clip() if clip else ci


def delta_ci_param(fit: FitResult, x_n: int, S, delta: float = 0.05,
                   clip: bool = False) -> tuple[ConfidenceInterval, DeltaComponents]:
    """Delta-method interval for the parametric predictive probability.

    Raises
    ------
    ZeroGradient
        The gradient vanishes (e.g. S covers the whole range), so the
        normal limit is degenerate.
    SingularInformation
        The fit carries no invertible information matrix.
    """
    if not fit.converged:
        raise NonConvergence(f"{fit.family} fit did not converge", fit)
    if fit.info_matrix is None:
        raise SingularInformation("fit has no usable information matrix")
    S = _as_set(S)
    fam = get_family(fit.family)
    grad = predictive_gradient(fam, fit.theta, x_n, S)
    if not np.any(grad):
        raise ZeroGradient(f"gradient of P(X in {S} | x_n={x_n}) is zero")
    try:
        info_inv = np.linalg.inv(fit.info_matrix)
    except np.linalg.LinAlgError as exc:
        raise SingularInformation(str(exc)) from None
    sigma2 = max(float(grad @ info_inv @ grad), 0.0)
    point = model_predictive_prob(fam.model(fit.theta), x_n, S)
    half = z_quantile(1 - delta / 2) * math.sqrt(sigma2) / math.sqrt(fit.n_used - 1)
    ci = _interval(point, half, 1 - delta, "asymptotic-parametric", clip)
    return ci, DeltaComponents(grad, info_inv, sigma2, point, fit.n_used)


@dataclass(frozen=True, eq=False)
class LongRunComponents:
    q_hat_S: float
    q_hat: float
    a_vec: np.ndarray
    sigma_matrix: np.ndarray
    bandwidth: int
    sigma2: float
    negative_clipped: bool = False


def bartlett_longrun_cov(z: np.ndarray, bandwidth: int) -> np.ndarray:
    """Bartlett-weighted long-run covariance of the rows of ``z`` (m x d)."""
    m = z.shape[0]
    zc = z - z.mean(axis=0)
    sigma = zc.T @ zc / m
    for h in range(1, min(bandwidth, m - 1) + 1):
        gamma = zc[h:].T @ zc[:-h] / m
        sigma += (1.0 - h / (bandwidth + 1.0)) * (gamma + gamma.T)
    return sigma


def longrun_sigma(series, x_n: int, S, bandwidth: int | str = "auto") -> LongRunComponents:
    """Asymptotic variance of the non-parametric predictive estimator.

    The bandwidth defaults to ceil(n^(1/3)).

    Raises
    ------
    InsufficientVisits
        ``x_n`` occurs fewer than 5 times among X_1..X_{n-1}.
    """
    S = _as_set(S)
    x = as_series(series).values
    n = x.size
    at = x[:-1] == int(x_n)
    visits = int(at.sum())
    if visits < MIN_VISITS:
        raise InsufficientVisits(
            f"x_n={x_n} is visited {visits} time(s); need at least {MIN_VISITS}"
        )
    if bandwidth == "auto":
        bandwidth = math.ceil(n ** (1.0 / 3.0))
    bandwidth = int(bandwidth)
    if bandwidth < 0:
        raise ValueError("bandwidth must be non-negative")
    z = np.column_stack([(at & S.mask(x[1:])).astype(float), at.astype(float)])
    q_s, q = z.mean(axis=0)
    sigma = bartlett_longrun_cov(z, bandwidth)
    a = np.array([1.0 / q, -q_s / q ** 2])
    s2 = float(a @ sigma @ a)
    clipped = s2 < 0
    return LongRunComponents(float(q_s), float(q), a, sigma, bandwidth, max(s2, 0.0), clipped)


def nonparam_ci(series, x_n: int, S, delta: float = 0.05, bandwidth="auto",
                clip: bool = False, return_components: bool = False):
    """Asymptotic interval around the relative-frequency estimate."""
    S = _as_set(S)
    series = as_series(series)
    comps = longrun_sigma(series, x_n, S, bandwidth)
    point = predictive_prob_nonparam(series, x_n, S).value
    half = z_quantile(1 - delta / 2) * math.sqrt(comps.sigma2) / math.sqrt(len(series) - 1)
    ci = _interval(point, half, 1 - delta, "asymptotic-nonparametric", clip)
    return (ci, comps) if return_components else ci
