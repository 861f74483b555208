"""Conditional maximum likelihood for INAR(1)/INARCH(1) families.

The conditional log-likelihood only depends on the data through the counts
of observed transition pairs (x_{t-1}, x_t), so a fit on 10^6 observations
costs the same per iteration as a fit on 100.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .exceptions import DegenerateSeries, NonConvergence, SingularInformation, ZeroLikelihood
from .models import Family, get_family
from .series import as_series

__all__ = [
    "TransitionCounts",
    "FitResult",
    "conditional_loglik",
    "fit_cml",
    "information_matrix",
]

MAX_COND = 1e12


@dataclass(frozen=True, eq=False)
class TransitionCounts:
    """Distinct (x_{t-1}, x_t) pairs of a series with their multiplicities."""

    prev: np.ndarray
    next: np.ndarray
    counts: np.ndarray
    first_t: np.ndarray
    n: int

    @classmethod
    def from_series(cls, series) -> "TransitionCounts":
        x = as_series(series).values
        width = int(x.max()) + 1
        codes = x[:-1] * width + x[1:]
        uniq, first, counts = np.unique(codes, return_index=True, return_counts=True)
        return cls(uniq // width, uniq % width, counts.astype(float), first + 2, x.size)

    @property
    def max_prev(self) -> int:
        return int(self.prev.max())

    @property
    def max_next(self) -> int:
        return int(self.next.max())

    def log_terms(self, model) -> np.ndarray:
        """log P(next | prev) for every distinct pair."""
        logp = model.log_transition_matrix(self.max_prev, self.max_next)
        return logp[self.prev, self.next]


def _counts(series_or_counts) -> TransitionCounts:
    if isinstance(series_or_counts, TransitionCounts):
        return series_or_counts
    return TransitionCounts.from_series(series_or_counts)


def conditional_loglik(family, theta, series) -> float:
    """Sum over t = 2..n of log P(X_t | X_{t-1}; theta).

    Raises
    ------
    ZeroLikelihood
        Some observed transition has probability zero (numerically); the
        first offending time index is reported.
    """
    fam = get_family(family)
    tc = _counts(series)
    terms = tc.log_terms(fam.model(theta))
    bad = ~np.isfinite(terms)
    if np.any(bad):
        i = int(np.argmin(np.where(bad, tc.first_t, np.iinfo(np.int64).max)))
        raise ZeroLikelihood(int(tc.first_t[i]), int(tc.prev[i]), int(tc.next[i]))
    return float(tc.counts @ terms)


def _mean_loglik(fam: Family, theta, tc: TransitionCounts) -> float:
    terms = tc.log_terms(fam.model(theta))
    return float(tc.counts @ terms) / (tc.n - 1)


@dataclass(frozen=True, eq=False)
class FitResult:
    """Outcome of a conditional maximum-likelihood fit.

    ``info_matrix`` estimates the per-observation information, i.e. the
    average negative Hessian of the log transition probabilities at
    ``theta``. ``n_used`` is the series length n (n - 1 transitions).
    """

    family: str
    theta: np.ndarray
    loglik: float
    n_used: int
    converged: bool
    info_matrix: np.ndarray | None = None
    info_pd: bool | None = None
    n_iter: int = 0
    n_starts: int = 1
    trace: tuple[float, ...] = field(default=(), repr=False)
    message: str = ""

    @property
    def params(self) -> dict[str, float]:
        names = get_family(self.family).param_names
        return {k: float(v) for k, v in zip(names, self.theta)}

    @property
    def model(self):
        return get_family(self.family).model(self.theta)

    def to_dict(self) -> dict:
        out = {"family": self.family, **self.params, "loglik": self.loglik,
               "n_used": self.n_used, "converged": int(self.converged),
               "n_iter": self.n_iter}
        if self.info_matrix is not None:
            names = get_family(self.family).param_names
            for i, a in enumerate(names):
                for j, b in enumerate(names):
                    out[f"info_{a}_{b}"] = float(self.info_matrix[i, j])
            out["info_pd"] = int(bool(self.info_pd))
        return out


def fit_cml(family, series, multistarts: int = 5, tol: float = 1e-10,
            max_iter: int = 500, seed: int = 0, init=None,
            compute_info: bool = True, strict: bool = False) -> FitResult:
    """Fit a family by conditional maximum likelihood.

    Parameters are optimized in unconstrained coordinates (logit for
    coordinates in (0, 1), log for positive ones) with L-BFGS-B. Starts are
    ``init`` (or the method-of-moments guess) followed by ``multistarts``
    random perturbations of it drawn from a stream seeded by ``seed``. The
    best local optimum wins.

    Parameters
    ----------
    tol : float
        Stop when the average log-likelihood per transition improves by
        less than ``tol`` between iterations.
    strict : bool
        Raise :class:`NonConvergence` instead of returning a result flagged
        ``converged=False``.
    """
    fam = get_family(family)
    series = as_series(series)
    x = series.values
    if x.size < 10:
        raise DegenerateSeries(f"need at least 10 observations to fit, got {x.size}")
    if np.all(x == x[0]):
        raise DegenerateSeries("cannot fit a constant series")
    tc = TransitionCounts.from_series(series)

    u0 = fam.to_unconstrained(fam.moment_init(x.astype(float)) if init is None else init)
    rng = np.random.default_rng(seed)
    starts = [u0] + [u0 + rng.normal(0.0, 1.0, fam.dim) for _ in range(multistarts)]

    def objective(u):
        with np.errstate(all="ignore"):
            try:
                val = -_mean_loglik(fam, fam.from_unconstrained(u), tc)
            except (ValueError, FloatingPointError, OverflowError):
                return 1e10
        return val if np.isfinite(val) else 1e10

    best = None
    for u_start in starts:
        trace = []
        res = minimize(objective, u_start, method="L-BFGS-B",
                       callback=lambda uk: trace.append(-objective(uk)),
                       options={"ftol": tol, "gtol": 1e-9, "maxiter": max_iter})
        if best is None or res.fun < best[0].fun:
            best = (res, trace)
    res, trace = best
    theta = fam.from_unconstrained(res.x)
    loglik = conditional_loglik(fam, theta, tc)
    grad_ok = res.jac is not None and np.max(np.abs(res.jac)) < 1e-4
    converged = bool(res.success or grad_ok) and res.fun < 1e10

    info, pd = None, None
    if compute_info:
        try:
            info = information_matrix(fam, theta, tc)
            pd = bool(np.all(np.linalg.eigvalsh(info) > 0))
        except SingularInformation:
            info, pd = None, False
    result = FitResult(fam.name, theta, loglik, int(x.size), converged, info, pd,
                       int(res.nit), len(starts), tuple(trace), str(res.message))
    if strict and not converged:
        raise NonConvergence(f"CML fit of {fam.name} did not converge: {res.message}", result)
    return result


# ------------------------------------------------------------ information


def _inarch_information(theta, tc: TransitionCounts) -> np.ndarray:
    beta, alpha = theta
    xp, xn, c = tc.prev.astype(float), tc.next.astype(float), tc.counts
    w = c * xn / (beta + alpha * xp) ** 2
    info = np.array([[w.sum(), (w * xp).sum()],
                     [(w * xp).sum(), (w * xp * xp).sum()]])
    return info / (tc.n - 1)


def _fd_steps(fam: Family, theta: np.ndarray) -> np.ndarray:
    h = 1e-5 * (1.0 + np.abs(theta))
    for i, d in enumerate(fam.domains):
        room = theta[i] if d == "positive" else min(theta[i], 1.0 - theta[i])
        h[i] = min(h[i], room / 4.0)
    return h


def numeric_hessian(f, theta, h) -> np.ndarray:
    """Central finite-difference Hessian of a scalar function."""
    theta = np.asarray(theta, dtype=float)
    d = theta.size
    f0 = f(theta)
    hess = np.empty((d, d))
    eye = np.eye(d)
    for i in range(d):
        ei = eye[i] * h[i]
        hess[i, i] = (f(theta + ei) - 2.0 * f0 + f(theta - ei)) / h[i] ** 2
        for j in range(i):
            ej = eye[j] * h[j]
            hess[i, j] = hess[j, i] = (
                f(theta + ei + ej) - f(theta + ei - ej)
                - f(theta - ei + ej) + f(theta - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return hess


def information_matrix(family, theta_hat, series, method: str = "auto") -> np.ndarray:
    """Average observed information (n-1)^-1 sum_t J_t at ``theta_hat``.

    INARCH uses the closed-form J_t; the INAR families (and ``method=
    "numeric"``) use a central finite-difference Hessian with step
    1e-5 * (1 + |theta_i|).

    Raises
    ------
    SingularInformation
        The matrix is not finite or its condition number exceeds 1e12.
    """
    fam = get_family(family)
    theta = np.asarray(theta_hat, dtype=float)
    if not fam.is_interior(theta):
        raise ValueError(f"theta {theta} is not interior to the {fam.name} domain")
    tc = _counts(series)
    if method not in ("auto", "analytic", "numeric"):
        raise ValueError(f"unknown method {method!r}")
    if fam.name == "inarch" and method != "numeric":
        info = _inarch_information(theta, tc)
    elif method == "analytic":
        raise ValueError(f"no closed-form information for {fam.name}")
    else:
        with np.errstate(all="ignore"):
            info = -numeric_hessian(lambda th: _mean_loglik(fam, th, tc), theta,
                                    _fd_steps(fam, theta))
    info = 0.5 * (info + info.T)
    if not np.all(np.isfinite(info)):
        raise SingularInformation("information matrix has non-finite entries")
    cond = np.linalg.cond(info)
    if not np.isfinite(cond) or cond > MAX_COND:
        raise SingularInformation(f"information matrix is singular (condition number {cond:.3g})")
    return info
