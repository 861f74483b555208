"""Count-process models: innovations, INAR(1), INARCH(1) and finite Markov chains.

Every parametric model exposes the same small kernel interface used by the
estimation, prediction and bootstrap code:

``log_transition_matrix(max_prev, max_next)``
    log P(X_t = j | X_{t-1} = i) for i <= max_prev, j <= max_next.
``transition_row(x_prev, max_next)``
    one row of the kernel.
``simulate(n, rng, burn_in)``
    an exact path of the model recursion.

The ``Family`` objects at the bottom map flat parameter vectors to models
and back, which is all the optimizer and the delta method need.
"""

from __future__ import annotations

import bisect
import configparser
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar

import numpy as np
from scipy import stats
from scipy.linalg import toeplitz
from scipy.special import expit, gammaln, logit, logsumexp, xlog1py, xlogy

from .exceptions import InvalidState
from .series import CountSeries

__all__ = [
    "Poisson",
    "NegBinomial",
    "Geometric",
    "InarModel",
    "InarchModel",
    "FiniteMarkovModel",
    "innovation_pmf",
    "inar_transition_prob",
    "inarch_transition_prob",
    "simulate_inar",
    "simulate_inarch",
    "empirical_transition_model",
    "simulate_finite_chain",
    "FAMILIES",
    "get_family",
    "model_to_config",
    "model_from_config",
]

# Innovation tail mass left out when enumerating a transition row.
TAIL_EPS = 1e-12


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


# ----------------------------------------------------------------- innovations


@dataclass(frozen=True)
class Poisson:
    lam: float

    name: ClassVar[str] = "poisson"

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("Poisson rate must be positive")

    def logpmf(self, k):
        k = np.asarray(k, dtype=float)
        return xlogy(k, self.lam) - self.lam - gammaln(k + 1.0)

    @property
    def mean(self) -> float:
        return self.lam

    @property
    def variance(self) -> float:
        return self.lam

    def sample(self, rng, size):
        return rng.poisson(self.lam, size)

    def support_bound(self, eps: float = TAIL_EPS) -> int:
        return int(stats.poisson.isf(eps, self.lam))

    def params(self) -> dict:
        return {"lambda": self.lam}


@dataclass(frozen=True)
class NegBinomial:
    """NB(N, pi): Gamma(k + N) / (Gamma(N) k!) * pi^N (1 - pi)^k, real N > 0."""

    size: float
    prob: float

    name: ClassVar[str] = "negbinomial"

    def __post_init__(self):
        if not self.size > 0:
            raise ValueError("NB size N must be positive")
        if not 0 < self.prob < 1:
            raise ValueError("NB probability must lie in (0, 1)")

    def logpmf(self, k):
        k = np.asarray(k, dtype=float)
        return (gammaln(k + self.size) - gammaln(self.size) - gammaln(k + 1.0)
                + self.size * np.log(self.prob) + xlog1py(k, -self.prob))

    @property
    def mean(self) -> float:
        return self.size * (1 - self.prob) / self.prob

    @property
    def variance(self) -> float:
        return self.size * (1 - self.prob) / self.prob ** 2

    def sample(self, rng, size):
        return rng.negative_binomial(self.size, self.prob, size)

    def support_bound(self, eps: float = TAIL_EPS) -> int:
        return int(stats.nbinom.isf(eps, self.size, self.prob))

    def params(self) -> dict:
        return {"N": self.size, "pi": self.prob}


@dataclass(frozen=True)
class Geometric:
    """Geometric on {0, 1, 2, ...}: pi (1 - pi)^k."""

    prob: float

    name: ClassVar[str] = "geometric"

    def __post_init__(self):
        if not 0 < self.prob < 1:
            raise ValueError("geometric probability must lie in (0, 1)")

    def logpmf(self, k):
        k = np.asarray(k, dtype=float)
        return np.log(self.prob) + xlog1py(k, -self.prob)

    @property
    def mean(self) -> float:
        return (1 - self.prob) / self.prob

    @property
    def variance(self) -> float:
        return (1 - self.prob) / self.prob ** 2

    def sample(self, rng, size):
        return rng.geometric(self.prob, size) - 1

    def support_bound(self, eps: float = TAIL_EPS) -> int:
        return int(stats.nbinom.isf(eps, 1, self.prob))

    def params(self) -> dict:
        return {"pi": self.prob}


def innovation_pmf(dist, k) -> float:
    """Probability mass of an innovation distribution at ``k``."""
    if np.any(np.asarray(k) < 0):
        raise ValueError("k must be non-negative")
    out = np.exp(dist.logpmf(k))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------- parametric kernels


def _log_binom_matrix(max_prev: int, alpha: float) -> np.ndarray:
    """L[i, k] = log C(i, k) alpha^k (1 - alpha)^(i - k), -inf for k > i."""
    i = np.arange(max_prev + 1, dtype=float)[:, None]
    k = np.arange(max_prev + 1, dtype=float)[None, :]
    with np.errstate(invalid="ignore"):
        out = (gammaln(i + 1) - gammaln(k + 1) - gammaln(np.maximum(i - k, 0) + 1)
               + xlogy(k, alpha) + xlog1py(i - k, -alpha))
    out[k > i] = -np.inf
    return out


class _KernelMixin:
    """Shared helpers built on ``log_transition_matrix``."""

    def transition_matrix(self, max_prev: int, max_next: int) -> np.ndarray:
        return np.exp(self.log_transition_matrix(max_prev, max_next))

    def transition_row(self, x_prev: int, max_next: int) -> np.ndarray:
        return self.transition_matrix(x_prev, max_next)[x_prev]

    def transition_prob(self, x_prev: int, x_next: int) -> float:
        return float(self.transition_row(int(x_prev), int(x_next))[x_next])

    def row_support(self, x_prev: int) -> int:
        """Column truncation K for row ``x_prev`` with tail mass <= TAIL_EPS."""
        raise NotImplementedError


@dataclass(frozen=True)
class InarModel(_KernelMixin):
    """INAR(1): X_t = alpha o X_{t-1} + eps_t with binomial thinning."""

    alpha: float
    innovation: Poisson | NegBinomial | Geometric

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("INAR(1) requires 0 < alpha < 1")

    @property
    def family(self) -> str:
        return {"poisson": "poi-inar", "negbinomial": "nb-inar",
                "geometric": "geo-inar"}[self.innovation.name]

    @property
    def stationary_mean(self) -> float:
        return self.innovation.mean / (1 - self.alpha)

    def log_transition_matrix(self, max_prev: int, max_next: int) -> np.ndarray:
        # P[i, j] = sum_k C(i,k) a^k (1-a)^(i-k) G(j-k): a (binomial) x
        # (Toeplitz of G) product. Done in log space row by row only when the
        # direct product would underflow.
        log_b = _log_binom_matrix(max_prev, self.alpha)
        log_g = self.innovation.logpmf(np.arange(max_next + 1))
        b = np.exp(log_b)
        g = np.exp(log_g)
        col = np.zeros(max_prev + 1)
        col[0] = g[0]
        mat = b @ toeplitz(col, g)
        with np.errstate(divide="ignore"):
            out = np.log(mat)
        bad = ~np.isfinite(out)
        # exact zeros (j < 0 impossible, so only underflow): redo in log space
        for i, j in zip(*np.nonzero(bad)):
            ks = np.arange(min(i, j) + 1)
            out[i, j] = logsumexp(log_b[i, ks] + log_g[j - ks])
        return out

    def row_support(self, x_prev: int) -> int:
        return int(x_prev) + self.innovation.support_bound()

    def simulate(self, n, rng=None, burn_in=500) -> CountSeries:
        return simulate_inar(self, n, burn_in=burn_in, rng=rng)

    def params(self) -> dict:
        return {"alpha": self.alpha, **self.innovation.params()}


@dataclass(frozen=True)
class InarchModel(_KernelMixin):
    """INARCH(1): X_t | X_{t-1} ~ Poisson(beta + alpha X_{t-1})."""

    beta: float
    alpha: float

    family: ClassVar[str] = "inarch"

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("INARCH(1) requires beta > 0")
        if not 0 <= self.alpha < 1:
            raise ValueError("INARCH(1) requires 0 <= alpha < 1")

    @property
    def stationary_mean(self) -> float:
        return self.beta / (1 - self.alpha)

    def log_transition_matrix(self, max_prev: int, max_next: int) -> np.ndarray:
        rate = self.beta + self.alpha * np.arange(max_prev + 1, dtype=float)[:, None]
        j = np.arange(max_next + 1, dtype=float)[None, :]
        return xlogy(j, rate) - rate - gammaln(j + 1)

    def row_support(self, x_prev: int) -> int:
        return int(stats.poisson.isf(TAIL_EPS, self.beta + self.alpha * x_prev))

    def simulate(self, n, rng=None, burn_in=500) -> CountSeries:
        return simulate_inarch(self, n, burn_in=burn_in, rng=rng)

    def params(self) -> dict:
        return {"beta": self.beta, "alpha": self.alpha}


def inar_transition_prob(model: InarModel, x_prev: int, x_next: int) -> float:
    """P(X_t = x_next | X_{t-1} = x_prev) for an INAR(1) model."""
    x_prev, x_next = int(x_prev), int(x_next)
    if x_prev < 0 or x_next < 0:
        raise ValueError("states must be non-negative")
    ks = np.arange(min(x_prev, x_next) + 1)
    terms = (gammaln(x_prev + 1) - gammaln(ks + 1) - gammaln(x_prev - ks + 1)
             + xlogy(ks, model.alpha) + xlog1py(x_prev - ks, -model.alpha)
             + model.innovation.logpmf(x_next - ks))
    return float(np.exp(logsumexp(terms)))


def inarch_transition_prob(model: InarchModel, x_prev: int, x_next: int) -> float:
    if x_prev < 0 or x_next < 0:
        raise ValueError("states must be non-negative")
    rate = model.beta + model.alpha * x_prev
    return float(np.exp(xlogy(x_next, rate) - rate - gammaln(x_next + 1)))


def simulate_inar(model: InarModel, n: int, burn_in: int = 500, rng=None) -> CountSeries:
    """Exact INAR(1) path of length ``n``.

    With Poisson innovations X_1 is drawn from the stationary
    Poi(lambda / (1 - alpha)) law; otherwise the chain starts at the rounded
    stationary mean and ``burn_in`` steps are discarded.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = _as_rng(rng)
    alpha = model.alpha
    if isinstance(model.innovation, Poisson):
        x = int(rng.poisson(model.stationary_mean))
        skip = 0
    else:
        x = int(round(model.stationary_mean))
        skip = int(burn_in)
    eps = model.innovation.sample(rng, n - 1 + skip).tolist()
    binomial = rng.binomial
    out = np.empty(n, dtype=np.int64)
    for t in range(skip):
        x = binomial(x, alpha) + eps[t]
    out[0] = x
    for t in range(1, n):
        x = binomial(x, alpha) + eps[skip + t - 1]
        out[t] = x
    return CountSeries(out, name=f"{model.family}-sim")


def simulate_inarch(model: InarchModel, n: int, burn_in: int = 500, rng=None) -> CountSeries:
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = _as_rng(rng)
    beta, alpha = model.beta, model.alpha
    x = int(round(model.stationary_mean))
    poisson = rng.poisson
    for _ in range(int(burn_in)):
        x = poisson(beta + alpha * x)
    out = np.empty(n, dtype=np.int64)
    out[0] = x
    for t in range(1, n):
        x = poisson(beta + alpha * x)
        out[t] = x
    return CountSeries(out, name="inarch-sim")


# --------------------------------------------------------- finite Markov chain


@dataclass(frozen=True, eq=False)
class FiniteMarkovModel:
    """Markov chain on an explicit finite set of count states."""

    states: tuple[int, ...]
    matrix: np.ndarray
    marginal: np.ndarray
    _index: dict = field(init=False, repr=False)

    family: ClassVar[str] = "npara"

    def __post_init__(self):
        states = tuple(int(s) for s in self.states)
        if list(states) != sorted(set(states)):
            raise ValueError("states must be sorted and distinct")
        mat = np.array(self.matrix, dtype=float)
        marg = np.array(self.marginal, dtype=float)
        m = len(states)
        if mat.shape != (m, m) or marg.shape != (m,):
            raise ValueError("matrix/marginal shape does not match the states")
        if np.any(mat < 0) or np.any(mat > 1):
            raise ValueError("transition probabilities must lie in [0, 1]")
        if np.max(np.abs(mat.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("rows of the transition matrix must sum to 1")
        if np.any(marg < 0) or abs(marg.sum() - 1.0) > 1e-12:
            raise ValueError("marginal must be a probability vector")
        mat.setflags(write=False)
        marg.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "marginal", marg)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(states)})

    def index(self, state: int) -> int:
        try:
            return self._index[int(state)]
        except KeyError:
            raise InvalidState(f"state {state} is not in the chain") from None

    def row(self, state: int) -> dict[int, float]:
        r = self.matrix[self.index(state)]
        return {s: float(p) for s, p in zip(self.states, r) if p > 0}

    def transition_prob(self, x_prev: int, x_next: int) -> float:
        if int(x_next) not in self._index:
            return 0.0
        return float(self.matrix[self.index(x_prev), self._index[int(x_next)]])

    @cached_property
    def _cdf_rows(self):
        cdf = np.cumsum(self.matrix, axis=1)
        cdf[:, -1] = 1.0
        return [row.tolist() for row in cdf]

    @cached_property
    def _marginal_cdf(self):
        cdf = np.cumsum(self.marginal)
        cdf[-1] = 1.0
        return cdf.tolist()

    def simulate(self, n, rng=None, init="marginal") -> CountSeries:
        return simulate_finite_chain(self, n, init=init, rng=rng)


def empirical_transition_model(series: CountSeries) -> FiniteMarkovModel:
    """Relative-frequency transition matrix of an observed series.

    A state seen only at the final time point has no observed successor;
    its row falls back to the empirical marginal.
    """
    x = series.values
    states, codes = np.unique(x, return_inverse=True)
    m = states.size
    counts = np.zeros((m, m))
    np.add.at(counts, (codes[:-1], codes[1:]), 1.0)
    marginal = np.bincount(codes, minlength=m) / x.size
    visits = counts.sum(axis=1)
    mat = np.empty_like(counts)
    seen = visits > 0
    mat[seen] = counts[seen] / visits[seen, None]
    mat[~seen] = marginal
    return FiniteMarkovModel(tuple(states.tolist()), mat, marginal)


def simulate_finite_chain(model: FiniteMarkovModel, n: int, init="marginal",
                          rng=None) -> CountSeries:
    """Path of length ``n``; X_1 from the marginal or a fixed state."""
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = _as_rng(rng)
    u = rng.random(n).tolist()
    if isinstance(init, str):
        if init != "marginal":
            raise ValueError(f"unknown init {init!r}")
        i = bisect.bisect_right(model._marginal_cdf, u[0])
    else:
        i = model.index(init)
    cdf = model._cdf_rows
    last = len(model.states) - 1
    idx = [0] * n
    idx[0] = i
    for t in range(1, n):
        i = min(bisect.bisect_right(cdf[i], u[t]), last)
        idx[t] = i
    return CountSeries(np.asarray(model.states, dtype=np.int64)[idx], name="chain-sim")


# -------------------------------------------------------------------- families


class Family:
    """A parametric family: parameter vector <-> model, plus transforms.

    Subclasses list each coordinate's name and domain; ``"unit"`` is (0, 1)
    mapped by logit, ``"positive"`` is (0, inf) mapped by log.
    """

    name: ClassVar[str]
    param_names: ClassVar[tuple[str, ...]]
    domains: ClassVar[tuple[str, ...]]

    @property
    def dim(self) -> int:
        return len(self.param_names)

    def model(self, theta):
        raise NotImplementedError

    def theta_of(self, model) -> np.ndarray:
        p = model.params()
        return np.array([p[k] for k in self.param_names], dtype=float)

    def to_unconstrained(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.array([logit(v) if d == "unit" else np.log(v)
                         for v, d in zip(theta, self.domains)])

    def from_unconstrained(self, u) -> np.ndarray:
        return np.array([expit(v) if d == "unit" else np.exp(v)
                         for v, d in zip(u, self.domains)])

    def is_interior(self, theta) -> bool:
        for v, d in zip(theta, self.domains):
            if not np.isfinite(v) or v <= 0 or (d == "unit" and v >= 1):
                return False
        return True

    def moment_init(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self):
        return f"<family {self.name}>"


def _lag1(x: np.ndarray) -> float:
    xc = x - x.mean()
    c0 = xc @ xc
    return float(xc[1:] @ xc[:-1] / c0) if c0 > 0 else 0.0


def _moment_alpha(x) -> float:
    return min(max(_lag1(x), 0.05), 0.95)


class PoiInar(Family):
    name = "poi-inar"
    param_names = ("alpha", "lambda")
    domains = ("unit", "positive")

    def model(self, theta):
        return InarModel(float(theta[0]), Poisson(float(theta[1])))

    def moment_init(self, x):
        a = _moment_alpha(x)
        return np.array([a, max(x.mean() * (1 - a), 1e-3)])


class NbInar(Family):
    name = "nb-inar"
    param_names = ("alpha", "N", "pi")
    domains = ("unit", "positive", "unit")

    def model(self, theta):
        return InarModel(float(theta[0]), NegBinomial(float(theta[1]), float(theta[2])))

    def moment_init(self, x):
        a = _moment_alpha(x)
        mean, var = x.mean(), x.var()
        mu = max(mean * (1 - a), 1e-3)
        # Var X = (alpha * mu_x * (1 - alpha) + sigma_eps^2) / (1 - alpha^2)
        s2 = (1 - a * a) * var - a * (1 - a) * mean
        pi = min(max(mu / s2, 0.05), 0.95) if s2 > 0 else 0.95
        return np.array([a, mu * pi / (1 - pi), pi])


class GeoInar(Family):
    name = "geo-inar"
    param_names = ("alpha", "pi")
    domains = ("unit", "unit")

    def model(self, theta):
        return InarModel(float(theta[0]), Geometric(float(theta[1])))

    def moment_init(self, x):
        a = _moment_alpha(x)
        mu = max(x.mean() * (1 - a), 1e-3)
        return np.array([a, 1 / (1 + mu)])


class Inarch(Family):
    name = "inarch"
    param_names = ("beta", "alpha")
    domains = ("positive", "unit")

    def model(self, theta):
        return InarchModel(float(theta[0]), float(theta[1]))

    def moment_init(self, x):
        a = _moment_alpha(x)
        return np.array([max(x.mean() * (1 - a), 1e-3), a])


FAMILIES: dict[str, Family] = {f.name: f for f in (PoiInar(), NbInar(), GeoInar(), Inarch())}


def get_family(family) -> Family:
    if isinstance(family, Family):
        return family
    try:
        return FAMILIES[str(family).lower()]
    except KeyError:
        raise ValueError(
            f"unknown family {family!r}; choose from {', '.join(FAMILIES)}"
        ) from None


# ---------------------------------------------------------------- config files

_CONFIG_KEYS = {"lambda": "lambda", "lam": "lambda", "n": "N", "size": "N",
                "pi": "pi", "prob": "pi", "alpha": "alpha", "beta": "beta"}


def model_to_config(model) -> dict[str, str]:
    cfg = {"family": model.family}
    cfg.update({k: repr(float(v)) for k, v in model.params().items()})
    return cfg


def model_from_config(cfg) -> InarModel | InarchModel:
    """Build a model from ``family`` plus named parameters (strings or numbers)."""
    cfg = {str(k).strip(): v for k, v in dict(cfg).items()}
    fam = get_family(cfg.pop("family"))
    params = {}
    for key, value in cfg.items():
        canon = _CONFIG_KEYS.get(key.lower(), key)
        params[canon] = float(value)
    missing = [p for p in fam.param_names if p not in params]
    if missing:
        raise ValueError(f"{fam.name} needs parameter(s): {', '.join(missing)}")
    return fam.model([params[p] for p in fam.param_names])


def read_model_config(path, section: str = "model"):
    parser = configparser.ConfigParser()
    parser.optionxform = str
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    return model_from_config(parser[section])


def write_model_config(model, path, section: str = "model") -> None:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser[section] = model_to_config(model)
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)
