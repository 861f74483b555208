"""Bootstrap confidence intervals for predictive probabilities.

A scenario pairs a pseudo-series generator with an estimator; each side is
either a parametric family name (``"poi-inar"``, ``"nb-inar"``,
``"geo-inar"``, ``"inarch"``) or ``"npara"``:

================  =====================  ==================================
generator         estimator              imitates
================  =====================  ==================================
family            same family            correctly specified parametric
npara             family                 parametric, possibly misspecified
npara             npara                  model-free prediction
family            npara                  model-free prediction, model data
================  =====================  ==================================

Replicate ``b`` always draws from the stream
``SeedSequence(seed, spawn_key=(b,))``, so results do not depend on how
replicates are scheduled across workers.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .estimation import fit_cml
from .exceptions import (
    CountPredError,
    DegeneratePoint,
    NonConvergence,
    TooManyRefitFailures,
)
from .models import FAMILIES, empirical_transition_model, get_family
from .prediction import (
    PredictiveEstimate,
    _as_set,
    model_predictive_prob,
    predictive_prob_nonparam,
)
from .series import ConfidenceInterval, as_series

__all__ = [
    "BootstrapScenario",
    "BootstrapResult",
    "run_bootstrap",
    "basic_interval",
    "percentile_interval",
    "basic_order_indices",
    "percentile_order_indices",
]

NONPARAMETRIC = "npara"
MAX_FAILURE_RATE = 0.05
MIN_B = 100


@dataclass(frozen=True)
class BootstrapScenario:
    generator: str
    estimator: str

    def __post_init__(self):
        for side in ("generator", "estimator"):
            value = str(getattr(self, side)).lower()
            if value in ("nonparametric", "nonparam"):
                value = NONPARAMETRIC
            if value != NONPARAMETRIC and value not in FAMILIES:
                raise ValueError(f"unknown {side} {value!r}")
            object.__setattr__(self, side, value)

    @property
    def parametric_estimator(self) -> bool:
        return self.estimator != NONPARAMETRIC

    @property
    def parametric_generator(self) -> bool:
        return self.generator != NONPARAMETRIC

    @property
    def label(self) -> str:
        return f"{self.generator}>{self.estimator}"

    @classmethod
    def parse(cls, text: str) -> "BootstrapScenario":
        gen, _, est = text.partition(">")
        if not est:
            raise ValueError(f"scenario must look like 'generator>estimator', got {text!r}")
        return cls(gen.strip(), est.strip())


def _seed_entropy(seed) -> int:
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.entropy) if not seed.spawn_key else hash(
            (seed.entropy, seed.spawn_key)) & 0x7FFFFFFF
    return int(seed)


def child_seed(seed, *key: int) -> np.random.SeedSequence:
    """Deterministic sub-stream of ``seed`` addressed by integer ``key``."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    return np.random.SeedSequence(int(seed), spawn_key=key)


# ------------------------------------------------------------- order statistics


def _near_int(v: float) -> bool:
    return abs(v - round(v)) < 1e-9


def basic_order_indices(B: int, delta: float) -> tuple[int, int]:
    """1-based order statistics of L* used for q*_{delta/2} and q*_{1-delta/2}.

    q*_a is the ceil(a * B)-th smallest error.
    """
    def idx(a):
        v = a * B
        k = round(v) if _near_int(v) else math.ceil(v)
        return min(max(int(k), 1), B)

    return idx(delta / 2), idx(1 - delta / 2)


def percentile_order_indices(B: int, delta: float) -> tuple[int, int]:
    """1-based order statistics of the replicates for the percentile interval.

    B*delta/2 and B*(1-delta/2) when B*delta/2 is an integer, otherwise m
    and B+1-m with m = floor((B+1)*delta/2).
    """
    v = B * delta / 2
    if _near_int(v):
        lo = int(round(v))
        hi = B - lo
    else:
        lo = int(math.floor((B + 1) * delta / 2 + 1e-9))
        hi = B + 1 - lo
    lo = min(max(lo, 1), B)
    hi = min(max(hi, lo), B)
    return lo, hi


def basic_interval(point: float, errors_L, delta: float = 0.05) -> ConfidenceInterval:
    """[point - q*_{1-delta/2}, point - q*_{delta/2}] from bootstrap errors."""
    errs = np.sort(np.asarray(errors_L, dtype=float))
    if errs.size == 0:
        raise ValueError("need at least one bootstrap error")
    lo_idx, hi_idx = basic_order_indices(errs.size, delta)
    lower = point - errs[hi_idx - 1]
    upper = point - errs[lo_idx - 1]
    return ConfidenceInterval(float(lower), float(upper), 1 - delta, "bootstrap-basic")


def percentile_interval(replicates, delta: float = 0.05) -> ConfidenceInterval:
    reps = np.sort(np.asarray(replicates, dtype=float))
    if reps.size == 0:
        raise ValueError("need at least one bootstrap replicate")
    lo_idx, hi_idx = percentile_order_indices(reps.size, delta)
    return ConfidenceInterval(float(reps[lo_idx - 1]), float(reps[hi_idx - 1]),
                              1 - delta, "bootstrap-percentile")


# -------------------------------------------------------------------- driver


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    scenario: BootstrapScenario
    point: PredictiveEstimate
    replicates: np.ndarray = field(repr=False)
    errors_L: np.ndarray = field(repr=False)
    ci_basic: ConfidenceInterval
    ci_percentile: ConfidenceInterval
    B: int
    seed: int
    refit_failures: int

    def row(self) -> dict:
        return {
            "scenario": self.scenario.label,
            "B": self.B,
            "seed": self.seed,
            "x_n": self.point.x_n,
            "S": self.point.S.to_token(),
            "point": repr(float(self.point.value)),
            "basic_lower": repr(self.ci_basic.lower),
            "basic_upper": repr(self.ci_basic.upper),
            "percentile_lower": repr(self.ci_percentile.lower),
            "percentile_upper": repr(self.ci_percentile.upper),
            "refit_failures": self.refit_failures,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        row = self.row()
        writer = csv.DictWriter(buf, fieldnames=list(row), lineterminator="\n")
        writer.writeheader()
        writer.writerow(row)
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class _ReplicateJob:
    generator: object
    n: int
    estimator: str
    theta_hat: np.ndarray | None
    x_n: int
    S: object
    seed: object
    fit_options: dict


def _one_replicate(job: _ReplicateJob, b: int) -> float | None:
    rng = np.random.default_rng(child_seed(job.seed, b))
    pseudo = job.generator.simulate(job.n, rng=rng)
    if job.estimator == NONPARAMETRIC:
        return predictive_prob_nonparam(pseudo, job.x_n, job.S).value
    fam = get_family(job.estimator)
    try:
        fit = fit_cml(fam, pseudo, init=job.theta_hat, compute_info=False, **job.fit_options)
    except CountPredError:
        return None
    if not fit.converged:
        return None
    return model_predictive_prob(fam.model(fit.theta), job.x_n, job.S)


def _run_chunk(job: _ReplicateJob, indices) -> list:
    return [_one_replicate(job, b) for b in indices]


def _map_replicates(job: _ReplicateJob, B: int, n_jobs: int) -> list:
    if n_jobs is None or n_jobs <= 1:
        return _run_chunk(job, range(B))
    chunks = [list(range(B))[i::n_jobs] for i in range(n_jobs)]
    out = [None] * B
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        for idx, vals in zip(chunks, pool.map(_run_chunk, [job] * n_jobs, chunks)):
            for b, v in zip(idx, vals):
                out[b] = v
    return out


def run_bootstrap(series, scenario: BootstrapScenario, S, x_n: int | None = None,
                  B: int = 500, delta: float = 0.05, seed=0, n_jobs: int = 1,
                  fit_options: dict | None = None, point_fit=None) -> BootstrapResult:
    """Basic and percentile bootstrap intervals for P(X_{n+1} in S | X_n = x_n).

    Pseudo-series have the original length n and start from the generator's
    stationary/marginal law (no conditioning on X*_n = x_n). Each replicate
    re-applies the scenario's estimator at the original ``x_n``; parametric
    refits start from the original estimate and failed refits are dropped
    and counted.

    Parameters
    ----------
    x_n : int, optional
        Conditioning value; defaults to the last observation.
    point_fit : FitResult, optional
        Already computed CML fit of the estimator family on ``series``.

    Raises
    ------
    DegeneratePoint
        Non-parametric estimator and ``x_n`` never visited.
    TooManyRefitFailures
        More than 5% of the parametric refits failed.
    """
    series = as_series(series)
    if isinstance(scenario, str):
        scenario = BootstrapScenario.parse(scenario)
    S = _as_set(S)
    x_n = series.last if x_n is None else int(x_n)
    if B < MIN_B:
        raise ValueError(f"B must be at least {MIN_B}, got {B}")
    fit_options = {"multistarts": 0, **(fit_options or {})}
    seed_int = _seed_entropy(seed)

    fits = {}

    def fitted(name):
        if name not in fits:
            if point_fit is not None and point_fit.family == name:
                fits[name] = point_fit
            else:
                fit_seed = int(child_seed(seed, 2**31 - 1).generate_state(1)[0])
                fits[name] = fit_cml(name, series, seed=fit_seed, compute_info=False)
            if not fits[name].converged:
                raise NonConvergence(f"{name} fit on the observed series did not converge",
                                     fits[name])
        return fits[name]

    if scenario.parametric_estimator:
        fam = get_family(scenario.estimator)
        est_fit = fitted(fam.name)
        theta_hat = est_fit.theta
        point = PredictiveEstimate(model_predictive_prob(est_fit.model, x_n, S),
                                   f"parametric:{fam.name}", x_n, S)
    else:
        theta_hat = None
        point = predictive_prob_nonparam(series, x_n, S)
        if not point.support_flag:
            raise DegeneratePoint(f"x_n={x_n} never occurs before the last observation")

    if scenario.parametric_generator:
        generator = fitted(scenario.generator).model
    else:
        generator = empirical_transition_model(series)

    job = _ReplicateJob(generator, len(series), scenario.estimator, theta_hat, x_n, S,
                        seed, fit_options)
    values = _map_replicates(job, B, n_jobs)
    failures = sum(v is None for v in values)
    if failures > MAX_FAILURE_RATE * B:
        raise TooManyRefitFailures(f"{failures} of {B} bootstrap refits failed")
    reps = np.array([v for v in values if v is not None], dtype=float)
    errors = reps - point.value
    return BootstrapResult(
        scenario=scenario,
        point=point,
        replicates=reps,
        errors_L=errors,
        ci_basic=basic_interval(point.value, errors, delta),
        ci_percentile=percentile_interval(reps, delta),
        B=B,
        seed=seed_int,
        refit_failures=failures,
    )
