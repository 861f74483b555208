"""Monte Carlo coverage studies for predictive-probability intervals.

Each repetition simulates a series from a known data-generating process,
takes its last value as ``x_n``, builds the configured interval and checks
it against the target at that ``x_n``. Repetition ``k`` at sample size ``n``
uses ``SeedSequence(seed, spawn_key=(n, k, .))`` so results are identical
for any worker count.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .asymptotic import delta_ci_param, nonparam_ci
from .bootstrap import NONPARAMETRIC, BootstrapScenario, child_seed, run_bootstrap
from .estimation import fit_cml
from .exceptions import CountPredError
from .models import (
    FAMILIES,
    InarchModel,
    InarModel,
    NegBinomial,
    Poisson,
    get_family,
    model_from_config,
    model_to_config,
)
from .prediction import _as_set, model_predictive_prob
from .series import PredictionSet

__all__ = [
    "ExperimentConfig",
    "CoverageRow",
    "CoverageReport",
    "standard_dgps",
    "pseudo_true_theta",
    "pseudo_true_target",
    "run_experiment",
    "write_report",
    "read_experiment_config",
    "REPORT_COLUMNS",
]

REPORT_COLUMNS = ["dgp", "prediction", "ci_method", "n", "coverage", "mean_length",
                  "K_effective", "seed"]
CI_METHODS = ("asymptotic", "bootstrap")
TARGETS = ("auto", "exact", "pseudo-true")
PSEUDO_TRUE_N = 10**6


def standard_dgps() -> dict:
    """The three mean-2 processes of the simulation design."""
    return {
        "poi-inar": InarModel(0.5, Poisson(1.0)),
        "nb-inar": InarModel(0.5, NegBinomial(2.0, 2.0 / 3.0)),
        "inarch": InarchModel(1.0, 0.5),
    }


def _dgp_key(dgp) -> str:
    cfg = model_to_config(dgp)
    return cfg.pop("family") + "(" + ",".join(f"{k}={float(v):g}" for k, v in cfg.items()) + ")"


@dataclass(frozen=True)
class ExperimentConfig:
    """One cell family of a coverage study.

    ``ci_method="bootstrap"`` yields both a basic and a percentile row per
    sample size. ``generator`` picks the bootstrap pseudo-series generator
    (a family name or ``"npara"``); it defaults to the prediction method.
    """

    dgp: InarModel | InarchModel
    prediction: str
    ci_method: str = "asymptotic"
    n_list: tuple = (500,)
    K: int = 200
    S: PredictionSet = field(default_factory=lambda: PredictionSet.finite([1, 2]))
    delta: float = 0.05
    seed: int = 0
    B: int = 200
    generator: str | None = None
    target: str = "auto"
    multistarts: int = 5

    def __post_init__(self):
        pred = str(self.prediction).lower()
        if pred != NONPARAMETRIC and pred not in FAMILIES:
            raise ValueError(f"unknown prediction method {self.prediction!r}")
        object.__setattr__(self, "prediction", pred)
        if self.ci_method not in CI_METHODS:
            raise ValueError(f"ci_method must be one of {CI_METHODS}")
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}")
        object.__setattr__(self, "S", _as_set(self.S))
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if self.K < 10:
            raise ValueError("K must be at least 10")
        if any(n < 50 for n in self.n_list):
            raise ValueError("every n must be at least 50")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.ci_method == "bootstrap":
            gen = self.prediction if self.generator is None else self.generator
            BootstrapScenario(gen, self.prediction)
            object.__setattr__(self, "generator", BootstrapScenario(gen, pred).generator)

    @property
    def dgp_label(self) -> str:
        return _dgp_key(self.dgp)

    @property
    def method_labels(self) -> tuple[str, ...]:
        if self.ci_method == "asymptotic":
            return ("asymptotic",)
        return (f"bootstrap-basic({self.generator})", f"bootstrap-percentile({self.generator})")

    def resolved_target(self) -> str:
        """``exact`` unless a parametric bootstrap target differs from the DGP row."""
        if self.target != "auto":
            return self.target
        if (self.ci_method == "bootstrap" and self.prediction != NONPARAMETRIC
                and self.prediction != self.dgp.family):
            return "pseudo-true"
        return "exact"


# ------------------------------------------------------------- pseudo-true

_THETA_CACHE: dict = {}


def pseudo_true_theta(dgp, family, seed: int = 0, n: int = PSEUDO_TRUE_N,
                      cache_dir=None) -> np.ndarray:
    """CML estimate of ``family`` on ``n`` draws from ``dgp``.

    Memoized per (dgp, family, seed, n); with ``cache_dir`` also stored as
    JSON so later processes skip the large simulation.
    """
    fam = get_family(family)
    key = (_dgp_key(dgp), fam.name, int(seed), int(n))
    path = None
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
        path = os.path.join(cache_dir, "pseudo_true_{}_{}_{}_{}.json".format(*key))
    theta = _THETA_CACHE.get(key)
    if theta is None and path is not None and os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            theta = np.array(json.load(fh)["theta"], dtype=float)
    if theta is None:
        rng = np.random.default_rng(child_seed(seed, 0x5EED))
        x = dgp.simulate(n, rng=rng)
        theta = fit_cml(fam, x, seed=seed, compute_info=False, strict=True).theta
    _THETA_CACHE[key] = theta
    # a value memoized earlier in this process still lands in the requested directory
    if path is not None and not os.path.exists(path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"dgp": key[0], "family": key[1], "seed": key[2], "n": key[3],
                       "theta": [float(t) for t in theta]}, fh)
    return theta
    rng = np.random.default_rng(child_seed(seed, 0x5EED))
    x = dgp.simulate(n, rng=rng)
    theta = fit_cml(fam, x, seed=seed, compute_info=False, strict=True).theta
    _THETA_CACHE[key] = theta
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"dgp": key[0], "family": key[1], "seed": key[2], "n": key[3],
                       "theta": [float(t) for t in theta]}, fh)
    return theta


def pseudo_true_target(dgp, prediction_family, x_n: int, S, seed: int = 0,
                       n: int = PSEUDO_TRUE_N, cache_dir=None) -> float:
    """Predictive probability of the best-fitting member of ``prediction_family``.

    Examples
    --------
    >>> pseudo_true_target(standard_dgps()["poi-inar"], "poi-inar", 1, ">=0")
    1.0
    """
    S = _as_set(S)
    if S.is_ray and S.threshold == 0:
        return 1.0
    fam = get_family(prediction_family)
    theta = pseudo_true_theta(dgp, fam, seed, n, cache_dir)
    return model_predictive_prob(fam.model(theta), x_n, S)


# ------------------------------------------------------------------ runner


@dataclass(frozen=True)
class CoverageRow:
    dgp: str
    prediction: str
    ci_method: str
    n: int
    coverage: float
    mean_length: float
    K_effective: int
    seed: int
    runtime: float = field(default=0.0, compare=False)

    def as_csv_dict(self) -> dict:
        return {"dgp": self.dgp, "prediction": self.prediction, "ci_method": self.ci_method,
                "n": self.n, "coverage": repr(self.coverage),
                "mean_length": repr(self.mean_length), "K_effective": self.K_effective,
                "seed": self.seed}


@dataclass(frozen=True)
class CoverageReport:
    rows: tuple[CoverageRow, ...] = ()
    failures: dict = field(default_factory=dict, compare=False)

    def __add__(self, other: "CoverageReport") -> "CoverageReport":
        return CoverageReport(self.rows + other.rows, {**self.failures, **other.failures})

    def get(self, ci_method: str | None = None, n: int | None = None) -> CoverageRow:
        hits = [r for r in self.rows
                if (ci_method is None or r.ci_method == ci_method) and (n is None or r.n == n)]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match ci_method={ci_method!r}, n={n!r}")
        return hits[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow(row.as_csv_dict())
        return buf.getvalue()


def write_report(report: CoverageReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(report.to_csv())


def _truth(config: ExperimentConfig, x_n: int, cache_dir) -> float:
    if config.resolved_target() == "pseudo-true":
        return pseudo_true_target(config.dgp, config.prediction, x_n, config.S,
                                  config.seed, cache_dir=cache_dir)
    return model_predictive_prob(config.dgp, x_n, config.S)


def _one_rep(config: ExperimentConfig, n: int, k: int, cache_dir=None):
    """(covered, length) per method label, or the failure's class name."""
    rng = np.random.default_rng(child_seed(config.seed, n, k, 0))
    x = config.dgp.simulate(n, rng=rng)
    x_n = x.last
    fit_seed = int(child_seed(config.seed, n, k, 2).generate_state(1)[0])
    try:
        if config.ci_method == "asymptotic":
            if config.prediction == NONPARAMETRIC:
                cis = [nonparam_ci(x, x_n, config.S, config.delta)]
            else:
                fit = fit_cml(config.prediction, x, multistarts=config.multistarts,
                              seed=fit_seed)
                cis = [delta_ci_param(fit, x_n, config.S, config.delta)[0]]
        else:
            scenario = BootstrapScenario(config.generator, config.prediction)
            point_fit = None
            if scenario.parametric_estimator:
                point_fit = fit_cml(config.prediction, x, multistarts=config.multistarts,
                                    seed=fit_seed, compute_info=False)
            res = run_bootstrap(x, scenario, config.S, x_n, B=config.B, delta=config.delta,
                                seed=child_seed(config.seed, n, k, 1), point_fit=point_fit)
            cis = [res.ci_basic, res.ci_percentile]
    except CountPredError as exc:
        return type(exc).__name__
    truth = _truth(config, x_n, cache_dir)
    return [(ci.covers(truth), ci.length) for ci in cis]


def _run_reps(config, n, ks, cache_dir):
    return [_one_rep(config, n, k, cache_dir) for k in ks]


def run_experiment(config: ExperimentConfig, n_jobs: int = 1, cache_dir=None,
                   progress: bool = False) -> CoverageReport:
    """Coverage and mean length per (method, n) over ``config.K`` repetitions.

    Failed repetitions (no convergence, singular information, too few
    visits of ``x_n``, ...) are dropped; ``K_effective`` counts the rest and
    ``report.failures`` tallies the reasons.
    """
    rows = []
    failures: dict = {}
    if config.resolved_target() == "pseudo-true":
        # fill the cache before any worker needs it
        pseudo_true_theta(config.dgp, config.prediction, config.seed, cache_dir=cache_dir)
    for n in config.n_list:
        start = time.perf_counter()
        ks = list(range(config.K))
        if n_jobs > 1:
            chunks = [ks[i::n_jobs] for i in range(n_jobs)]
            results = [None] * config.K
            with ProcessPoolExecutor(max_workers=n_jobs) as pool:
                futures = pool.map(_run_reps, [config] * n_jobs, [n] * n_jobs, chunks,
                                   [cache_dir] * n_jobs)
                for idx, vals in zip(chunks, futures):
                    for k, v in zip(idx, vals):
                        results[k] = v
        else:
            results = _run_reps(config, n, ks, cache_dir)
        ok = [r for r in results if not isinstance(r, str)]
        for r in results:
            if isinstance(r, str):
                failures[(n, r)] = failures.get((n, r), 0) + 1
        elapsed = time.perf_counter() - start
        for j, label in enumerate(config.method_labels):
            covered = [r[j][0] for r in ok]
            lengths = [r[j][1] for r in ok]
            k_eff = len(ok)
            rows.append(CoverageRow(
                dgp=config.dgp_label,
                prediction=config.prediction,
                ci_method=label,
                n=n,
                coverage=float(np.mean(covered)) if k_eff else float("nan"),
                mean_length=float(np.mean(lengths)) if k_eff else float("nan"),
                K_effective=k_eff,
                seed=config.seed,
                runtime=elapsed,
            ))
        if progress:
            print(f"[mc] {config.dgp_label} {config.prediction} {config.ci_method} n={n}: "
                  f"{len(ok)}/{config.K} reps in {elapsed:.1f}s", file=sys.stderr)
    return CoverageReport(tuple(rows), failures)


# ------------------------------------------------------------ config files


def read_experiment_config(path) -> ExperimentConfig:
    """Parse a key-value experiment file.

    ``[dgp]`` holds ``family`` plus model parameters; ``[experiment]`` holds
    ``prediction``, ``ci_method``, ``n`` (comma list), ``K``, ``B``, ``S``
    (``1,2`` or ``>=2``), ``delta``, ``seed``, ``generator``, ``target``.
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    dgp = model_from_config(parser["dgp"])
    exp = parser["experiment"]
    kwargs = {"dgp": dgp, "prediction": exp.get("prediction", "poi-inar")}
    if "ci_method" in exp:
        kwargs["ci_method"] = exp["ci_method"]
    if "n" in exp:
        kwargs["n_list"] = tuple(int(v) for v in exp["n"].split(","))
    for key, conv in (("K", int), ("B", int), ("delta", float), ("seed", int),
                      ("multistarts", int)):
        if key in exp:
            kwargs[key] = conv(exp[key])
    if "S" in exp:
        kwargs["S"] = PredictionSet.parse(exp["S"])
    for key in ("generator", "target"):
        if key in exp:
            kwargs[key] = exp[key]
    return ExperimentConfig(**kwargs)
