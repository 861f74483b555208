"""Point estimators of predictive probabilities P(X_{n+1} in S | X_n = x_n)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import TruncationTooTight
from .models import FiniteMarkovModel, get_family
from .series import PredictionSet, as_series

__all__ = [
    "PredictiveEstimate",
    "HStepEstimate",
    "model_predictive_prob",
    "predictive_prob_param",
    "predictive_prob_nonparam",
    "predictive_prob_from_row",
    "hstep_predictive_prob",
    "predictive_prob_nonparam_order_p",
]


@dataclass(frozen=True)
class PredictiveEstimate:
    value: float
    method: str
    x_n: int | tuple[int, ...]
    S: PredictionSet
    support_flag: bool = True

    def __post_init__(self):
        if not -1e-12 <= self.value <= 1 + 1e-12:
            raise ValueError(f"probability {self.value} outside [0, 1]")

    def __float__(self) -> float:
        return float(self.value)


def _as_set(S) -> PredictionSet:
    if isinstance(S, PredictionSet):
        return S
    if isinstance(S, str):
        return PredictionSet.parse(S)
    return PredictionSet.finite(S)


def model_predictive_prob(model, x_n: int, S) -> float:
    """Sum of the model's one-step transition row over S.

    A ray {x >= a} is evaluated as 1 minus the finite sum over {0..a-1}, so
    no tail truncation is involved.
    """
    S = _as_set(S)
    x_n = int(x_n)
    if isinstance(model, FiniteMarkovModel):
        return predictive_prob_from_row(model.row(x_n), S)
    finite = S.finite_complement() if S.is_ray else S
    if not finite.elements:
        total = 0.0
    else:
        row = model.transition_row(x_n, finite.max_finite)
        total = float(row[list(finite.elements)].sum())
    if S.is_ray:
        return float(min(max(1.0 - total, 0.0), 1.0))
    return min(total, 1.0)


def predictive_prob_param(family, theta, x_n: int, S) -> PredictiveEstimate:
    """Plug-in predictive probability of a fitted parametric family."""
    fam = get_family(family)
    S = _as_set(S)
    value = model_predictive_prob(fam.model(theta), x_n, S)
    return PredictiveEstimate(value, f"parametric:{fam.name}", int(x_n), S)


def _transition_hits(x: np.ndarray, x_n: int, S: PredictionSet) -> tuple[int, int]:
    at = x[:-1] == x_n
    visits = int(at.sum())
    hits = int((at & S.mask(x[1:])).sum())
    return hits, visits


def predictive_prob_nonparam(series, x_n: int, S) -> PredictiveEstimate:
    """Relative frequency of S-successors among visits to ``x_n``.

    Visits are counted over X_1..X_{n-1}. When ``x_n`` is never visited the
    estimate is 0 and ``support_flag`` is False.
    """
    S = _as_set(S)
    x = as_series(series).values
    hits, visits = _transition_hits(x, int(x_n), S)
    value = hits / visits if visits else 0.0
    return PredictiveEstimate(value, "nonparametric", int(x_n), S, visits > 0)


def predictive_prob_from_row(row: Mapping[int, float], S) -> float:
    S = _as_set(S)
    total = sum(row.values())
    if total > 1 + 1e-9:
        raise ValueError(f"row mass {total} exceeds 1")
    return float(sum(p for s, p in row.items() if s in S))


@dataclass(frozen=True)
class HStepEstimate:
    """h-step path probability with a bound on mass lost to truncation.

    The exact value lies in [value, value + tail_bound].
    """

    value: float
    tail_bound: float
    K: int


def hstep_predictive_prob(kernel, x_n: int, sets: Sequence, K: int | None = None,
                          max_tail: float = 1e-6) -> HStepEstimate:
    """P(X_{n+1} in S_1, ..., X_{n+h} in S_h | X_n = x_n).

    ``kernel`` is a parametric model (states 0..K) or a
    :class:`FiniteMarkovModel`. The probability vector is pushed through the
    kernel h times, zeroing states outside S_j after step j.

    Raises
    ------
    TruncationTooTight
        The propagated tail bound exceeds ``max_tail``.
    """
    sets = [_as_set(S) for S in sets]
    if not sets:
        raise ValueError("need at least one set (h >= 1)")
    x_n = int(x_n)
    if isinstance(kernel, FiniteMarkovModel):
        states = np.asarray(kernel.states)
        P = np.asarray(kernel.matrix)
        v = np.zeros(states.size)
        v[kernel.index(x_n)] = 1.0
        tails = np.zeros(states.size)
        K = int(states.max())
    else:
        if K is None:
            K = max([x_n] + [S.max_finite for S in sets])
            for _ in sets:
                K = max(K, kernel.row_support(K))
        if K < x_n:
            raise ValueError("truncation K must be at least x_n")
        states = np.arange(K + 1)
        P = kernel.transition_matrix(K, K)
        v = np.zeros(K + 1)
        v[x_n] = 1.0
        tails = np.clip(1.0 - P.sum(axis=1), 0.0, None)
    bound = 0.0
    for S in sets:
        bound += float(v @ tails)
        v = (v @ P) * S.mask(states)
    if bound > max_tail:
        raise TruncationTooTight(f"tail bound {bound:.3g} exceeds {max_tail:g}; increase K")
    return HStepEstimate(float(min(v.sum(), 1.0)), bound, int(K))


def predictive_prob_nonparam_order_p(series, context: Sequence[int], S) -> PredictiveEstimate:
    """Relative-frequency estimate conditioning on the last p values.

    ``context`` is chronological, ``(x_{n-p+1}, ..., x_n)``. Every window of
    p consecutive values that has a successor in the series is counted.
    """
    S = _as_set(S)
    context = tuple(int(c) for c in context)
    p = len(context)
    x = as_series(series).values
    if p < 1:
        raise ValueError("context must hold at least one value")
    if x.size < p + 1:
        raise ValueError(f"need n >= p + 1 = {p + 1}")
    windows = sliding_window_view(x[:-1], p)
    match = np.all(windows == np.asarray(context), axis=1)
    visits = int(match.sum())
    hits = int((match & S.mask(x[p:])).sum())
    value = hits / visits if visits else 0.0
    return PredictiveEstimate(value, "nonparametric", context, S, visits > 0)
