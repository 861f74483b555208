"""Core data types, CSV ingestion and descriptive statistics for count series."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .exceptions import DegenerateSeries, ParseError

__all__ = [
    "CountSeries",
    "PredictionSet",
    "ConfidenceInterval",
    "SummaryReport",
    "load_series",
    "write_series",
    "summary",
    "set_contains",
    "sample_acf",
    "sample_pacf",
]

CI_METHODS = (
    "asymptotic-parametric",
    "asymptotic-nonparametric",
    "bootstrap-basic",
    "bootstrap-percentile",
)


def _as_counts(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"count series must be one-dimensional, got shape {arr.shape}")
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise ValueError("count series must contain integer values only")
    elif arr.dtype.kind not in "iub":
        raise ValueError(f"count series must be numeric, got dtype {arr.dtype}")
    arr = arr.astype(np.int64)
    if np.any(arr < 0):
        raise ValueError("count series must be non-negative")
    return arr


@dataclass(frozen=True, eq=False)
class CountSeries:
    """An observed stretch X_1, ..., X_n of non-negative integers.

    The underlying array is read-only so instances can be shared between
    workers.
    """

    values: np.ndarray
    name: str = "series"

    def __post_init__(self):
        arr = _as_counts(self.values)
        if arr.size < 2:
            raise ValueError("a count series needs at least two observations")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)

    def __iter__(self):
        return iter(self.values.tolist())

    def __getitem__(self, idx):
        return self.values[idx]

    def __eq__(self, other) -> bool:
        if not isinstance(other, CountSeries):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"CountSeries(name={self.name!r}, n={len(self)})"

    @property
    def n(self) -> int:
        return len(self)

    @property
    def last(self) -> int:
        return int(self.values[-1])


@dataclass(frozen=True)
class PredictionSet:
    """A set S of counts: either a finite set or a ray ``{x : x >= a}``.

    Rays are kept symbolic, so membership is O(1) however large S is.
    """

    elements: tuple[int, ...] | None = None
    threshold: int | None = None

    def __post_init__(self):
        if (self.elements is None) == (self.threshold is None):
            raise ValueError("give exactly one of elements or threshold")
        if self.elements is not None:
            elems = tuple(sorted({int(e) for e in self.elements}))
            if any(e < 0 for e in elems):
                raise ValueError("prediction set elements must be non-negative")
            object.__setattr__(self, "elements", elems)
        else:
            a = int(self.threshold)
            if a < 0:
                raise ValueError("ray threshold must be non-negative")
            object.__setattr__(self, "threshold", a)

    @classmethod
    def finite(cls, elements: Iterable[int]) -> "PredictionSet":
        return cls(elements=tuple(elements))

    @classmethod
    def ray(cls, threshold: int) -> "PredictionSet":
        return cls(threshold=threshold)

    @classmethod
    def parse(cls, text: str) -> "PredictionSet":
        """Parse ``"1,2"`` (finite), ``"{1,2}"`` or ``">=2"`` (ray)."""
        text = text.strip()
        if text.startswith(">="):
            return cls.ray(int(text[2:]))
        text = text.strip("{}").strip()
        if not text:
            return cls.finite(())
        try:
            return cls.finite(int(tok) for tok in text.split(","))
        except ValueError as exc:
            raise ValueError(f"cannot parse prediction set {text!r}") from exc

    @property
    def is_ray(self) -> bool:
        return self.threshold is not None

    @property
    def max_finite(self) -> int:
        """Largest element, or the threshold for a ray (-1 for the empty set)."""
        if self.is_ray:
            return self.threshold
        return self.elements[-1] if self.elements else -1

    def __contains__(self, x) -> bool:
        x = int(x)
        if x < 0:
            return False
        if self.is_ray:
            return x >= self.threshold
        return x in self.elements

    def mask(self, support) -> np.ndarray:
        support = np.asarray(support)
        if self.is_ray:
            return support >= self.threshold
        return np.isin(support, self.elements)

    def complement_within(self, upper: int) -> "PredictionSet":
        """Complement of S inside {0, ..., upper}."""
        return PredictionSet.finite(x for x in range(upper + 1) if x not in self)

    def finite_complement(self) -> "PredictionSet":
        """For a ray {x >= a}: the finite set {0, ..., a-1}."""
        if not self.is_ray:
            raise ValueError("only rays have a finite complement")
        return PredictionSet.finite(range(self.threshold))

    def __str__(self) -> str:
        if self.is_ray:
            return f"{{x : x ≥ {self.threshold}}}"
        return "{" + ", ".join(str(e) for e in self.elements) + "}"

    def to_token(self) -> str:
        """Compact form accepted by :meth:`parse`."""
        if self.is_ray:
            return f">={self.threshold}"
        return ",".join(str(e) for e in self.elements)


def set_contains(S: PredictionSet, x: int) -> bool:
    return x in S


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    method: str
    clipped: bool = False

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")
        if self.method not in CI_METHODS:
            raise ValueError(f"unknown interval method {self.method!r}")
        if self.lower > self.upper:
            raise ValueError("lower bound exceeds upper bound")

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def clip(self) -> "ConfidenceInterval":
        lo, hi = min(max(self.lower, 0.0), 1.0), min(max(self.upper, 0.0), 1.0)
        return ConfidenceInterval(lo, hi, self.level, self.method, clipped=True)


# --------------------------------------------------------------------------- io


def load_series(path, column: int | str = 0, header: bool | None = None,
                name: str | None = None) -> CountSeries:
    """Read one column of a comma-separated file as a count series.

    Parameters
    ----------
    path : path-like
        UTF-8 CSV file, one observation per row.
    column : int or str, default=0
        Column index, or column name (requires a header row).
    header : bool, optional
        Whether the first row is a header. ``None`` skips the first row only
        if it does not parse as an integer in the selected column.

    Raises
    ------
    OSError
        The file cannot be read.
    ParseError
        An entry is missing, negative or not an integer. The 1-based row
        index and the offending token are reported.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise ParseError(1, "", "missing: the file is empty")

    start = 0
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        hdr = [c.strip() for c in rows[0]]
        if column not in hdr:
            raise ParseError(1, column, "not a column of the header")
        col = hdr.index(column)
        start = 1
    else:
        col = int(column)
        if header is None:
            first = rows[0][col].strip() if col < len(rows[0]) else ""
            header = not first.lstrip("-").isdigit()
        start = 1 if header else 0

    values = []
    for i, row in enumerate(rows[start:], start=start + 1):
        token = row[col].strip() if col < len(row) else ""
        if token == "":
            raise ParseError(i, token, "missing")
        try:
            v = int(token)
        except ValueError:
            try:
                f = float(token)
            except ValueError:
                raise ParseError(i, token) from None
            if not f.is_integer():
                raise ParseError(i, token)
            v = int(f)
        if v < 0:
            raise ParseError(i, token)
        values.append(v)
    if len(values) < 2:
        raise ParseError(start + len(values) + 1, "", "missing: need at least two observations")
    return CountSeries(np.array(values, dtype=np.int64), name=name or path.stem)


def write_series(series: CountSeries, path, header: str | None = "count") -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow([header])
        writer.writerows([v] for v in series.values.tolist())


# ------------------------------------------------------------------- summaries


def sample_acf(x, max_lag: int) -> np.ndarray:
    """Biased sample autocorrelations rho(0..max_lag).

    A constant series has no defined ACF; zeros are returned beyond lag 0.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    xc = x - x.mean()
    c0 = float(xc @ xc) / n
    acf = np.zeros(max_lag + 1)
    acf[0] = 1.0
    if c0 == 0.0:
        return acf
    for k in range(1, max_lag + 1):
        acf[k] = float(xc[k:] @ xc[:-k]) / n / c0
    return acf


def sample_pacf(x, max_lag: int) -> np.ndarray:
    """Partial autocorrelations 1..max_lag via the Durbin-Levinson recursion."""
    rho = sample_acf(x, max_lag)
    pacf = np.zeros(max_lag)
    phi = np.zeros(max_lag + 1)
    v = 1.0
    for k in range(1, max_lag + 1):
        if v <= 0.0:
            break
        num = rho[k] - phi[1:k] @ rho[k - 1:0:-1]
        a = num / v
        prev = phi.copy()
        phi[k] = a
        phi[1:k] = prev[1:k] - a * prev[k - 1:0:-1]
        v *= 1.0 - a * a
        pacf[k - 1] = a
    return pacf


@dataclass(frozen=True)
class SummaryReport:
    name: str
    n: int
    mean: float
    variance: float
    dispersion_index: float
    acf: np.ndarray = field(repr=False)
    pacf: np.ndarray = field(repr=False)
    degenerate: bool = False

    def rows(self) -> list[tuple[str, float]]:
        out = [
            ("n", self.n),
            ("mean", self.mean),
            ("variance", self.variance),
            ("dispersion_index", self.dispersion_index),
            ("degenerate", int(self.degenerate)),
        ]
        out += [(f"acf_{k}", float(v)) for k, v in enumerate(self.acf) if k > 0]
        out += [(f"pacf_{k + 1}", float(v)) for k, v in enumerate(self.pacf)]
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["statistic", "value"])
        for key, value in self.rows():
            writer.writerow([key, repr(float(value)) if isinstance(value, float) else value])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [
            f"series           {self.name} (n = {self.n})",
            f"mean             {self.mean:.6g}",
            f"variance         {self.variance:.6g}",
            f"dispersion index {self.dispersion_index:.6g}",
        ]
        if self.degenerate:
            lines.append("note             zero variance: ACF/PACF undefined, reported as 0")
        lines.append("lag   acf        pacf")
        for k in range(1, self.acf.size):
            lines.append(f"{k:<5d} {self.acf[k]: .6g}  {self.pacf[k - 1]: .6g}")
        return "\n".join(lines)


def summary(series: CountSeries, max_lag: int = 10) -> SummaryReport:
    """Mean, variance, dispersion index and sample (P)ACF of a count series.

    The variance is the unbiased sample variance; the ACF uses the biased
    (divide-by-n) autocovariance.
    """
    x = series.values.astype(float)
    n = x.size
    if max_lag < 1:
        raise ValueError("max_lag must be positive")
    if n < max_lag + 2:
        raise ValueError(f"need n >= max_lag + 2 = {max_lag + 2}, got {n}")
    mean = float(x.mean())
    if mean == 0.0:
        raise DegenerateSeries("sample mean is zero; dispersion index undefined")
    var = float(x.var(ddof=1))
    degenerate = var == 0.0
    acf = sample_acf(x, max_lag)
    pacf = np.zeros(max_lag) if degenerate else sample_pacf(x, max_lag)
    return SummaryReport(series.name, n, mean, var, var / mean, acf, pacf, degenerate)


def as_series(X, name: str = "series") -> CountSeries:
    if isinstance(X, CountSeries):
        return X
    return CountSeries(_as_counts(np.ravel(np.asarray(X))), name=name)


