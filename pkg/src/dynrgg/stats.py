"""Per-step observers and estimators for the dynamic graph process."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import stats as sps

CONNECTED = "connected"
DISCONNECTED = "disconnected"
POISSON_MIN_SAMPLES = 500


@dataclass(frozen=True)
class TransitionStats:
    b: int
    d: int
    s_count: int
    k1_before: int
    k1_after: int


def classify_transition(isolated_before: Iterable[int], isolated_after: Iterable[int]) -> TransitionStats:
    """Births, deaths and survivals of isolated vertices between two steps."""
    before, after = set(isolated_before), set(isolated_after)
    return TransitionStats(
        b=len(after - before),
        d=len(before - after),
        s_count=len(before & after),
        k1_before=len(before),
        k1_after=len(after),
    )


def classify_masks(before: np.ndarray, after: np.ndarray) -> tuple[int, int, int]:
    """(b, d, s) from boolean isolation masks over the same agents."""
    s = int(np.count_nonzero(before & after))
    return int(np.count_nonzero(after)) - s, int(np.count_nonzero(before)) - s, s


@dataclass(frozen=True)
class PeriodRecord:
    kind: str
    start_step: int
    length: int
    complete: bool


def record_connectivity(sequence) -> list[PeriodRecord]:
    """Maximal runs of a connectivity sequence; the first and last runs are censored."""
    seq = np.asarray(sequence, dtype=bool)
    if seq.size == 0:
        raise ValueError("need at least one observation")
    cuts = np.flatnonzero(seq[1:] != seq[:-1]) + 1
    starts = np.concatenate([[0], cuts])
    ends = np.concatenate([cuts, [seq.size]])
    last = len(starts) - 1
    return [
        PeriodRecord(CONNECTED if seq[a] else DISCONNECTED, int(a), int(b - a), 0 < k < last)
        for k, (a, b) in enumerate(zip(starts, ends))
    ]


@dataclass
class Aggregate:
    """Count, sum, sum of squares and histogram; merge is exact on integer data."""

    count: int = 0
    sum: float = 0
    sum_of_squares: float = 0
    histogram: Counter = field(default_factory=Counter)

    def add(self, value) -> None:
        if isinstance(value, (np.integer, np.bool_)):
            value = int(value)
        self.count += 1
        self.sum += value
        self.sum_of_squares += value * value
        self.histogram[value] += 1

    def extend(self, values) -> None:
        for v in values:
            self.add(v)

    def merge(self, other: "Aggregate") -> "Aggregate":
        return Aggregate(self.count + other.count, self.sum + other.sum,
                         self.sum_of_squares + other.sum_of_squares,
                         self.histogram + other.histogram)

    @property
    def mean(self) -> float:
        return self.sum / self.count if self.count else math.nan

    @property
    def variance(self) -> float:
        """Unbiased sample variance."""
        if self.count < 2:
            return math.nan
        return (self.count * self.sum_of_squares - self.sum * self.sum) / (self.count * (self.count - 1))


def mean_ci(agg: Aggregate) -> tuple[float, float]:
    """Mean and half-width of the 95% normal-approximation interval.

    With fewer than two observations the half-width is NaN (no interval).
    """
    if agg.count == 0:
        return math.nan, math.nan
    if agg.count < 2:
        return agg.mean, math.nan
    return agg.mean, 1.96 * math.sqrt(max(agg.variance, 0.0)) / math.sqrt(agg.count)


def mean_se(values) -> tuple[float, float]:
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        return (float(x.mean()) if x.size else math.nan), math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def batch_means_se(values, batches: int = 100) -> tuple[float, float]:
    """Mean of a correlated series and its batch-means standard error."""
    x = np.asarray(values, dtype=float)
    if x.size < 2 * batches:
        return mean_se(x)
    per = x.size // batches
    means = x[: per * batches].reshape(batches, per).mean(axis=1)
    return float(x.mean()), float(means.std(ddof=1) / math.sqrt(batches))


@dataclass
class PoissonFit:
    lam: float
    total: int
    mean: float = math.nan
    variance: float = math.nan
    mean_ratio: float = math.nan
    dispersion: float = math.nan
    observed: list = field(default_factory=list)
    expected: list = field(default_factory=list)
    chi2: float = math.nan
    p_value: float = math.nan
    flag: str = ""

    @property
    def ok(self) -> bool:
        return not self.flag


def poisson_fit(histogram: Mapping[int, int] | Aggregate, lam: float) -> PoissonFit:
    """Compare a count histogram with Poisson(lam) on the bins 0, 1, 2, >=3."""
    if isinstance(histogram, Aggregate):
        histogram = histogram.histogram
    if not lam > 0:
        raise ValueError("lambda must be positive")
    total = int(sum(histogram.values()))
    if total == 0:
        return PoissonFit(lam, 0, flag="empty histogram")
    values = np.array(sorted(histogram), dtype=float)
    counts = np.array([histogram[int(v)] for v in values], dtype=float)
    mean = float(np.dot(values, counts) / total)
    variance = float(np.dot((values - mean) ** 2, counts) / (total - 1)) if total > 1 else math.nan
    observed = [float(counts[values == k].sum()) for k in (0, 1, 2)]
    observed.append(total - sum(observed))
    probs = [sps.poisson.pmf(k, lam) for k in (0, 1, 2)]
    probs.append(sps.poisson.sf(2, lam))
    expected = [total * p for p in probs]
    chi2, p_value = sps.chisquare(observed, expected)
    fit = PoissonFit(lam, total, mean, variance, mean / lam,
                     variance / mean if mean > 0 else math.nan,
                     observed, expected, float(chi2), float(p_value))
    if total < POISSON_MIN_SAMPLES:
        fit.flag = f"insufficient sample size ({total} < {POISSON_MIN_SAMPLES})"
    return fit


def correlations(columns: Mapping[str, np.ndarray]) -> dict[str, float]:
    """Pairwise Pearson correlations; NaN where a column is constant."""
    names = list(columns)
    out = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            x, y = np.asarray(columns[a], float), np.asarray(columns[b], float)
            if x.std() == 0 or y.std() == 0:
                out[f"{a}~{b}"] = math.nan
            else:
                out[f"{a}~{b}"] = float(np.corrcoef(x, y)[0, 1])
    return out
