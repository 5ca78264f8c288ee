"""Box-plot statistics, monthly grouping and rainfall/extent lag correlation."""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDistribution, DomainError, EmptyInput, EmptyPeriod, ShapeError
from .raster import SeriesTable

DEFAULT_MAX_LAG = 3


@dataclass(frozen=True)
class BoxStats:
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    iqr: float
    whisker_lo: float
    whisker_hi: float
    outliers: tuple


def quantile_sorted(xs, p: float) -> float:
    """Linear-interpolation quantile of sorted data with h = (n - 1) * p."""
    h = (len(xs) - 1) * p
    lo = math.floor(h)
    if lo + 1 >= len(xs):
        return float(xs[-1])
    return float(xs[lo] + (h - lo) * (xs[lo + 1] - xs[lo]))


def box_stats(values) -> BoxStats:
    """Five-number summary with Tukey whiskers at 1.5 IQR.

    A whisker is the most extreme sample inside its fence; if that sample
    lies beyond the quartile (possible for tiny n) the whisker is pinned to
    the quartile.
    """
    xs = sorted(float(v) for v in values)
    if not xs:
        raise EmptyInput("box_stats needs at least one value")
    if not all(math.isfinite(v) for v in xs):
        raise DomainError("box_stats input contains non-finite values")
    q1 = quantile_sorted(xs, 0.25)
    med = quantile_sorted(xs, 0.5)
    q3 = quantile_sorted(xs, 0.75)
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = [v for v in xs if lo_fence <= v <= hi_fence]
    w_lo = min(inside[0], q1) if inside else q1
    w_hi = max(inside[-1], q3) if inside else q3
    outliers = tuple(v for v in xs if v < lo_fence or v > hi_fence)
    return BoxStats(len(xs), xs[0], q1, med, q3, xs[-1], iqr, w_lo, w_hi, outliers)


def group_by_month(series: SeriesTable) -> list[list[float]]:
    """Twelve buckets (January first) of the series values by calendar month."""
    buckets = [[] for _ in range(12)]
    for d, v in zip(series.dates, series.values.tolist()):
        buckets[d.month - 1].append(v)
    return buckets


def monthly_mean_series(series: SeriesTable) -> SeriesTable:
    """Average entries sharing a year-month; each result dated to the 1st."""
    groups = {}
    for d, v in zip(series.dates, series.values.tolist()):
        groups.setdefault((d.year, d.month), []).append(v)
    keys = sorted(groups)
    dates = tuple(dt.date(y, m, 1) for y, m in keys)
    values = [math.fsum(groups[k]) / len(groups[k]) for k in keys]
    return SeriesTable(dates, values, series.label, series.units)


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeError(f"pearson needs equal-length vectors, got {x.shape} and {y.shape}")
    if x.size < 3:
        raise ShapeError("pearson needs at least 3 pairs")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0 or syy == 0:
        raise DegenerateDistribution("pearson input is constant")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


@dataclass(frozen=True)
class LagCorrResult:
    lags: tuple  # (lag, r, n) triples
    best_lag: int

    @property
    def best_r(self) -> float:
        return dict((k, r) for k, r, _ in self.lags)[self.best_lag]


def _month_index(d: dt.date) -> int:
    return d.year * 12 + d.month - 1


def lag_correlation(rain: SeriesTable, extent: SeriesTable, max_lag: int = DEFAULT_MAX_LAG) -> LagCorrResult:
    """Correlate rain in month t with extent in month t + k for k = 0..max_lag.

    Both series must hold at most one entry per month (see
    ``monthly_mean_series``). ``best_lag`` maximises r, ties to the
    smaller lag.
    """
    if max_lag < 0:
        raise ShapeError("max_lag must be >= 0")
    rain_by = {_month_index(d): v for d, v in zip(rain.dates, rain.values.tolist())}
    ext_by = {_month_index(d): v for d, v in zip(extent.dates, extent.values.tolist())}
    if len(rain_by) != len(rain) or len(ext_by) != len(extent):
        raise ShapeError("series must be monthly (one entry per month)")
    overlap = len(rain_by.keys() & ext_by.keys())
    if overlap < max_lag + 3:
        raise EmptyPeriod(f"series overlap {overlap} months; need at least {max_lag + 3}")
    out = []
    for k in range(max_lag + 1):
        months = sorted(t for t in rain_by if t + k in ext_by)
        if len(months) < 3:
            raise EmptyPeriod(f"fewer than 3 pairs at lag {k}")
        x = [rain_by[t] for t in months]
        y = [ext_by[t + k] for t in months]
        out.append((k, pearson(x, y), len(months)))
    best = max(out, key=lambda t: (t[1], -t[0]))[0]
    return LagCorrResult(tuple(out), best)
