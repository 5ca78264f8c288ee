"""Histogram construction and Otsu thresholding.

The threshold is chosen by *minimising the within-class variance*

    sigma2(t) = P_w(t) * var_w(t) + P_nw(t) * var_nw(t)

over the interior bin boundaries, where the water class is every bin below
``t``. Bin centres stand in for the samples when computing class moments.
The complementary between-class term ``P_w * P_nw * (mu_w - mu_nw)**2`` is
also reported: within + between equals the total variance of the histogram.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDistribution, EmptyInput, ParamError, UnitsError
from .raster import Raster, Scene, Units, linear_to_db

DEFAULT_NBINS = 256
# between / total variance below which a split is flagged low-confidence
MIN_BETWEEN_RATIO = 0.05


@dataclass(frozen=True, eq=False)
class Histogram:
    lo: float
    hi: float
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size < 2:
            raise ParamError("histogram needs at least 2 bins")
        if (counts < 0).any():
            raise ParamError("histogram counts must be non-negative")
        if not self.lo < self.hi:
            raise ParamError(f"histogram range must satisfy lo < hi, got ({self.lo}, {self.hi})")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @property
    def nbins(self) -> int:
        return self.counts.size

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.nbins

    def centers(self) -> np.ndarray:
        return self.lo + (np.arange(self.nbins) + 0.5) * self.width

    def edges(self) -> np.ndarray:
        return self.lo + np.arange(self.nbins + 1) * self.width


@dataclass(frozen=True)
class OtsuResult:
    threshold: float
    sigma_within: float
    p_w: float
    p_nw: float
    sigma_w2: float
    sigma_nw2: float
    sigma_between: float
    sigma_total: float
    index: int

    @property
    def separability(self) -> float:
        """Between-class share of the total variance, in [0, 1]."""
        return self.sigma_between / self.sigma_total if self.sigma_total > 0 else 0.0

    @property
    def low_confidence(self) -> bool:
        return self.separability < MIN_BETWEEN_RATIO


def build_histogram(r: Raster, nbins: int = DEFAULT_NBINS, range=None) -> Histogram:
    """Bin the valid pixels of ``r``.

    Without ``range`` the span of the valid values is used. With an explicit
    range, values outside it are clamped into the end bins. The last bin is
    closed above.
    """
    if nbins < 2:
        raise ParamError(f"nbins must be >= 2, got {nbins}")
    vals = r.valid_values()
    if vals.size == 0:
        raise EmptyInput("raster has no valid pixels")
    if range is None:
        lo, hi = float(vals.min()), float(vals.max())
        if lo == hi:
            raise DegenerateDistribution(f"all valid pixels equal {lo}")
    else:
        lo, hi = float(range[0]), float(range[1])
        if not lo < hi:
            raise ParamError(f"range must satisfy lo < hi, got {range}")
    idx = np.floor((vals - lo) / (hi - lo) * nbins).astype(np.int64)
    np.clip(idx, 0, nbins - 1, out=idx)
    return Histogram(lo, hi, np.bincount(idx, minlength=nbins))


def variance_terms(h: Histogram):
    """Class statistics for every interior boundary of ``h``.

    Returns a dict of arrays indexed by boundary ``i = 1 .. nbins-1``
    (position ``i - 1``): ``p_w``, ``p_nw``, ``mu_w``, ``mu_nw``,
    ``var_w``, ``var_nw``, ``within``, ``between`` and the scalar ``total``.
    Entries where one class is empty are NaN.
    """
    c = h.counts.astype(np.float64)
    n = c.sum()
    if n <= 0:
        raise EmptyInput("histogram is empty")
    x = h.centers()
    # centre on the global mean so the second moments stay well conditioned
    mu = (c * x).sum() / n
    d = x - mu
    total = (c * d * d).sum() / n

    n_w = np.cumsum(c)[:-1]
    s1_w = np.cumsum(c * d)[:-1]
    s2_w = np.cumsum(c * d * d)[:-1]
    n_nw = n - n_w
    s1_nw = (c * d).sum() - s1_w
    s2_nw = (c * d * d).sum() - s2_w

    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        m_w = s1_w / n_w
        m_nw = s1_nw / n_nw
        var_w = np.maximum(s2_w / n_w - m_w * m_w, 0.0)
        var_nw = np.maximum(s2_nw / n_nw - m_nw * m_nw, 0.0)
        p_w = n_w / n
        p_nw = n_nw / n
        empty = (n_w == 0) | (n_nw == 0)
        within = np.where(empty, np.nan, p_w * var_w + p_nw * var_nw)
        between = np.where(empty, np.nan, p_w * p_nw * (m_w - m_nw) ** 2)
    return {
        "p_w": p_w,
        "p_nw": p_nw,
        "mu_w": np.where(empty, np.nan, m_w + mu),
        "mu_nw": np.where(empty, np.nan, m_nw + mu),
        "var_w": np.where(empty, np.nan, var_w),
        "var_nw": np.where(empty, np.nan, var_nw),
        "within": within,
        "between": between,
        "total": total,
    }


def otsu_threshold(h: Histogram) -> OtsuResult:
    """Otsu threshold of a histogram by minimum within-class variance.

    Ties go to the smallest boundary. Raises DegenerateDistribution when
    fewer than two bins are occupied.
    """
    if h.total < 2 or np.count_nonzero(h.counts) < 2:
        raise DegenerateDistribution("histogram has fewer than two occupied bins")
    t = variance_terms(h)
    within = np.where(np.isnan(t["within"]), np.inf, t["within"])
    j = int(np.argmin(within))
    i = j + 1
    return OtsuResult(
        threshold=float(h.lo + i * h.width),
        sigma_within=float(t["within"][j]),
        p_w=float(t["p_w"][j]),
        p_nw=float(t["p_nw"][j]),
        sigma_w2=float(t["var_w"][j]),
        sigma_nw2=float(t["var_nw"][j]),
        sigma_between=float(t["between"][j]),
        sigma_total=float(t["total"]),
        index=i,
    )


def _band_db(r: Raster) -> Raster:
    if r.units is Units.LINEAR_POWER:
        return linear_to_db(r)
    if r.units is Units.DECIBEL:
        return r
    raise UnitsError(f"expected Decibel band, got {r.units.value}")


def band_otsu(r: Raster, nbins: int = DEFAULT_NBINS, band: str = "") -> OtsuResult:
    try:
        return otsu_threshold(build_histogram(_band_db(r), nbins))
    except DegenerateDistribution as exc:
        raise DegenerateDistribution(str(exc), band=band) from exc
    except EmptyInput as exc:
        raise EmptyInput(f"{band}: {exc}") from exc


def scene_otsu(s: Scene, nbins: int = DEFAULT_NBINS) -> tuple[OtsuResult, OtsuResult]:
    """Full Otsu results for the VV and VH bands of a scene (in dB)."""
    return band_otsu(s.vv, nbins, "VV"), band_otsu(s.vh, nbins, "VH")


def scene_thresholds(s: Scene, nbins: int = DEFAULT_NBINS) -> tuple[float, float]:
    vv, vh = scene_otsu(s, nbins)
    return vv.threshold, vh.threshold
