"""Daily precipitation stacks: monthly/annual aggregation and zonal means.

All summations walk the layers in ascending date order, one array add per
layer, so results are bit-reproducible and match a per-cell scalar loop in
the same order.
"""
from __future__ import annotations

import calendar
import datetime as dt
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyMask, EmptyMaskWarning, EmptyPeriod, GridMismatch, ShapeError
from .raster import CrsKind, GridGeo, PolygonSet, Raster, Units, read_ascii_grid

NODATA = -9999.0
_DATE_NAME = re.compile(r"^(\d{4}-\d{2}-\d{2})\.asc$")


@dataclass(frozen=True)
class DailyStack:
    geo: GridGeo
    dates: tuple
    layers: tuple
    gaps: tuple = ()

    def __post_init__(self):
        dates = tuple(self.dates)
        layers = tuple(self.layers)
        if len(dates) != len(layers):
            raise ShapeError(f"{len(dates)} dates but {len(layers)} layers")
        for i in range(1, len(dates)):
            if dates[i] <= dates[i - 1]:
                raise ShapeError(f"dates not strictly increasing at {dates[i]}")
        for d, layer in zip(dates, layers):
            if layer.geo != self.geo:
                raise GridMismatch(f"layer {d} does not match the stack grid")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "gaps", tuple(self.gaps))

    def __len__(self):
        return len(self.dates)

    def select(self, pred):
        return [(d, l) for d, l in zip(self.dates, self.layers) if pred(d)]

    def coverage(self, year: int, month: int) -> float:
        """Fraction of the month's calendar days present in the stack."""
        n = sum(1 for d in self.dates if d.year == year and d.month == month)
        return n / calendar.monthrange(year, month)[1]

    def years(self) -> list[int]:
        return sorted({d.year for d in self.dates})


def _missing_days(dates):
    if not dates:
        return ()
    have = set(dates)
    out, d = [], dates[0]
    while d < dates[-1]:
        if d not in have:
            out.append(d)
        d += dt.timedelta(days=1)
    return tuple(out)


def load_stack(directory, crs_kind=CrsKind.GEOGRAPHIC, units=Units.MM_PER_DAY) -> DailyStack:
    """Load every ``YYYY-MM-DD.asc`` file in ``directory`` as a daily stack.

    Raises GridMismatch naming both files when grids differ.
    """
    directory = Path(directory)
    found = []
    for p in sorted(directory.iterdir()):
        m = _DATE_NAME.match(p.name)
        if m:
            found.append((dt.date.fromisoformat(m.group(1)), p))
    if not found:
        raise EmptyPeriod(f"no YYYY-MM-DD.asc files in {directory}")
    found.sort()
    first_path = found[0][1]
    layers = []
    for d, p in found:
        r = read_ascii_grid(p, units=units, crs_kind=crs_kind)
        if layers and r.geo != layers[0].geo:
            raise GridMismatch(f"{p.name} grid {r.geo} differs from {first_path.name} grid {layers[0].geo}")
        layers.append(r)
    dates = tuple(d for d, _ in found)
    return DailyStack(layers[0].geo, dates, tuple(layers), _missing_days(dates))


def _accumulate(geo, layers, units):
    """Left-to-right cellwise sum; nodata where any layer is missing."""
    total = np.zeros(geo.shape)
    bad = np.zeros(geo.shape, dtype=bool)
    for layer in layers:
        ok = layer.valid
        bad |= ~ok
        total = total + np.where(ok, layer.values, 0.0)
    return Raster(geo, np.where(bad, NODATA, total), NODATA, units)


def monthly_total(stack: DailyStack, year: int, month: int) -> Raster:
    """Per-cell sum of the month's available daily layers.

    Missing days are tolerated; see ``DailyStack.coverage`` for the fraction
    of the month that contributed.
    """
    layers = [l for d, l in stack.select(lambda d: d.year == year and d.month == month)]
    if not layers:
        raise EmptyPeriod(f"no layers for {year}-{month:02d}", month=month)
    return _accumulate(stack.geo, layers, Units.MILLIMETERS)


def annual_total(stack: DailyStack, year: int) -> Raster:
    layers = [l for d, l in stack.select(lambda d: d.year == year)]
    if not layers:
        raise EmptyPeriod(f"no layers for {year}")
    return _accumulate(stack.geo, layers, Units.MILLIMETERS)


def _mean_of(geo, rasters, units):
    acc = np.zeros(geo.shape)
    bad = np.zeros(geo.shape, dtype=bool)
    for r in rasters:
        ok = r.valid
        bad |= ~ok
        acc = acc + np.where(ok, r.values, 0.0)
    return Raster(geo, np.where(bad, NODATA, acc / len(rasters)), NODATA, units)


def annual_mean(stack: DailyStack, start_year: int, end_year: int) -> Raster:
    """Mean over years of each year's total rainfall.

    Years without any layer are skipped; partial years contribute the sum of
    the days present.
    """
    years = [y for y in range(start_year, end_year + 1) if any(d.year == y for d in stack.dates)]
    if not years:
        raise EmptyPeriod(f"no data between {start_year} and {end_year}")
    return _mean_of(stack.geo, [annual_total(stack, y) for y in years], Units.MILLIMETERS)


@dataclass(frozen=True)
class ClimatologyTable:
    """Region-mean monthly totals per year and their mean for each month."""

    period: tuple
    means: dict
    per_year: dict

    def rows(self):
        return [(m, self.means[m]) for m in range(1, 13)]


@dataclass(frozen=True)
class Climatology:
    layers: tuple  # 12 Rasters, January first
    table: ClimatologyTable
    excluded: dict = field(default_factory=dict)  # month -> years without data


def monthly_climatology(
    stack: DailyStack,
    start_year: int,
    end_year: int,
    region: Raster | None = None,
    latitude_weighting: bool = True,
) -> Climatology:
    """Per-cell and region-mean monthly climatology over a year range.

    For each month the per-cell climatology is the mean over years of that
    month's total. Years with no layer in a month are excluded and listed in
    ``excluded``. ``region`` is a 0/1 mask for the table (whole grid when
    omitted).
    """
    if region is None:
        region = Raster(stack.geo, np.ones(stack.geo.shape), NODATA, Units.LABEL)
    layers, means, per_year, excluded = [], {}, {}, {}
    for m in range(1, 13):
        totals, rows, missing = [], [], []
        for y in range(start_year, end_year + 1):
            if not any(d.year == y and d.month == m for d in stack.dates):
                missing.append(y)
                continue
            t = monthly_total(stack, y, m)
            totals.append(t)
            rows.append((y, zonal_mean(t, region, latitude_weighting)))
        if not totals:
            raise EmptyPeriod(f"no year in {start_year}-{end_year} has data for month {m}", month=m)
        if missing:
            excluded[m] = missing
        layers.append(_mean_of(stack.geo, totals, Units.MILLIMETERS))
        per_year[m] = rows
        acc = 0.0
        for _, v in rows:
            acc += v
        means[m] = acc / len(rows)
    table = ClimatologyTable((start_year, end_year), means, per_year)
    return Climatology(tuple(layers), table, excluded)


# ---------------------------------------------------------------------------
# Polygon masks and zonal statistics

def _even_odd(ring, xs, ys):
    """Crossing-parity of every (xs[j], ys[i]) cell centre against one ring.

    Half-open in y and strict in x, so a centre on a shared edge belongs to
    exactly one of the two polygons.
    """
    inside = np.zeros((ys.size, xs.size), dtype=bool)
    X = xs[None, :]
    for (x1, y1), (x2, y2) in zip(ring[:-1], ring[1:]):
        spans = (y1 > ys) != (y2 > ys)
        if not spans.any():
            continue
        yy = ys[spans][:, None]
        xint = x1 + (yy - y1) * (x2 - x1) / (y2 - y1)
        inside[spans] ^= X < xint
    return inside


def rasterize_polygon(poly: PolygonSet, geo: GridGeo) -> Raster:
    """0/1 mask of cells whose centre lies inside ``poly`` (holes excluded)."""
    xs, ys = geo.cell_centers()
    out = np.zeros(geo.shape, dtype=bool)
    for polygon in poly.polygons:
        parity = np.zeros(geo.shape, dtype=bool)
        for ring in polygon:
            parity ^= _even_odd(ring, xs, ys)
        out |= parity
    if not out.any():
        warnings.warn(f"polygon {poly.id!r} covers no cell centre of the grid", EmptyMaskWarning, stacklevel=2)
    return Raster(geo, out.astype(np.float64), NODATA, Units.LABEL)


def zonal_mean(r: Raster, mask: Raster, latitude_weighting: bool = True) -> float:
    """Mean of ``r`` over cells where ``mask == 1``, nodata excluded.

    On geographic grids with ``latitude_weighting`` each cell is weighted by
    the cosine of its centre latitude.
    """
    if r.geo != mask.geo:
        raise GridMismatch("raster and mask grids differ")
    sel = r.valid & mask.valid & (mask.values == 1)
    if not sel.any():
        raise EmptyMask("no valid cells under the mask")
    vals = r.values[sel]
    if latitude_weighting and r.geo.crs_kind is CrsKind.GEOGRAPHIC:
        _, ys = r.geo.cell_centers()
        w = np.broadcast_to(np.cos(np.radians(ys))[:, None], r.geo.shape)[sel]
    else:
        w = np.ones(vals.size)
    # offsetting by one sample keeps constant fields exact
    ref = vals[0]
    return float(ref + np.sum(w * (vals - ref)) / np.sum(w))
