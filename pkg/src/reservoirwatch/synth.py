"""Synthetic scenes and rainfall stacks with known answers.

Random streams
--------------
All draws come from numpy's ``PCG64`` bit generator seeded through
``numpy.random.SeedSequence(seed)``. ``gen_scene`` spawns three child
sequences, used in this order: VV speckle, VH speckle, noise-blob placement.
Speckle is ``Generator.gamma(shape=looks, scale=1/looks)`` drawn for the
whole grid in row-major order. ``gen_rain_stack`` uses a single stream and
draws one full grid per day in ascending date order.
"""
from __future__ import annotations

import calendar
import datetime as dt
from dataclasses import dataclass

import numpy as np

from .errors import ParamError
from .raster import CrsKind, GridGeo, PolygonSet, Raster, Scene, Units
from .rainfall import DailyStack, rasterize_polygon


def _rng(seed_seq):
    return np.random.Generator(np.random.PCG64(seed_seq))


@dataclass(frozen=True)
class SynthSceneSpec:
    geo: GridGeo
    water: PolygonSet
    land_db_vv: float = -8.0
    water_db_vv: float = -20.0
    land_db_vh: float = -14.0
    water_db_vh: float = -26.0
    looks: float = 4.4
    noise_blobs: int = 0
    seed: int = 0
    max_blob_pixels: int = 24
    reservoir_id: str = "synthetic"
    date: dt.date = dt.date(2022, 1, 1)

    def __post_init__(self):
        if self.geo.crs_kind is not CrsKind.PROJECTED_METERS:
            raise ParamError("synthetic scenes need a projected metric grid")
        if not (self.water_db_vv < self.land_db_vv and self.water_db_vh < self.land_db_vh):
            raise ParamError("water must be darker than land in both bands")
        if not self.looks > 0:
            raise ParamError("looks must be positive")
        if self.noise_blobs < 0 or self.max_blob_pixels < 1:
            raise ParamError("noise_blobs must be >= 0 and max_blob_pixels >= 1")


def _grow_blob(rng, size):
    """Random 4-connected cluster of ``size`` cells as (row, col) offsets."""
    cells = [(0, 0)]
    seen = {(0, 0)}
    while len(cells) < size:
        r, c = cells[rng.integers(len(cells))]
        dr, dc = ((-1, 0), (1, 0), (0, -1), (0, 1))[rng.integers(4)]
        nxt = (r + dr, c + dc)
        if nxt not in seen:
            seen.add(nxt)
            cells.append(nxt)
    return np.array(cells)


def _place_blobs(rng, water, count, max_size, buffer=4, max_tries=2000):
    """Drop ``count`` blobs on land, each kept ``buffer`` cells from water and other blobs."""
    nrows, ncols = water.shape
    blocked = water.copy()
    blobs = np.zeros_like(water)
    placed = 0
    for _ in range(count):
        size = int(rng.integers(1, max_size + 1))
        shape = _grow_blob(rng, size)
        shape -= shape.min(axis=0)
        h, w = shape.max(axis=0) + 1
        for _ in range(max_tries):
            r0 = int(rng.integers(buffer, max(buffer + 1, nrows - h - buffer)))
            c0 = int(rng.integers(buffer, max(buffer + 1, ncols - w - buffer)))
            if r0 + h + buffer > nrows or c0 + w + buffer > ncols:
                continue
            if blocked[r0 - buffer:r0 + h + buffer, c0 - buffer:c0 + w + buffer].any():
                continue
            blobs[r0 + shape[:, 0], c0 + shape[:, 1]] = True
            blocked[r0 + shape[:, 0], c0 + shape[:, 1]] = True
            placed += 1
            break
    return blobs, placed


def gen_scene(spec: SynthSceneSpec):
    """Generate a speckled dB scene over a water polygon.

    Returns
    -------
    (Scene, float, Raster)
        Scene in Decibel units, the true water area in km2 and the true
        water mask (blobs are not part of the truth).
    """
    truth = rasterize_polygon(spec.water, spec.geo)
    water = truth.values == 1
    s_vv, s_vh, s_blob = np.random.SeedSequence(spec.seed).spawn(3)

    dark = water
    if spec.noise_blobs:
        blobs, _ = _place_blobs(_rng(s_blob), water, spec.noise_blobs, spec.max_blob_pixels)
        dark = water | blobs

    bands = []
    for stream, land_db, water_db in (
        (s_vv, spec.land_db_vv, spec.water_db_vv),
        (s_vh, spec.land_db_vh, spec.water_db_vh),
    ):
        mean = np.where(dark, 10.0 ** (water_db / 10.0), 10.0 ** (land_db / 10.0))
        speckle = _rng(stream).gamma(shape=spec.looks, scale=1.0 / spec.looks, size=spec.geo.shape)
        bands.append(Raster(spec.geo, 10.0 * np.log10(mean * speckle), -9999.0, Units.DECIBEL))

    scene = Scene(bands[0], bands[1], spec.date, spec.reservoir_id)
    area = float(np.count_nonzero(water)) * spec.geo.cellsize ** 2 / 1e6
    return scene, area, truth


def blob_polygon(cx, cy, area, rng, n_vertices=32, roughness=0.2) -> PolygonSet:
    """Irregular star-shaped polygon of exactly ``area`` (map units squared)."""
    theta = np.linspace(0.0, 2 * np.pi, n_vertices, endpoint=False)
    radius = np.ones(n_vertices)
    for harmonic in (2, 3, 5):
        amp = roughness * rng.uniform(0.3, 1.0) / harmonic * 2
        radius += amp * np.cos(harmonic * theta + rng.uniform(0, 2 * np.pi))
    radius = np.maximum(radius, 0.2)
    x, y = radius * np.cos(theta), radius * np.sin(theta)
    unit_area = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    scale = np.sqrt(area / unit_area)
    ring = np.column_stack([cx + scale * x, cy + scale * y])
    ring = np.vstack([ring, ring[:1]])
    return PolygonSet(((ring,),), id="water")


def random_reservoir(area_km2: float, seed: int, cellsize: float = 10.0, margin: float = 0.6):
    """Grid and polygon for a reservoir of roughly ``area_km2``.

    The grid is the polygon's bounding box padded by ``margin`` times its
    size on each side.
    """
    rng = _rng(np.random.SeedSequence([seed, 7]))
    poly = blob_polygon(0.0, 0.0, area_km2 * 1e6, rng)
    ring = poly.polygons[0][0]
    lo, hi = ring.min(axis=0), ring.max(axis=0)
    pad = (hi - lo) * margin
    ncols = int(np.ceil((hi[0] - lo[0] + 2 * pad[0]) / cellsize))
    nrows = int(np.ceil((hi[1] - lo[1] + 2 * pad[1]) / cellsize))
    x0 = float(np.floor((lo[0] - pad[0]) / cellsize) * cellsize)
    y0 = float(np.floor((lo[1] - pad[1]) / cellsize) * cellsize)
    geo = GridGeo(ncols + 1, nrows + 1, x0, y0, cellsize, CrsKind.PROJECTED_METERS)
    return geo, poly


def gen_rain_stack(
    geo: GridGeo,
    start: dt.date,
    end: dt.date,
    monthly_pattern,
    seed: int = 0,
    noise: bool = True,
    shape: float = 1.0,
) -> DailyStack:
    """Daily rainfall whose expected monthly total is ``monthly_pattern[m-1]``.

    With ``noise`` each cell-day is ``gamma(shape, mean / shape)`` with
    ``mean = pattern / days_in_month``; without it every cell equals that
    mean. Covers ``start`` through ``end`` inclusive.
    """
    pattern = np.asarray(monthly_pattern, dtype=np.float64)
    if pattern.shape != (12,):
        raise ParamError("monthly_pattern needs 12 values")
    if (pattern < 0).any() or not np.isfinite(pattern).all():
        raise ParamError("monthly_pattern must be non-negative")
    if end < start:
        raise ParamError("end precedes start")
    rng = _rng(np.random.SeedSequence(seed))
    dates, layers = [], []
    d = start
    while d <= end:
        mean = pattern[d.month - 1] / calendar.monthrange(d.year, d.month)[1]
        if noise:
            vals = rng.gamma(shape, mean / shape, size=geo.shape)
        else:
            vals = np.full(geo.shape, mean)
        dates.append(d)
        layers.append(Raster(geo, vals, -9999.0, Units.MM_PER_DAY))
        d += dt.timedelta(days=1)
    return DailyStack(geo, tuple(dates), tuple(layers))
