"""Raster, polygon and time-series data model plus file I/O.

Grids are stored as 2-D float64 arrays, top row first, matching the row
order of the ESRI ASCII Grid format. Every container is immutable: arrays
are copied on construction and flagged read-only.
"""
from __future__ import annotations

import csv
import datetime as dt
import enum
import json
import logging
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    DomainError,
    ParseError,
    RasterIOError,
    SeriesOrderError,
    ShapeError,
    UnitsError,
    UnsupportedGeometry,
)

logger = logging.getLogger(__name__)

DEFAULT_NODATA = -9999.0


class Units(str, enum.Enum):
    LINEAR_POWER = "LinearPower"
    DECIBEL = "Decibel"
    MM_PER_DAY = "MillimetersPerDay"
    MILLIMETERS = "Millimeters"
    DIMENSIONLESS = "Dimensionless"
    LABEL = "Label"


class CrsKind(str, enum.Enum):
    GEOGRAPHIC = "Geographic"
    PROJECTED_METERS = "ProjectedMeters"


@dataclass(frozen=True)
class GridGeo:
    """Square-celled grid georeferencing anchored at the lower-left corner."""

    ncols: int
    nrows: int
    x_origin: float
    y_origin: float
    cellsize: float
    crs_kind: CrsKind = CrsKind.PROJECTED_METERS

    def __post_init__(self):
        if int(self.ncols) != self.ncols or self.ncols < 1:
            raise ShapeError(f"ncols must be a positive integer, got {self.ncols}")
        if int(self.nrows) != self.nrows or self.nrows < 1:
            raise ShapeError(f"nrows must be a positive integer, got {self.nrows}")
        if not (self.cellsize > 0 and math.isfinite(self.cellsize)):
            raise ShapeError(f"cellsize must be positive, got {self.cellsize}")
        object.__setattr__(self, "crs_kind", CrsKind(self.crs_kind))
        if self.crs_kind is CrsKind.GEOGRAPHIC:
            top = self.y_origin + self.nrows * self.cellsize
            if self.y_origin < -90 - 1e-9 or top > 90 + 1e-9:
                raise ShapeError(
                    f"geographic grid spans latitudes {self.y_origin}..{top}, outside [-90, 90]"
                )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Return 1-D arrays (x of each column, y of each row), rows top first."""
        xs = self.x_origin + (np.arange(self.ncols) + 0.5) * self.cellsize
        ys = self.y_origin + (self.nrows - np.arange(self.nrows) - 0.5) * self.cellsize
        return xs, ys


@dataclass(frozen=True, eq=False)
class Raster:
    geo: GridGeo
    values: np.ndarray
    nodata: float = DEFAULT_NODATA
    units: Units = Units.DIMENSIONLESS

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim == 1:
            if values.size != self.geo.ncols * self.geo.nrows:
                raise ShapeError(
                    f"expected {self.geo.ncols * self.geo.nrows} values, got {values.size}"
                )
            values = values.reshape(self.geo.shape)
        if values.shape != self.geo.shape:
            raise ShapeError(f"values shape {values.shape} != grid shape {self.geo.shape}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "nodata", float(self.nodata))
        object.__setattr__(self, "units", Units(self.units))

    @property
    def valid(self) -> np.ndarray:
        """Boolean mask of cells holding a usable sample."""
        v = self.values
        return np.isfinite(v) & (v != self.nodata)

    def valid_values(self) -> np.ndarray:
        return self.values[self.valid]

    def with_values(self, values, units=None) -> "Raster":
        return replace(self, values=values, units=self.units if units is None else units)

    def __eq__(self, other):
        if not isinstance(other, Raster):
            return NotImplemented
        return (
            self.geo == other.geo
            and self.units == other.units
            and (self.nodata == other.nodata or (math.isnan(self.nodata) and math.isnan(other.nodata)))
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    __hash__ = None


@dataclass(frozen=True)
class Scene:
    """Co-registered VV/VH pair for one reservoir acquisition."""

    vv: Raster
    vh: Raster
    date: dt.date
    reservoir_id: str

    def __post_init__(self):
        if self.vv.geo != self.vh.geo:
            raise ShapeError("VV and VH rasters are not co-registered")
        if self.vv.units != self.vh.units:
            raise UnitsError(f"VV is {self.vv.units.value} but VH is {self.vh.units.value}")
        if self.vv.units not in (Units.DECIBEL, Units.LINEAR_POWER):
            raise UnitsError(f"scene bands must be Decibel or LinearPower, got {self.vv.units.value}")
        if self.vv.geo.crs_kind is not CrsKind.PROJECTED_METERS:
            raise ShapeError("scenes must be on a projected metric grid")

    @property
    def geo(self) -> GridGeo:
        return self.vv.geo


@dataclass(frozen=True)
class PolygonSet:
    """Polygons as lists of rings; the first ring of each polygon is its shell."""

    polygons: tuple
    id: str = ""

    def __post_init__(self):
        polys = []
        for poly in self.polygons:
            rings = []
            for ring in poly:
                arr = np.asarray(ring, dtype=np.float64)
                if arr.ndim != 2 or arr.shape[1] != 2:
                    raise ShapeError("ring vertices must be (x, y) pairs")
                if arr.shape[0] < 4 or not np.array_equal(arr[0], arr[-1]):
                    raise ShapeError("each ring needs >= 4 vertices with first == last")
                arr.flags.writeable = False
                rings.append(arr)
            polys.append(tuple(rings))
        object.__setattr__(self, "polygons", tuple(polys))

    @property
    def rings(self):
        return [ring for poly in self.polygons for ring in poly]


@dataclass(frozen=True, eq=False)
class SeriesTable:
    dates: tuple
    values: np.ndarray
    label: str = ""
    units: str = ""

    def __post_init__(self):
        dates = tuple(_as_date(d) for d in self.dates)
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if len(dates) != values.size:
            raise ShapeError(f"{len(dates)} dates but {values.size} values")
        for i in range(1, len(dates)):
            if dates[i] <= dates[i - 1]:
                kind = "duplicate" if dates[i] == dates[i - 1] else "non-monotone"
                raise SeriesOrderError(f"{kind} date {dates[i].isoformat()} at row {i}", row=i)
        values.flags.writeable = False
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_entries(cls, entries, label="", units=""):
        entries = list(entries)
        return cls(tuple(d for d, _ in entries), [v for _, v in entries], label, units)

    @property
    def entries(self):
        return list(zip(self.dates, self.values.tolist()))

    def __len__(self):
        return len(self.dates)

    def __eq__(self, other):
        if not isinstance(other, SeriesTable):
            return NotImplemented
        return self.dates == other.dates and np.array_equal(self.values, other.values)

    __hash__ = None


def _as_date(value) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    return dt.date.fromisoformat(str(value).strip())


# ---------------------------------------------------------------------------
# ESRI ASCII Grid

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")
_NUMBER_START = re.compile(r"^[\s]*[-+.\d]|^[\s]*(nan|inf)", re.IGNORECASE)


def format_value(v: float) -> str:
    """Shortest round-tripping text for a float, integers without '.0'."""
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


def _guess_crs(ncols, nrows, xll, yll, cellsize) -> CrsKind:
    # Degree-sized cells inside the lon/lat envelope are read as geographic.
    if (
        cellsize <= 1.0
        and -180 <= xll
        and xll + ncols * cellsize <= 360
        and -90 <= yll
        and yll + nrows * cellsize <= 90
    ):
        return CrsKind.GEOGRAPHIC
    return CrsKind.PROJECTED_METERS


def read_ascii_grid(path, units=Units.DIMENSIONLESS, crs_kind=None) -> Raster:
    """Read an ESRI ASCII Grid file.

    Parameters
    ----------
    path : str or Path
        File to read.
    units : Units
        Units tag for the returned raster.
    crs_kind : CrsKind, optional
        The format carries no CRS. When omitted, grids with cells of at most
        one unit lying inside the longitude/latitude envelope are taken as
        geographic, everything else as projected metres.

    Raises
    ------
    ParseError
        Malformed header or wrong number of cells.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise RasterIOError(f"cannot read {path}: {exc}") from exc

    lines = text.splitlines()
    header = {}
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        if not line:
            i += 1
            continue
        if _NUMBER_START.match(line):
            break
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"{path}: malformed header line {line!r}")
        key = parts[0].lower()
        if key in ("xllcenter", "yllcenter", "dx", "dy"):
            header[key] = parts[1]
        elif key not in _HEADER_KEYS:
            raise ParseError(f"{path}: unknown header key {parts[0]!r}")
        else:
            header[key] = parts[1]
        i += 1

    def number(key, cast):
        if key not in header:
            raise ParseError(f"{path}: missing header key {key!r}")
        try:
            return cast(header[key])
        except ValueError:
            raise ParseError(f"{path}: header key {key!r} has invalid value {header[key]!r}") from None

    ncols = number("ncols", int)
    nrows = number("nrows", int)
    if "cellsize" not in header and ("dx" in header or "dy" in header):
        raise ParseError(f"{path}: rectangular cells (dx/dy) are not supported; key 'cellsize' required")
    cellsize = number("cellsize", float)
    if "xllcorner" in header:
        xll = number("xllcorner", float)
    elif "xllcenter" in header:
        xll = number("xllcenter", float) - cellsize / 2
    else:
        raise ParseError(f"{path}: missing header key 'xllcorner'")
    if "yllcorner" in header:
        yll = number("yllcorner", float)
    elif "yllcenter" in header:
        yll = number("yllcenter", float) - cellsize / 2
    else:
        raise ParseError(f"{path}: missing header key 'yllcorner'")
    nodata = number("nodata_value", float) if "nodata_value" in header else DEFAULT_NODATA

    tokens = " ".join(lines[i:]).split()
    if len(tokens) != ncols * nrows:
        raise ParseError(f"{path}: expected {ncols * nrows} cells ({nrows}x{ncols}), found {len(tokens)}")
    try:
        values = np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError as exc:
        raise ParseError(f"{path}: bad cell value: {exc}") from None

    if crs_kind is None:
        crs_kind = _guess_crs(ncols, nrows, xll, yll, cellsize)
    try:
        geo = GridGeo(ncols, nrows, xll, yll, cellsize, crs_kind)
    except ShapeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return Raster(geo, values, nodata, units)


def write_ascii_grid(raster: Raster, path) -> None:
    """Write ``raster`` as an ESRI ASCII Grid; values round-trip exactly."""
    g = raster.geo
    out = [
        f"ncols {g.ncols}",
        f"nrows {g.nrows}",
        f"xllcorner {format_value(g.x_origin)}",
        f"yllcorner {format_value(g.y_origin)}",
        f"cellsize {format_value(g.cellsize)}",
        f"NODATA_value {format_value(raster.nodata)}",
    ]
    for row in raster.values:
        out.append(" ".join(format_value(v) for v in row.tolist()))
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(out) + "\n")
    except OSError as exc:
        raise RasterIOError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# GeoJSON polygons

def _close_ring(ring, where):
    ring = [tuple(float(c) for c in pt[:2]) for pt in ring]
    if ring and ring[0] != ring[-1]:
        logger.warning("%s: unclosed ring, appending first vertex", where)
        ring.append(ring[0])
    return ring


def read_polygons(path, id=None) -> PolygonSet:
    """Read one Polygon or MultiPolygon from a GeoJSON file.

    Accepts a bare geometry, a Feature, or a FeatureCollection (first
    feature used). Unclosed rings are closed with a logged warning.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise RasterIOError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from None

    if doc.get("type") == "FeatureCollection":
        features = doc.get("features") or []
        if not features:
            raise ParseError(f"{path}: FeatureCollection has no features")
        if len(features) > 1:
            logger.warning("%s: %d features, using the first", path, len(features))
        doc = features[0]
    if doc.get("type") == "Feature":
        if id is None:
            id = doc.get("id") or (doc.get("properties") or {}).get("id")
        doc = doc.get("geometry") or {}

    gtype = doc.get("type")
    coords = doc.get("coordinates")
    if gtype == "Polygon":
        parts = [coords]
    elif gtype == "MultiPolygon":
        parts = coords
    else:
        raise UnsupportedGeometry(f"{path}: geometry type {gtype!r} is not Polygon/MultiPolygon")
    polygons = [tuple(_close_ring(r, path) for r in part) for part in parts]
    return PolygonSet(tuple(polygons), id=str(id) if id is not None else path.stem)


# ---------------------------------------------------------------------------
# Series CSV

def read_series_csv(path, label=None, units="") -> SeriesTable:
    """Read a ``date,value`` CSV into a SeriesTable."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header[:2]] != ["date", "value"]:
                raise ParseError(f"{path}: expected header 'date,value', got {header}")
            dates, values = [], []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    dates.append(dt.date.fromisoformat(row[0].strip()))
                    values.append(float(row[1]))
                except (ValueError, IndexError):
                    raise ParseError(f"{path}: bad row {lineno}: {row}") from None
    except OSError as exc:
        raise RasterIOError(f"cannot read {path}: {exc}") from exc
    return SeriesTable(tuple(dates), values, label if label is not None else path.stem, units)


def write_series_csv(table: SeriesTable, path) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("date,value\n")
            for d, v in zip(table.dates, table.values.tolist()):
                fh.write(f"{d.isoformat()},{format_value(v)}\n")
    except OSError as exc:
        raise RasterIOError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Backscatter units

def db_to_linear(r: Raster) -> Raster:
    if r.units is not Units.DECIBEL:
        raise UnitsError(f"db_to_linear expects Decibel input, got {r.units.value}")
    out = np.array(r.values)
    ok = r.valid
    out[ok] = np.power(10.0, out[ok] / 10.0)
    return r.with_values(out, Units.LINEAR_POWER)


def linear_to_db(r: Raster) -> Raster:
    if r.units is not Units.LINEAR_POWER:
        raise UnitsError(f"linear_to_db expects LinearPower input, got {r.units.value}")
    ok = r.valid
    bad = ok & (r.values <= 0)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DomainError(f"non-positive power {r.values[idx]} at pixel (row, col) = {idx}")
    out = np.array(r.values)
    out[ok] = 10.0 * np.log10(out[ok])
    return r.with_values(out, Units.DECIBEL)
