"""Water classification, connected-pixel cleaning and extent in km2."""
from __future__ import annotations

import csv
import datetime as dt
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import CrsError, ParamError, RasterIOError, ReservoirWatchError, SceneError
from .raster import CrsKind, GridGeo, Raster, Scene, Units, db_to_linear, format_value, linear_to_db
from .speckle import SpeckleParams, refined_lee
from .threshold import DEFAULT_NBINS, OtsuResult, band_otsu

MASK_NODATA = -9999.0
# class means closer than this (dB) at the Otsu split mark a unimodal band
MIN_CLASS_SEPARATION_DB = 3.0

RECORD_HEADER = (
    "reservoir_id",
    "date",
    "area_km2",
    "t_vv",
    "t_vh",
    "water_pixels",
    "removed_components",
    "low_confidence",
)


class Combine(str, enum.Enum):
    AND = "And"
    OR = "Or"
    VV_ONLY = "VvOnly"
    VH_ONLY = "VhOnly"


class Connectivity(str, enum.Enum):
    FOUR = "Four"
    EIGHT = "Eight"


@dataclass(frozen=True)
class MaskParams:
    combine: Combine = Combine.AND
    min_pixels: int = 25
    connectivity: Connectivity = Connectivity.EIGHT

    def __post_init__(self):
        object.__setattr__(self, "combine", Combine(self.combine))
        object.__setattr__(self, "connectivity", Connectivity(self.connectivity))
        if int(self.min_pixels) != self.min_pixels or self.min_pixels < 1:
            raise ParamError(f"min_pixels must be a positive integer, got {self.min_pixels}")


@dataclass(frozen=True)
class WaterExtentRecord:
    reservoir_id: str
    date: dt.date
    area_km2: float
    t_vv: float
    t_vh: float
    water_pixels: int
    removed_components: int
    low_confidence: bool

    def as_row(self) -> list[str]:
        return [
            self.reservoir_id,
            self.date.isoformat(),
            format_value(self.area_km2),
            format_value(self.t_vv),
            format_value(self.t_vh),
            str(self.water_pixels),
            str(self.removed_components),
            "true" if self.low_confidence else "false",
        ]


def classify_water(s: Scene, t_vv: float, t_vh: float, combine=Combine.AND) -> Raster:
    """Binary water mask (1 water, 0 land, nodata where a used band is missing)."""
    combine = Combine(combine)
    if s.vv.units is not Units.DECIBEL:
        raise ParamError("classify_water expects a Decibel scene")
    if not (np.isfinite(t_vv) and np.isfinite(t_vh)):
        raise ParamError("thresholds must be finite")
    vv_low = s.vv.values < t_vv
    vh_low = s.vh.values < t_vh
    if combine is Combine.AND:
        water, ok = vv_low & vh_low, s.vv.valid & s.vh.valid
    elif combine is Combine.OR:
        water, ok = vv_low | vh_low, s.vv.valid & s.vh.valid
    elif combine is Combine.VV_ONLY:
        water, ok = vv_low, s.vv.valid
    else:
        water, ok = vh_low, s.vh.valid
    out = np.where(ok, water.astype(np.float64), MASK_NODATA)
    return Raster(s.geo, out, MASK_NODATA, Units.LABEL)


def _structure(connectivity):
    if Connectivity(connectivity) is Connectivity.EIGHT:
        return np.ones((3, 3), dtype=bool)
    return ndimage.generate_binary_structure(2, 1)


def connected_components(mask: Raster, connectivity=Connectivity.EIGHT) -> tuple[Raster, np.ndarray]:
    """Label connected water regions.

    Labels run 1..K in row-major order of each component's first pixel;
    background and nodata cells get 0. Returns the label raster and
    ``sizes`` where ``sizes[k - 1]`` is the pixel count of label ``k``.
    """
    water = mask.valid & (mask.values == 1)
    labels, k = ndimage.label(water, structure=_structure(connectivity))
    sizes = np.bincount(labels.ravel(), minlength=k + 1)[1:]
    return Raster(mask.geo, labels.astype(np.float64), MASK_NODATA, Units.LABEL), sizes


def filter_small_components(labels: Raster, sizes, min_pixels: int, mask: Raster | None = None):
    """Drop components smaller than ``min_pixels``.

    Returns ``(cleaned_mask, removed_count)``. When the original ``mask`` is
    given its nodata cells are carried into the cleaned mask.
    """
    sizes = np.asarray(sizes)
    keep = np.concatenate([[False], sizes >= min_pixels])
    lab = labels.values.astype(np.int64)
    cleaned = keep[lab].astype(np.float64)
    if mask is not None:
        cleaned = np.where(mask.valid, cleaned, MASK_NODATA)
    removed = int(np.count_nonzero(sizes < min_pixels))
    return Raster(labels.geo, cleaned, MASK_NODATA, Units.LABEL), removed


def water_pixel_count(mask: Raster) -> int:
    return int(np.count_nonzero(mask.valid & (mask.values == 1)))


def compute_area(mask: Raster, geo: GridGeo | None = None) -> float:
    """Water area in km2 from a 0/1 mask on a metric grid."""
    geo = mask.geo if geo is None else geo
    if geo.crs_kind is not CrsKind.PROJECTED_METERS:
        raise CrsError("area requires a projected metric grid; degree cells are refused")
    return water_pixel_count(mask) * geo.cellsize ** 2 / 1e6


def _despeckle_db(r: Raster, sp: SpeckleParams) -> Raster:
    lin = db_to_linear(r) if r.units is Units.DECIBEL else r
    return linear_to_db(refined_lee(lin, sp))


def _unimodal(res: OtsuResult) -> bool:
    sep = np.sqrt(res.sigma_between / (res.p_w * res.p_nw)) if res.p_w * res.p_nw > 0 else 0.0
    return res.low_confidence or sep < MIN_CLASS_SEPARATION_DB


def despeckle_scene(s: Scene, sp: SpeckleParams = SpeckleParams()) -> Scene:
    """Refined-Lee both bands in linear power; return the scene in dB."""
    return Scene(_despeckle_db(s.vv, sp), _despeckle_db(s.vh, sp), s.date, s.reservoir_id)


def process_scene(
    s: Scene,
    sp: SpeckleParams = SpeckleParams(),
    mp: MaskParams = MaskParams(),
    nbins: int = DEFAULT_NBINS,
    thresholds: tuple[float, float] | None = None,
):
    """Run despeckle, Otsu, classification and cleaning on one scene.

    Parameters
    ----------
    s : Scene
        Bands in LinearPower or Decibel.
    thresholds : (t_vv, t_vh), optional
        Use these instead of Otsu, e.g. a fallback from an earlier
        high-confidence scene. The record is then flagged low-confidence
        only if the scene's own Otsu split was.

    Returns
    -------
    (WaterExtentRecord, Raster)
        The record and the cleaned 0/1 mask.

    Raises
    ------
    SceneError
        Wraps any stage failure with the reservoir id and date.
    """
    try:
        db = despeckle_scene(s, sp)
        res_vv = band_otsu(db.vv, nbins, "VV")
        res_vh = band_otsu(db.vh, nbins, "VH")
        low = _unimodal(res_vv) or _unimodal(res_vh)
        if thresholds is None:
            t_vv, t_vh = res_vv.threshold, res_vh.threshold
        else:
            t_vv, t_vh = (float(t) for t in thresholds)
        raw = classify_water(db, t_vv, t_vh, mp.combine)
        labels, sizes = connected_components(raw, mp.connectivity)
        cleaned, removed = filter_small_components(labels, sizes, mp.min_pixels, raw)
        pixels = water_pixel_count(cleaned)
        area = compute_area(cleaned)
    except ReservoirWatchError as exc:
        raise SceneError(s.reservoir_id, s.date, exc) from exc
    record = WaterExtentRecord(
        reservoir_id=s.reservoir_id,
        date=s.date,
        area_km2=area,
        t_vv=t_vv,
        t_vh=t_vh,
        water_pixels=pixels,
        removed_components=removed,
        low_confidence=low,
    )
    return record, cleaned


def write_records_csv(records, path, append: bool = False) -> None:
    """Write extent records; a header is emitted unless appending to a non-empty file."""
    path = Path(path)
    need_header = not (append and path.exists() and path.stat().st_size > 0)
    try:
        with open(path, "a" if append else "w", newline="", encoding="utf-8") as fh:
            if need_header:
                fh.write(",".join(RECORD_HEADER) + "\n")
            for rec in records:
                fh.write(",".join(rec.as_row()) + "\n")
    except OSError as exc:
        raise RasterIOError(f"cannot write {path}: {exc}") from exc


def read_records_csv(path) -> list[WaterExtentRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(
                WaterExtentRecord(
                    reservoir_id=row["reservoir_id"],
                    date=dt.date.fromisoformat(row["date"]),
                    area_km2=float(row["area_km2"]),
                    t_vv=float(row["t_vv"]),
                    t_vh=float(row["t_vh"]),
                    water_pixels=int(row["water_pixels"]),
                    removed_components=int(row["removed_components"]),
                    low_confidence=row["low_confidence"].strip().lower() == "true",
                )
            )
    return out
