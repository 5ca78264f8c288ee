"""Command-line entry point: ``reservoirwatch {extent,rain,analyze,synth}``.

Exit codes: 0 success, 1 internal error or a scene that failed to
process, 2 usage or input error.

Parameters come from built-in defaults, then a ``key=value`` config file
(``--config`` or the ``RESERVOIRWATCH_CONFIG`` environment variable), then
command-line flags; later sources win.
"""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

from . import analysis, rainfall, svg, synth
from .errors import EmptyMask, EmptyPeriod, ReservoirWatchError, SceneError
from .raster import (
    CrsKind,
    GridGeo,
    PolygonSet,
    Scene,
    SeriesTable,
    Units,
    format_value,
    read_ascii_grid,
    read_polygons,
    read_series_csv,
    write_ascii_grid,
)
from .speckle import SpeckleParams
from .watermask import MaskParams, process_scene, write_records_csv

CONFIG_ENV = "RESERVOIRWATCH_CONFIG"
_DATE_FILE = re.compile(r"^(\d{4}-\d{2}-\d{2})\.asc$")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Every tunable with its default; the config file may set any of these."""

    window: int = 7
    looks: float = 4.4
    min_valid: int = 9
    combine: str = "And"
    min_pixels: int = 25
    connectivity: str = "Eight"
    nbins: int = 256
    max_lag: int = 3
    latitude_weighting: bool = True
    jobs: int = 1
    units: str = "db"
    vv_dir: str = ""
    vh_dir: str = ""
    reservoir: str = ""
    out_csv: str = ""
    mask_out_dir: str = ""
    daily_dir: str = ""
    mode: str = ""
    polygon: str = ""
    start_year: int = 0
    end_year: int = 0
    out: str = ""
    raster_dir: str = ""
    extent_csv: str = ""
    rain_csv: str = ""
    out_dir: str = ""


def _coerce(name, raw, kind):
    if kind is bool or kind == "bool":
        low = str(raw).strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"{name}: expected a boolean, got {raw!r}")
    try:
        if kind is int or kind == "int":
            return int(raw)
        if kind is float or kind == "float":
            return float(raw)
    except ValueError:
        raise UsageError(f"{name}: invalid value {raw!r}") from None
    return str(raw).strip()


def read_config(path) -> dict:
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    types = {f.name: f.type for f in fields(RunConfig)}
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for n, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in types:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        out[key] = _coerce(key, val, types[key])
    return out


def resolve_config(args) -> RunConfig:
    cfg = {}
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if path:
        cfg.update(read_config(path))
    names = {f.name for f in fields(RunConfig)}
    cfg.update({k: v for k, v in vars(args).items() if k in names and v is not None})
    return RunConfig(**cfg)


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


def _dated_files(directory) -> dict:
    d = Path(directory)
    if not d.is_dir():
        raise UsageError(f"not a directory: {directory}")
    return {
        dt.date.fromisoformat(m.group(1)): p
        for p in d.iterdir()
        if (m := _DATE_FILE.match(p.name))
    }


# ---------------------------------------------------------------------------
# extent

def _scene_job(job):
    date, vv_path, vh_path, units, reservoir, sp, mp, nbins, thresholds = job
    try:
        vv = read_ascii_grid(vv_path, units=units, crs_kind=CrsKind.PROJECTED_METERS)
        vh = read_ascii_grid(vh_path, units=units, crs_kind=CrsKind.PROJECTED_METERS)
        scene = Scene(vv, vh, date, reservoir)
        rec, mask = process_scene(scene, sp, mp, nbins, thresholds)
        return date, rec, mask, None
    except SceneError as exc:
        return date, None, None, str(exc)
    except ReservoirWatchError as exc:
        return date, None, None, f"{reservoir} {date}: {type(exc).__name__}: {exc}"


def cmd_extent(args) -> int:
    cfg = resolve_config(args)
    for key in ("vv_dir", "vh_dir", "out_csv"):
        if not getattr(cfg, key):
            raise UsageError(f"--{key.replace('_', '-')} is required")
    units = {"db": Units.DECIBEL, "linear": Units.LINEAR_POWER}.get(cfg.units.lower())
    if units is None:
        raise UsageError(f"units must be 'db' or 'linear', got {cfg.units!r}")
    sp = SpeckleParams(cfg.window, cfg.looks, cfg.min_valid)
    mp = MaskParams(cfg.combine, cfg.min_pixels, cfg.connectivity)
    reservoir = cfg.reservoir or "reservoir"

    vv_files, vh_files = _dated_files(cfg.vv_dir), _dated_files(cfg.vh_dir)
    if not vv_files and not vh_files:
        print(f"error: no YYYY-MM-DD.asc files in {cfg.vv_dir} or {cfg.vh_dir}", file=sys.stderr)
        return 2
    for d in sorted(vv_files.keys() ^ vh_files.keys()):
        band = "VH" if d in vv_files else "VV"
        _warn(f"{d}: no {band} counterpart, skipped")
    dates = sorted(vv_files.keys() & vh_files.keys())
    if not dates:
        print("error: no dates with both VV and VH files", file=sys.stderr)
        return 2

    jobs = [(d, vv_files[d], vh_files[d], units, reservoir, sp, mp, cfg.nbins, None) for d in dates]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_scene_job, jobs))
    else:
        results = [_scene_job(j) for j in jobs]
    results.sort(key=lambda t: t[0])

    failed = 0
    records, masks = [], []
    last_good = None
    for (date, rec, mask, err), job in zip(results, jobs):
        if err is not None:
            print(f"error: {err}", file=sys.stderr)
            failed += 1
            continue
        if rec.low_confidence:
            if last_good is None:
                print(
                    f"error: {reservoir} {date}: low-confidence Otsu split and no earlier "
                    "high-confidence threshold to fall back on",
                    file=sys.stderr,
                )
                failed += 1
                continue
            _warn(f"{date}: low-confidence Otsu split, using thresholds from {last_good[0]}")
            date, rec, mask, err = _scene_job(job[:-1] + (last_good[1:],))
            if err is not None:
                print(f"error: {err}", file=sys.stderr)
                failed += 1
                continue
        else:
            last_good = (date, rec.t_vv, rec.t_vh)
        records.append(rec)
        masks.append((date, mask))

    write_records_csv(records, cfg.out_csv, append=getattr(args, "append", False))
    if cfg.mask_out_dir:
        out = Path(cfg.mask_out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for date, mask in masks:
            write_ascii_grid(mask, out / f"{date.isoformat()}.asc")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# rain

def _region_mask(cfg, geo):
    if not cfg.polygon:
        return None
    poly = read_polygons(cfg.polygon)
    return rainfall.rasterize_polygon(poly, geo)


def cmd_rain(args) -> int:
    cfg = resolve_config(args)
    if not cfg.daily_dir or not cfg.out or not cfg.mode:
        raise UsageError("--daily-dir, --mode and --out are required")
    if cfg.mode not in ("annual-mean", "monthly-climatology", "zonal"):
        raise UsageError(f"unknown mode {cfg.mode!r}")
    stack = rainfall.load_stack(cfg.daily_dir)
    if stack.gaps:
        _warn(f"{len(stack.gaps)} missing day(s) between {stack.dates[0]} and {stack.dates[-1]}")
    start = cfg.start_year or stack.dates[0].year
    end = cfg.end_year or stack.dates[-1].year

    if cfg.mode == "annual-mean":
        write_ascii_grid(rainfall.annual_mean(stack, start, end), cfg.out)
        return 0

    region = _region_mask(cfg, stack.geo)
    if cfg.mode == "monthly-climatology":
        clim = rainfall.monthly_climatology(stack, start, end, region, cfg.latitude_weighting)
        for m, years in sorted(clim.excluded.items()):
            _warn(f"month {m:02d}: no data for {', '.join(map(str, years))}")
        with open(cfg.out, "w", newline="\n") as fh:
            fh.write("month,value\n")
            for m, v in clim.table.rows():
                fh.write(f"{m},{format_value(v)}\n")
        if cfg.raster_dir:
            out = Path(cfg.raster_dir)
            out.mkdir(parents=True, exist_ok=True)
            for m, layer in enumerate(clim.layers, start=1):
                write_ascii_grid(layer, out / f"climatology_{m:02d}.asc")
        return 0

    if region is None:
        raise UsageError("--polygon is required for zonal mode")
    rows = []
    for y in range(start, end + 1):
        for m in range(1, 13):
            if not any(d.year == y and d.month == m for d in stack.dates):
                continue
            total = rainfall.monthly_total(stack, y, m)
            rows.append((y, m, rainfall.zonal_mean(total, region, cfg.latitude_weighting)))
    if not rows:
        raise EmptyPeriod(f"no data between {start} and {end}")
    with open(cfg.out, "w", newline="\n") as fh:
        fh.write("year,month,value\n")
        for y, m, v in rows:
            fh.write(f"{y},{m},{format_value(v)}\n")
    return 0


# ---------------------------------------------------------------------------
# analyze

def read_extent_series(path, reservoir="") -> SeriesTable:
    """Extent series from a records CSV or a plain ``date,value`` CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), [])
    if "area_km2" not in header:
        return read_series_csv(path, label="extent", units="km2")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    ids = sorted({r["reservoir_id"] for r in rows})
    if reservoir:
        rows = [r for r in rows if r["reservoir_id"] == reservoir]
    elif len(ids) > 1:
        raise UsageError(f"{path} holds several reservoirs ({', '.join(ids)}); pick one with --reservoir")
    if not rows:
        raise UsageError(f"{path}: no extent records")
    by_date = {}
    for r in rows:
        by_date[dt.date.fromisoformat(r["date"])] = float(r["area_km2"])
    dates = sorted(by_date)
    return SeriesTable(tuple(dates), [by_date[d] for d in dates], label=reservoir or ids[0], units="km2")


def read_rain_series(path) -> SeriesTable:
    """Rain series from ``date,value`` or ``year,month,value`` CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = [h.strip().lower() for h in next(csv.reader(fh), [])]
    if header[:3] != ["year", "month", "value"]:
        return read_series_csv(path, label="rainfall", units="mm")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    dates = [dt.date(int(r["year"]), int(r["month"]), 1) for r in rows]
    return SeriesTable(tuple(dates), [float(r["value"]) for r in rows], label="rainfall", units="mm")


def _write_box_outputs(series: SeriesTable, name: str, out_dir: Path, title: str):
    buckets = analysis.group_by_month(series)
    stats = [analysis.box_stats(b) if b else None for b in buckets]
    with open(out_dir / f"{name}_box.csv", "w", newline="\n") as fh:
        fh.write("month,n,min,q1,median,q3,max,n_outliers\n")
        for m, s in enumerate(stats, start=1):
            if s is None:
                fh.write(f"{m},0,,,,,,0\n")
                continue
            vals = ",".join(format_value(v) for v in (s.min, s.q1, s.median, s.q3, s.max))
            fh.write(f"{m},{s.n},{vals},{len(s.outliers)}\n")
    label = series.label + (f" ({series.units})" if series.units else "")
    (out_dir / f"{name}_box.svg").write_text(svg.render_box_svg(stats, title, label))


def cmd_analyze(args) -> int:
    cfg = resolve_config(args)
    if not cfg.out_dir or not (cfg.extent_csv or cfg.rain_csv):
        raise UsageError("--out-dir and at least one of --extent-csv/--rain-csv are required")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    extent = rain = None
    if cfg.extent_csv:
        extent = analysis.monthly_mean_series(read_extent_series(cfg.extent_csv, cfg.reservoir))
        _write_box_outputs(extent, "extent", out, f"Monthly water extent: {extent.label}")
    if cfg.rain_csv:
        rain = analysis.monthly_mean_series(read_rain_series(cfg.rain_csv))
        _write_box_outputs(rain, "rain", out, "Monthly rainfall")

    if extent is None or rain is None:
        _warn("only one series given; lag correlation skipped")
        return 0

    (out / "series.svg").write_text(svg.render_series_svg(rain, extent, "Water extent and rainfall"))
    try:
        lag = analysis.lag_correlation(rain, extent, cfg.max_lag)
    except EmptyPeriod as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    with open(out / "lag.csv", "w", newline="\n") as fh:
        fh.write("lag,r,n,best\n")
        for k, r, n in lag.lags:
            fh.write(f"{k},{format_value(r)},{n},{'true' if k == lag.best_lag else 'false'}\n")
    return 0


# ---------------------------------------------------------------------------
# synth

def _scaled(poly: PolygonSet, factor: float) -> PolygonSet:
    ring = poly.polygons[0][0]
    c = ring[:-1].mean(axis=0)
    return PolygonSet((((ring - c) * math.sqrt(factor) + c,),), id=poly.id)


def cmd_synth(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "scene":
        if args.n_scenes < 1 or args.area_km2 <= 0:
            raise UsageError("--n-scenes must be >= 1 and --area-km2 positive")
        geo, base = synth.random_reservoir(args.area_km2, args.seed, args.cellsize)
        (out / "vv").mkdir(exist_ok=True)
        (out / "vh").mkdir(exist_ok=True)
        start = dt.date.fromisoformat(args.start_date)
        truth = {}
        for i in range(args.n_scenes):
            date = start + dt.timedelta(days=args.step_days * i)
            factor = 0.85 + 0.15 * math.sin(2 * math.pi * i / 12)
            spec = synth.SynthSceneSpec(
                geo,
                _scaled(base, factor),
                land_db_vv=args.land_vv,
                water_db_vv=args.water_vv,
                land_db_vh=args.land_vh,
                water_db_vh=args.water_vh,
                looks=args.looks,
                noise_blobs=args.noise_blobs,
                seed=args.seed * 100003 + i,
                reservoir_id=args.reservoir,
                date=date,
            )
            scene, area, _ = synth.gen_scene(spec)
            write_ascii_grid(scene.vv, out / "vv" / f"{date.isoformat()}.asc")
            write_ascii_grid(scene.vh, out / "vh" / f"{date.isoformat()}.asc")
            truth[date.isoformat()] = area
        doc = {"kind": "scene", "reservoir": args.reservoir, "cellsize": args.cellsize, "areas_km2": truth}
    else:
        pattern = [float(v) for v in args.pattern.split(",")]
        geo = GridGeo(args.ncols, args.nrows, args.x_origin, args.y_origin, args.cellsize_deg, CrsKind.GEOGRAPHIC)
        stack = synth.gen_rain_stack(
            geo,
            dt.date.fromisoformat(args.start_date),
            dt.date.fromisoformat(args.end_date),
            pattern,
            seed=args.seed,
            noise=not args.no_noise,
        )
        daily = out / "daily"
        daily.mkdir(exist_ok=True)
        for d, layer in zip(stack.dates, stack.layers):
            write_ascii_grid(layer, daily / f"{d.isoformat()}.asc")
        x0, y0 = geo.x_origin, geo.y_origin
        x1, y1 = x0 + geo.ncols * geo.cellsize, y0 + geo.nrows * geo.cellsize
        basin = {
            "type": "Feature",
            "properties": {"id": "basin"},
            "geometry": {"type": "Polygon", "coordinates": [[[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]]},
        }
        (out / "basin.geojson").write_text(json.dumps(basin, sort_keys=True) + "\n")
        doc = {"kind": "rain", "pattern_mm": pattern, "noise": not args.no_noise}
    (out / "truth.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reservoirwatch", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help=f"key=value config file (default: ${CONFIG_ENV})")

    e = sub.add_parser("extent", help="water extent per scene pair")
    common(e)
    e.add_argument("--vv-dir")
    e.add_argument("--vh-dir")
    e.add_argument("--reservoir")
    e.add_argument("--out-csv")
    e.add_argument("--mask-out-dir")
    e.add_argument("--append", action="store_true", help="append to --out-csv instead of replacing it")
    e.add_argument("--units", choices=["db", "linear"])
    e.add_argument("--window", type=int)
    e.add_argument("--looks", type=float)
    e.add_argument("--min-valid", type=int)
    e.add_argument("--combine", choices=["And", "Or", "VvOnly", "VhOnly"])
    e.add_argument("--min-pixels", type=int)
    e.add_argument("--connectivity", choices=["Four", "Eight"])
    e.add_argument("--nbins", type=int)
    e.add_argument("--jobs", type=int)
    e.set_defaults(func=cmd_extent)

    r = sub.add_parser("rain", help="rainfall aggregation")
    common(r)
    r.add_argument("--daily-dir")
    r.add_argument("--mode", choices=["annual-mean", "monthly-climatology", "zonal"])
    r.add_argument("--polygon")
    r.add_argument("--start-year", type=int)
    r.add_argument("--end-year", type=int)
    r.add_argument("--out")
    r.add_argument("--raster-dir", help="also write per-cell climatology grids here")
    r.add_argument("--no-latitude-weighting", dest="latitude_weighting", action="store_const", const=False)
    r.set_defaults(func=cmd_rain)

    a = sub.add_parser("analyze", help="box statistics, plots and lag correlation")
    common(a)
    a.add_argument("--extent-csv")
    a.add_argument("--rain-csv")
    a.add_argument("--reservoir")
    a.add_argument("--out-dir")
    a.add_argument("--max-lag", type=int)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("synth", help="generate synthetic inputs with truth.json")
    s.add_argument("--kind", choices=["scene", "rain"], required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--reservoir", default="synthetic")
    s.add_argument("--n-scenes", type=int, default=3)
    s.add_argument("--start-date", default="2022-01-01")
    s.add_argument("--end-date", default="2022-12-31")
    s.add_argument("--step-days", type=int, default=30)
    s.add_argument("--area-km2", type=float, default=1.0)
    s.add_argument("--cellsize", type=float, default=10.0)
    s.add_argument("--looks", type=float, default=4.4)
    s.add_argument("--land-vv", type=float, default=-8.0)
    s.add_argument("--water-vv", type=float, default=-20.0)
    s.add_argument("--land-vh", type=float, default=-14.0)
    s.add_argument("--water-vh", type=float, default=-26.0)
    s.add_argument("--noise-blobs", type=int, default=0)
    s.add_argument("--pattern", default="30,30,60,120,150,90,80,90,150,250,200,80")
    s.add_argument("--nrows", type=int, default=20)
    s.add_argument("--ncols", type=int, default=20)
    s.add_argument("--cellsize-deg", type=float, default=0.05)
    s.add_argument("--x-origin", type=float, default=80.0)
    s.add_argument("--y-origin", type=float, default=7.0)
    s.add_argument("--no-noise", action="store_true")
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EmptyPeriod, EmptyMask) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ReservoirWatchError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
