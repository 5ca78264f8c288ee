"""Reservoir water extent from dual-polarization SAR and gridded rainfall analysis."""
from .errors import *  # noqa: F401,F403
from .raster import (
    CrsKind,
    GridGeo,
    PolygonSet,
    Raster,
    Scene,
    SeriesTable,
    Units,
    db_to_linear,
    linear_to_db,
    read_ascii_grid,
    read_polygons,
    read_series_csv,
    write_ascii_grid,
    write_series_csv,
)
from .speckle import SpeckleParams, refined_lee
from .threshold import (
    Histogram,
    OtsuResult,
    build_histogram,
    otsu_threshold,
    scene_otsu,
    scene_thresholds,
    variance_terms,
)
from .watermask import (
    Combine,
    Connectivity,
    MaskParams,
    WaterExtentRecord,
    classify_water,
    compute_area,
    connected_components,
    despeckle_scene,
    filter_small_components,
    process_scene,
    read_records_csv,
    write_records_csv,
)
from .rainfall import (
    Climatology,
    ClimatologyTable,
    DailyStack,
    annual_mean,
    annual_total,
    load_stack,
    monthly_climatology,
    monthly_total,
    rasterize_polygon,
    zonal_mean,
)
from .analysis import (
    BoxStats,
    LagCorrResult,
    box_stats,
    group_by_month,
    lag_correlation,
    monthly_mean_series,
    pearson,
)
from .svg import render_box_svg, render_series_svg
from .synth import SynthSceneSpec, blob_polygon, gen_rain_stack, gen_scene, random_reservoir

__version__ = "0.1.0"
