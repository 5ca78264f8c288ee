"""Monthly rainfall climatology and basin means from a daily grid stack.

A synthetic CHIRPS-like stack (0.05 degree cells, monsoon-shaped monthly
pattern) stands in for the real archive. We compute the annual mean map,
the per-cell monthly climatology and a basin-averaged table, with cells
weighted by cos(latitude).

    python demos/02_rainfall_climatology.py
"""
import datetime as dt

import numpy as np

from reservoirwatch import (
    CrsKind,
    GridGeo,
    PolygonSet,
    annual_mean,
    gen_rain_stack,
    monthly_climatology,
    rasterize_polygon,
    zonal_mean,
)

# Sri Lanka-ish location, wet north-east monsoon in Oct-Dec.
pattern = [170, 80, 90, 210, 130, 70, 60, 70, 130, 330, 310, 250]
geo = GridGeo(40, 40, 80.0, 6.0, 0.05, CrsKind.GEOGRAPHIC)
stack = gen_rain_stack(geo, dt.date(2015, 1, 1), dt.date(2022, 12, 31), pattern, seed=3)
print(f"{len(stack)} daily layers, {stack.years()[0]}-{stack.years()[-1]}, gaps: {len(stack.gaps)}")

yearly = annual_mean(stack, 2015, 2022)
print(f"annual mean rainfall: {yearly.values.mean():.0f} mm (expected {sum(pattern)} mm)")

# A triangular basin in the middle of the grid.
basin = PolygonSet((([(80.4, 6.4), (81.7, 6.6), (81.0, 7.8), (80.4, 6.4)],),), id="basin")
mask = rasterize_polygon(basin, geo)
print(f"basin covers {int(mask.values.sum())} of {geo.nrows * geo.ncols} cells")

clim = monthly_climatology(stack, 2015, 2022, region=mask)
print("month  basin mean (mm)  expected  spread over years")
for m, mean in clim.table.rows():
    per_year = [v for _, v in clim.table.per_year[m]]
    print(f"{m:>5}  {mean:15.1f}  {pattern[m - 1]:8d}  {min(per_year):.0f}-{max(per_year):.0f}")

# Latitude weighting barely matters across two degrees near the equator,
# but it is what a basin mean over degree cells should use.
october = clim.layers[9]
print(f"October basin mean weighted {zonal_mean(october, mask):.3f} mm, "
      f"unweighted {zonal_mean(october, mask, latitude_weighting=False):.3f} mm")
print(f"October per-cell climatology range {np.ptp(october.values):.1f} mm")
