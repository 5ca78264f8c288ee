"""Refined Lee speckle filter for intensity (linear power) SAR rasters.

For each pixel the w x w window is split into a 3 x 3 grid of overlapping
sub-windows. The axis (N-S, NE-SW, E-W, SE-NW) with the largest absolute
difference between the sub-means on its two sides (three per side) is
taken as the edge gradient, and
of its two ends the one whose sub-mean is closer to the centre sub-mean
picks the half-window used for the local statistics::

    k   = max(0, (v - m**2 * cv**2) / (v * (1 + cv**2))),  cv = 1 / sqrt(looks)
    out = m + k * (x - m)

Half-windows include the centre row, column or diagonal. For a 7 x 7
window the sub-windows are 3 x 3 on a stride of 2, the classic layout.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ParamError, UnitsError
from .raster import Raster, Units

# order fixes the tie-break: N, NE, E, SE, S, SW, W, NW
DIRECTIONS = ("N", "NE", "E", "SE", "S", "SW", "W", "NW")
_DIR_OFFSETS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
_FULL = 8
_CHUNK_ELEMS = 1 << 21


@dataclass(frozen=True)
class SpeckleParams:
    window: int = 7
    looks: float = 4.4
    min_valid: int = 9

    def __post_init__(self):
        if int(self.window) != self.window or self.window < 5 or self.window % 2 == 0:
            raise ParamError(f"window must be an odd integer >= 5, got {self.window}")
        if not self.looks > 0:
            raise ParamError(f"looks must be positive, got {self.looks}")
        if int(self.min_valid) != self.min_valid or self.min_valid < 1:
            raise ParamError(f"min_valid must be a positive integer, got {self.min_valid}")


def _sub_layout(window):
    """Sub-window side and stride such that 2 * stride + side == window."""
    side = ((window - 1) // 4) * 2 + 1
    return side, (window - side) // 2


def window_masks(window: int) -> np.ndarray:
    """Indicator matrix of shape (window**2, 18) over the flattened window.

    Columns 0-8 are the 3 x 3 sub-windows (row-major, NW first), 9-16 the
    half-windows in ``DIRECTIONS`` order and 17 the full window.
    """
    r = window // 2
    side, stride = _sub_layout(window)
    h = side // 2
    ii, jj = np.mgrid[-r:r + 1, -r:r + 1]
    cols = []
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            cols.append((abs(ii - a * stride) <= h) & (abs(jj - b * stride) <= h))
    halves = {
        "N": ii <= 0,
        "NE": jj >= ii,
        "E": jj >= 0,
        "SE": ii + jj >= 0,
        "S": ii >= 0,
        "SW": jj <= ii,
        "W": jj <= 0,
        "NW": ii + jj <= 0,
    }
    cols.extend(halves[d] for d in DIRECTIONS)
    cols.append(np.ones_like(ii, dtype=bool))
    return np.stack([c.ravel() for c in cols], axis=1)


# For each of the four axes (N-S, NE-SW, E-W, SE-NW) the three sub-window
# positions on the first-named side; the opposite side is the point reflection.
_AXIS_SIDES = (
    ((-1, -1), (-1, 0), (-1, 1)),
    ((-1, 0), (-1, 1), (0, 1)),
    ((-1, 1), (0, 1), (1, 1)),
    ((0, 1), (1, 1), (1, 0)),
)


def _select_direction(sub_means):
    """Pick the half-window index for each pixel from its 9 sub-means.

    ``sub_means`` has shape (n, 9), NaN where a sub-window has no valid
    pixel. The gradient along an axis is the difference between the mean
    sub-mean on either side of it; the strongest axis wins (ties in
    DIRECTIONS order) and the half whose end sub-mean is closer to the
    centre sub-mean is chosen. Returns indices into DIRECTIONS, or 8 (full
    window) when no axis has sub-means on both sides.
    """
    grid = lambda a, b: sub_means[:, (a + 1) * 3 + (b + 1)]
    centre = grid(0, 0)
    with np.errstate(invalid="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        grads = []
        for side in _AXIS_SIDES:
            fwd = np.nanmean(np.stack([grid(a, b) for a, b in side], axis=1), axis=1)
            back = np.nanmean(np.stack([grid(-a, -b) for a, b in side], axis=1), axis=1)
            grads.append(np.abs(fwd - back))
    grad = np.stack(grads, axis=1)
    usable = np.isfinite(grad)
    grad = np.where(usable, grad, -np.inf)
    axis = np.argmax(grad, axis=1)
    ends = np.stack([grid(*_DIR_OFFSETS[d]) for d in range(8)], axis=1)
    rows = np.arange(len(axis))
    near = np.abs(ends[rows, axis] - centre)
    far = np.abs(ends[rows, axis + 4] - centre)
    near = np.where(np.isfinite(near), near, np.inf)
    far = np.where(np.isfinite(far), far, np.inf)
    choice = np.where(near <= far, axis, axis + 4)
    return np.where(usable.any(axis=1), choice, _FULL)


def refined_lee(r: Raster, p: SpeckleParams = SpeckleParams()) -> Raster:
    """Despeckle a linear-power raster with the refined Lee filter.

    Window statistics use population variance over valid pixels only;
    nodata cells pass through. Pixels whose selected half-window holds
    fewer than ``p.min_valid`` valid pixels are left unfiltered. Windows
    are cropped at the raster border. Output is clamped to the range of the
    half-window it was computed from, so constant fields are reproduced
    exactly.
    """
    if r.units is not Units.LINEAR_POWER:
        raise UnitsError(f"refined_lee needs LinearPower input, got {r.units.value}")
    if not isinstance(p, SpeckleParams):
        raise ParamError("p must be a SpeckleParams")

    w = p.window
    rad = w // 2
    valid = r.valid
    x = np.where(valid, r.values, 0.0)
    nrows, ncols = x.shape

    xp = np.pad(x, rad)
    vp = np.pad(valid, rad)
    xwin = sliding_window_view(xp, (w, w))
    vwin = sliding_window_view(vp, (w, w))

    masks = window_masks(w)
    mf = masks.astype(np.float64)
    cv2 = 1.0 / p.looks
    out = np.array(r.values)

    chunk_rows = max(1, _CHUNK_ELEMS // (ncols * w * w))
    for r0 in range(0, nrows, chunk_rows):
        r1 = min(nrows, r0 + chunk_rows)
        centre_ok = valid[r0:r1].ravel()
        if not centre_ok.any():
            continue
        xs = xwin[r0:r1].reshape(-1, w * w)[centre_ok]
        vs = vwin[r0:r1].reshape(-1, w * w)[centre_ok]
        vf = vs.astype(np.float64)

        s1 = xs @ mf
        s2 = (xs * xs) @ mf
        cnt = vf @ mf

        with np.errstate(invalid="ignore", divide="ignore"):
            sub_means = s1[:, :9] / cnt[:, :9]
        sel = _select_direction(sub_means) + 9

        rows = np.arange(len(sel))
        n = cnt[rows, sel]
        m = s1[rows, sel] / n
        v = np.maximum(s2[rows, sel] / n - m * m, 0.0)
        xc = xs[:, w * w // 2]
        with np.errstate(invalid="ignore", divide="ignore"):
            k = (v - m * m * cv2) / (v * (1.0 + cv2))
        k = np.where(v > 0, np.clip(k, 0.0, 1.0), 0.0)
        y = m + k * (xc - m)

        member = masks.T[sel] & vs
        lo = np.where(member, xs, np.inf).min(axis=1)
        hi = np.where(member, xs, -np.inf).max(axis=1)
        y = np.clip(y, lo, hi)
        y = np.where(n >= p.min_valid, y, xc)

        block = out[r0:r1].reshape(-1)
        block[centre_ok] = y
        out[r0:r1] = block.reshape(r1 - r0, ncols)

    return r.with_values(out)
