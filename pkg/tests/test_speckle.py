import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.lib.stride_tricks import sliding_window_view

from reservoirwatch.errors import ParamError, UnitsError
from reservoirwatch.raster import GridGeo, Raster, Units
from reservoirwatch.speckle import DIRECTIONS, SpeckleParams, _select_direction, refined_lee, window_masks

ND = -9999.0


def lin(values, nodata=ND):
    values = np.asarray(values, dtype=float)
    return Raster(GridGeo(values.shape[1], values.shape[0], 0, 0, 10), values, nodata, Units.LINEAR_POWER)


def gamma_field(seed, shape=(256, 256), looks=4.4):
    rng = np.random.default_rng(seed)
    return rng.gamma(looks, 1 / looks, size=shape)


class TestParams:
    @pytest.mark.parametrize("kw", [dict(window=6), dict(window=3), dict(looks=0), dict(min_valid=0)])
    def test_invalid(self, kw):
        with pytest.raises(ParamError):
            SpeckleParams(**kw)

    def test_wrong_units(self):
        r = Raster(GridGeo(2, 2, 0, 0, 10), np.ones((2, 2)), units=Units.DECIBEL)
        with pytest.raises(UnitsError):
            refined_lee(r)


class TestWindowGeometry:
    def test_mask_shape_and_counts(self):
        m = window_masks(7)
        assert m.shape == (49, 18)
        assert (m[:, :9].sum(axis=0) == 9).all()
        # cardinal halves take 4 of 7 rows/cols, diagonal halves the triangle incl. diagonal
        assert (m[:, 9:17].sum(axis=0) == 28).all()
        assert m[:, 17].all()

    def test_every_half_contains_centre(self):
        m = window_masks(7)
        assert m[24, 9:].all()

    def test_opposite_halves_cover_window(self):
        m = window_masks(7)
        for d in range(4):
            assert (m[:, 9 + d] | m[:, 13 + d]).all()

    def test_vertical_edge_selects_east_or_west(self):
        sub = np.array([[1, 1, 9, 1, 1, 9, 1, 1, 9]], dtype=float)
        assert DIRECTIONS[_select_direction(sub)[0]] == "W"
        sub = np.array([[1, 9, 9, 1, 9, 9, 1, 9, 9]], dtype=float)
        assert DIRECTIONS[_select_direction(sub)[0]] == "E"

    def test_tie_goes_to_first_direction(self):
        sub = np.ones((1, 9))
        assert DIRECTIONS[_select_direction(sub)[0]] == "N"

    def test_no_opposing_pair_uses_full_window(self):
        sub = np.full((1, 9), np.nan)
        sub[0, 4] = 1.0
        assert _select_direction(sub)[0] == 8


class TestRefinedLee:
    def test_constant_fixed_point(self):
        r = lin(np.full((20, 17), 5.0))
        assert np.array_equal(refined_lee(r).values, r.values)

    @pytest.mark.parametrize("value", [0.3, 1e-4, 123.456])
    def test_constant_fixed_point_awkward_values(self, value):
        r = lin(np.full((15, 15), value))
        assert np.array_equal(refined_lee(r).values, r.values)

    def test_isolated_pixel_passes_through(self):
        v = np.full((9, 9), ND)
        v[4, 4] = 0.7
        out = refined_lee(lin(v))
        assert out.values[4, 4] == 0.7
        assert (out.values[out.values != 0.7] == ND).all()

    def test_nodata_excluded_and_preserved(self):
        v = np.full((30, 30), 2.0)
        v[10:20, 10:20] = ND
        out = refined_lee(lin(v)).values
        assert (out[10:20, 10:20] == ND).all()
        assert (out[v != ND] == 2.0).all()

    def test_variance_and_mean(self):
        x = gamma_field(1)
        y = refined_lee(lin(x)).values
        assert y.var() < 0.5 * x.var()
        assert abs(y.mean() - x.mean()) / x.mean() <= 0.01

    def test_step_edge_position(self):
        rng = np.random.default_rng(4)
        x = np.where(np.arange(256)[None, :] < 128, 0.01, 1.0) * np.ones((256, 1))
        x = x * rng.gamma(4.4, 1 / 4.4, size=x.shape)
        y = refined_lee(lin(x)).values
        mid = (0.01 + 1.0) / 2
        col = int(np.argmax(y.mean(axis=0) > mid))
        assert abs(col - 128) <= 1

    def test_locality(self):
        x = gamma_field(2, shape=(40, 40))
        a = refined_lee(lin(x)).values
        x2 = x.copy()
        x2[20, 17] *= 50
        b = refined_lee(lin(x2)).values
        rows, cols = np.nonzero(a != b)
        assert rows.size > 0
        assert np.abs(rows - 20).max() <= 3 and np.abs(cols - 17).max() <= 3

    def test_output_within_window_range(self):
        x = gamma_field(3, shape=(50, 60))
        y = refined_lee(lin(x)).values
        xp = np.pad(x, 3, mode="constant", constant_values=np.nan)
        win = sliding_window_view(xp, (7, 7))
        assert (y >= np.nanmin(win, axis=(2, 3))).all()
        assert (y <= np.nanmax(win, axis=(2, 3))).all()

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([5, 7, 9]))
    def test_variance_reduced_strictly(self, seed, window):
        x = gamma_field(seed, shape=(100, 100))
        y = refined_lee(lin(x), SpeckleParams(window=window)).values
        assert y.var() < x.var()

    def test_deterministic(self):
        x = lin(gamma_field(5, shape=(64, 64)))
        assert np.array_equal(refined_lee(x).values, refined_lee(x).values)
