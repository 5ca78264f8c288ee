import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import otsu_bruteforce, otsu_exact
from reservoirwatch.errors import DegenerateDistribution, EmptyInput, ParamError
from reservoirwatch.raster import GridGeo, Raster, Scene, Units
from reservoirwatch.threshold import (
    Histogram,
    build_histogram,
    otsu_threshold,
    scene_otsu,
    scene_thresholds,
    variance_terms,
)


def db(values, nodata=-9999.0):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    return Raster(GridGeo(values.shape[1], values.shape[0], 0, 0, 10), values, nodata, Units.DECIBEL)


def mixture_histogram(rng, nbins=None):
    nbins = nbins or int(rng.integers(8, 80))
    n1, n2 = rng.integers(50, 2000, size=2)
    mu1 = rng.uniform(-30, -5)
    mu2 = mu1 + rng.uniform(0, 20)
    x = np.concatenate([rng.normal(mu1, rng.uniform(0.5, 4), n1), rng.normal(mu2, rng.uniform(0.5, 4), n2)])
    counts, _ = np.histogram(x, bins=nbins, range=(x.min(), x.max()))
    return Histogram(float(x.min()), float(x.max()), counts)


class TestHistogram:
    def test_equal_split(self):
        assert build_histogram(db([0, 0, 10, 10]), 2, (0, 10)).counts.tolist() == [2, 2]

    def test_last_bin_closed(self):
        assert build_histogram(db([1, 2, 3, 4]), 4, (1, 4)).counts.tolist() == [1, 1, 1, 1]

    def test_out_of_range_clamped(self):
        h = build_histogram(db([-50, 0, 5, 99]), 2, (0, 10))
        assert h.counts.tolist() == [2, 2]

    def test_errors(self):
        with pytest.raises(EmptyInput):
            build_histogram(db([-9999.0, -9999.0]))
        with pytest.raises(DegenerateDistribution):
            build_histogram(db([3.0, 3.0, 3.0]))
        with pytest.raises(ParamError):
            build_histogram(db([1.0, 2.0]), 1)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.one_of(st.floats(-40, 10), st.just(-9999.0)), min_size=2, max_size=200), st.integers(2, 300))
    def test_total_is_valid_count(self, vals, nbins):
        r = db(vals)
        valid = r.valid_values()
        if valid.size == 0 or valid.min() == valid.max():
            return
        assert build_histogram(r, nbins).total == valid.size


class TestOtsu:
    def test_two_spikes(self):
        counts = np.zeros(256, dtype=int)
        w = 30 / 256
        counts[int((-22 + 30) / w)] = 100
        counts[int((-6 + 30) / w)] = 100
        res = otsu_threshold(Histogram(-30, 0, counts))
        assert -22 < res.threshold < -6
        assert res.p_w == 0.5 and res.p_nw == 0.5

    def test_single_bin_degenerate(self):
        with pytest.raises(DegenerateDistribution):
            otsu_threshold(Histogram(0, 1, [0, 5, 0]))

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            h = mixture_histogram(rng)
            assert otsu_threshold(h).index == otsu_exact(h.counts)

    def test_integer_oracle_agrees_with_rational_oracle(self):
        rng = np.random.default_rng(13)
        for _ in range(60):
            h = mixture_histogram(rng, nbins=int(rng.integers(4, 24)))
            assert otsu_exact(h.counts) == otsu_bruteforce(h.counts.tolist(), h.lo, h.hi)

    def test_tie_to_smallest(self):
        # symmetric three-spike histogram: boundaries 1 and 2 are equivalent
        h = Histogram(0, 3, [10, 0, 10])
        assert otsu_threshold(h).index == 1

    def test_result_invariants(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            h = mixture_histogram(rng)
            r = otsu_threshold(h)
            assert abs(r.p_w + r.p_nw - 1) <= 1e-9
            assert 0 <= r.p_w <= 1 and r.sigma_w2 >= 0 and r.sigma_nw2 >= 0
            assert h.lo <= r.threshold <= h.hi

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100), st.floats(-100, 100))
    def test_affine_remap(self, seed, a, b):
        h = mixture_histogram(np.random.default_rng(seed))
        h2 = Histogram(a * h.lo + b, a * h.hi + b, h.counts)
        t, t2 = otsu_threshold(h), otsu_threshold(h2)
        assert t.index == t2.index
        assert t2.threshold == pytest.approx(a * t.threshold + b, rel=1e-9, abs=1e-9 * max(1, abs(b)))

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(0, 10_000), min_size=2, max_size=64), st.floats(-50, 0), st.floats(0.1, 60))
    def test_decomposition_identity(self, counts, lo, span):
        if sum(counts) == 0:
            return
        t = variance_terms(Histogram(lo, lo + span, counts))
        ok = ~np.isnan(t["within"])
        total = t["total"]
        lhs = t["within"][ok] + t["between"][ok]
        assert np.all(np.abs(lhs - total) <= 1e-9 * max(total, 1e-300))


class TestSceneThresholds:
    def _scene(self, vv, vh):
        return Scene(db(vv), db(vh), dt.date(2022, 1, 1), "r")

    def test_identical_bands(self):
        rng = np.random.default_rng(0)
        x = np.concatenate([rng.normal(-20, 1, 500), rng.normal(-8, 1, 500)]).reshape(20, 50)
        t_vv, t_vh = scene_thresholds(self._scene(x, x))
        assert t_vv == t_vh

    def test_bracketed(self):
        rng = np.random.default_rng(1)
        water = rng.random((40, 40)) < 0.4
        vv = np.where(water, -20, -8) + rng.normal(0, 1.5, water.shape)
        vh = np.where(water, -26, -14) + rng.normal(0, 1.5, water.shape)
        t_vv, t_vh = scene_thresholds(self._scene(vv, vh))
        assert -20 < t_vv < -8 and -26 < t_vh < -14

    def test_degenerate_band_named(self):
        rng = np.random.default_rng(2)
        vv = rng.normal(-10, 3, (10, 10))
        with pytest.raises(DegenerateDistribution) as err:
            scene_otsu(self._scene(vv, np.full((10, 10), -20.0)))
        assert err.value.band == "VH"

    def test_unimodal_low_separation(self):
        rng = np.random.default_rng(3)
        x = rng.normal(-20, 1, (60, 60))
        res, _ = scene_otsu(self._scene(x, x))
        # Otsu still splits a single Gaussian; class means end up close together
        sep = np.sqrt(res.sigma_between / (res.p_w * res.p_nw))
        assert sep < 3.0
