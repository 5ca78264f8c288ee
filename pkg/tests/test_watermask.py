import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import flood_fill_labels
from reservoirwatch.errors import CrsError, ParamError, SceneError
from reservoirwatch.raster import CrsKind, GridGeo, Raster, Scene, Units
from reservoirwatch.synth import SynthSceneSpec, gen_scene, random_reservoir
from reservoirwatch.watermask import (
    RECORD_HEADER,
    Combine,
    Connectivity,
    MaskParams,
    classify_water,
    compute_area,
    connected_components,
    filter_small_components,
    process_scene,
    read_records_csv,
    write_records_csv,
)

ND = -9999.0
D = dt.date(2022, 4, 1)


def db_scene(vv, vh):
    vv = np.atleast_2d(np.asarray(vv, float))
    vh = np.atleast_2d(np.asarray(vh, float))
    g = GridGeo(vv.shape[1], vv.shape[0], 0, 0, 10)
    return Scene(Raster(g, vv, ND, Units.DECIBEL), Raster(g, vh, ND, Units.DECIBEL), D, "res")


def mask(values, cellsize=10.0, crs=CrsKind.PROJECTED_METERS):
    values = np.atleast_2d(np.asarray(values, float))
    return Raster(GridGeo(values.shape[1], values.shape[0], 0, 0, cellsize, crs), values, ND, Units.LABEL)


def same_partition(labels, oracle):
    a = np.asarray(labels).ravel()
    b = np.asarray(oracle).ravel()
    pairs = set(zip(a.tolist(), b.tolist()))
    return len(pairs) == len({p[0] for p in pairs}) == len({p[1] for p in pairs})


class TestClassify:
    def test_both_below(self):
        out = classify_water(db_scene([-25], [-30]), -15, -20, Combine.AND)
        assert out.values[0, 0] == 1

    def test_rule_semantics(self):
        s = db_scene([-25], [-10])
        assert classify_water(s, -15, -20, Combine.AND).values[0, 0] == 0
        assert classify_water(s, -15, -20, Combine.OR).values[0, 0] == 1
        assert classify_water(s, -15, -20, Combine.VV_ONLY).values[0, 0] == 1
        assert classify_water(s, -15, -20, Combine.VH_ONLY).values[0, 0] == 0

    def test_nodata_in_used_band(self):
        s = db_scene([ND, -25], [-30, ND])
        assert classify_water(s, -15, -20, Combine.AND).values.ravel().tolist() == [ND, ND]
        assert classify_water(s, -15, -20, Combine.VV_ONLY).values.ravel().tolist() == [ND, 1]

    def test_non_finite_threshold(self):
        with pytest.raises(ParamError):
            classify_water(db_scene([-25], [-30]), float("nan"), -20)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_and_subset_of_or(self, seed):
        rng = np.random.default_rng(seed)
        s = db_scene(rng.uniform(-30, 0, (12, 12)), rng.uniform(-35, -5, (12, 12)))
        a = classify_water(s, -15, -20, Combine.AND).values
        o = classify_water(s, -15, -20, Combine.OR).values
        assert (a <= o).all()


class TestComponents:
    def test_single_pixel(self):
        lab, sizes = connected_components(mask([[0, 0, 0], [0, 1, 0], [0, 0, 0]]))
        assert sizes.tolist() == [1]

    def test_diagonal(self):
        m = mask([[1, 0], [0, 1]])
        assert len(connected_components(m, Connectivity.EIGHT)[1]) == 1
        assert len(connected_components(m, Connectivity.FOUR)[1]) == 2

    def test_nodata_is_background(self):
        lab, sizes = connected_components(mask([[1, ND, 1]]), Connectivity.EIGHT)
        assert lab.values.ravel().tolist() == [1, 0, 2]

    @pytest.mark.parametrize("conn", [Connectivity.FOUR, Connectivity.EIGHT])
    def test_against_flood_fill(self, conn):
        rng = np.random.default_rng(21)
        for _ in range(60):
            m = (rng.random((32, 32)) < rng.uniform(0.2, 0.7)).astype(float)
            lab, sizes = connected_components(mask(m), conn)
            oracle, k = flood_fill_labels(m.astype(int).tolist(), conn is Connectivity.EIGHT)
            # label order is row-major discovery, so labels agree exactly
            assert np.array_equal(lab.values, np.array(oracle, float))
            assert len(sizes) == k
            assert sizes.tolist() == np.bincount(np.ravel(oracle), minlength=k + 1)[1:].tolist()


class TestFilter:
    def test_identity_at_one(self):
        m = mask((np.random.default_rng(0).random((20, 20)) < 0.4).astype(float))
        lab, sizes = connected_components(m)
        out, removed = filter_small_components(lab, sizes, 1, m)
        assert np.array_equal(out.values, m.values) and removed == 0

    def test_three_pixel_blob(self):
        m = mask([[1, 1, 1, 0, 0]])
        out, removed = filter_small_components(*connected_components(m), 4)
        assert out.values.sum() == 0 and removed == 1

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 30), st.integers(0, 30))
    def test_monotone_in_min_pixels(self, seed, a, extra):
        m = mask((np.random.default_rng(seed).random((24, 24)) < 0.5).astype(float))
        lab, sizes = connected_components(m)
        lo, _ = filter_small_components(lab, sizes, a, m)
        hi, _ = filter_small_components(lab, sizes, a + extra, m)
        assert hi.values.sum() <= lo.values.sum()
        assert (lo.values <= m.values).all()


class TestArea:
    def test_hundred_pixels(self):
        assert compute_area(mask(np.ones((10, 10)))) == 0.01

    def test_empty(self):
        assert compute_area(mask(np.zeros((5, 5)))) == 0.0

    def test_full_km(self):
        assert compute_area(mask(np.ones((1000, 1000)))) == 100.0

    def test_geographic_refused(self):
        with pytest.raises(CrsError):
            compute_area(mask(np.ones((2, 2)), 0.01, CrsKind.GEOGRAPHIC))


class TestProcessScene:
    def _synth(self, area=1.0, seed=3, **kw):
        geo, poly = random_reservoir(area, seed)
        return gen_scene(SynthSceneSpec(geo=geo, water=poly, seed=seed, **kw))

    def test_one_km2(self):
        scene, truth, _ = self._synth(1.0)
        rec, cleaned = process_scene(scene)
        assert abs(rec.area_km2 - truth) / truth <= 0.05
        assert rec.area_km2 * 1e6 / 100.0 == rec.water_pixels
        assert not rec.low_confidence
        assert -20 < rec.t_vv < -8 and -26 < rec.t_vh < -14

    def test_deterministic(self):
        scene, _, _ = self._synth(0.5, seed=8)
        assert process_scene(scene)[0] == process_scene(scene)[0]

    def test_all_land_flagged(self):
        g = GridGeo(128, 128, 0, 0, 10)
        rng = np.random.default_rng(4)
        vv = Raster(g, -8 + 10 * np.log10(rng.gamma(4.4, 1 / 4.4, (128, 128))), units=Units.DECIBEL)
        vh = Raster(g, -14 + 10 * np.log10(rng.gamma(4.4, 1 / 4.4, (128, 128))), units=Units.DECIBEL)
        rec, _ = process_scene(Scene(vv, vh, D, "dry"))
        assert rec.low_confidence

    def test_cleaned_subset_of_raw(self):
        scene, _, _ = self._synth(0.3, seed=5)
        _, cleaned = process_scene(scene)
        raw_rec, raw = process_scene(scene, mp=MaskParams(min_pixels=1))
        assert (cleaned.values <= raw.values).all()
        assert raw_rec.removed_components == 0

    def test_noise_blobs_removed(self):
        clean, truth_area, truth = self._synth(1.0, seed=6)
        noisy, _, _ = self._synth(1.0, seed=6, noise_blobs=20)
        rec_clean, _ = process_scene(clean)
        rec, cleaned = process_scene(noisy)
        blobs = (clean.vv.values != noisy.vv.values)
        assert rec.removed_components > 0
        assert not (cleaned.values[blobs] == 1).any()
        assert abs(rec.area_km2 - rec_clean.area_km2) / truth_area < 0.01

    def test_errors_carry_scene_identity(self):
        g = GridGeo(8, 8, 0, 0, 10)
        flat = Raster(g, np.full((8, 8), -10.0), units=Units.DECIBEL)
        with pytest.raises(SceneError) as err:
            process_scene(Scene(flat, flat, D, "flat"))
        assert "flat" in str(err.value) and "2022-04-01" in str(err.value)


def test_records_csv_round_trip(tmp_path):
    g, poly = random_reservoir(0.2, 1)
    scene, _, _ = gen_scene(SynthSceneSpec(geo=g, water=poly, seed=1))
    rec, _ = process_scene(scene)
    p = tmp_path / "r.csv"
    write_records_csv([rec], p)
    write_records_csv([rec], p, append=True)
    lines = p.read_text().splitlines()
    assert lines[0] == ",".join(RECORD_HEADER)
    assert len(lines) == 3
    assert read_records_csv(p) == [rec, rec]
