import numpy as np
import pytest

from inrstyle import latents
from inrstyle.imaging import Image
from inrstyle.latents import (AlphaField, AlphaMap, GradientAlpha, LatentPair,
                              RegionAlphas, UniformAlpha, compile_alpha,
                              compile_alpha_band)


class TestLatentPair:
    def test_deterministic_per_seed(self):
        a, b = latents.init_latents(5), latents.init_latents(5)
        assert np.array_equal(a.z_content, b.z_content)
        assert np.array_equal(a.z_style, b.z_style)

    def test_different_seeds_differ(self):
        assert not np.array_equal(latents.init_latents(0).z_content,
                                  latents.init_latents(1).z_content)

    def test_default_dim_16(self):
        pair = latents.init_latents(0)
        assert pair.z_content.shape == (16,)
        assert pair.z_content.dtype == np.float32

    def test_content_and_style_distinct(self):
        pair = latents.init_latents(0)
        assert not np.array_equal(pair.z_content, pair.z_style)

    def test_mismatched_shapes_rejected(self):
        with pytest.raises(ValueError):
            LatentPair(np.zeros(4, np.float32), np.zeros(5, np.float32), seed=0)


class TestInterpolate:
    def test_endpoints_exact(self):
        pair = latents.init_latents(3)
        assert np.array_equal(latents.interpolate(pair, 1.0), pair.z_content)
        assert np.array_equal(latents.interpolate(pair, 0.0), pair.z_style)

    def test_midpoint(self):
        pair = latents.init_latents(3)
        mid = latents.interpolate(pair, 0.5)
        ref = 0.5 * (pair.z_content.astype(np.float64) + pair.z_style)
        assert np.allclose(mid, ref, atol=1e-6)

    def test_out_of_range_rejected(self):
        pair = latents.init_latents(3)
        for alpha in (-0.1, 1.1):
            with pytest.raises(ValueError):
                latents.interpolate(pair, alpha)

    def test_expand_matches_interpolate(self):
        pair = latents.init_latents(3)
        field = AlphaField(np.array([[0.0, 0.25], [0.5, 1.0]], np.float32))
        rows = latents.expand(pair, field)
        assert rows.shape == (4, 16)
        for i, a in enumerate([0.0, 0.25, 0.5, 1.0]):
            assert np.array_equal(rows[i], latents.interpolate(pair, a))


class TestAlphaField:
    def test_range_validation(self):
        with pytest.raises(ValueError):
            AlphaField(np.array([[1.2]], np.float32))
        with pytest.raises(ValueError):
            AlphaField(np.array([[-0.1]], np.float32))

    def test_requires_2d(self):
        with pytest.raises(ValueError):
            AlphaField(np.zeros((2, 2, 2), np.float32))


class TestCompile:
    def test_uniform(self):
        field = compile_alpha(UniformAlpha(0.3), 4, 5)
        assert field.values.shape == (4, 5)
        assert np.all(field.values == np.float32(0.3))

    def test_uniform_range_error(self):
        with pytest.raises(ValueError):
            compile_alpha(UniformAlpha(1.5), 2, 2)

    def test_map_resamples_and_clips(self):
        data = np.array([[0.0, 1.0]], np.float32)
        field = compile_alpha(AlphaMap(data), 1, 4)
        assert np.allclose(field.values[0], [0.0, 0.25, 0.75, 1.0], atol=1e-6)

    def test_map_from_image_uses_luma(self):
        img = Image(np.full((2, 2, 3), 0.5, np.float32))
        field = compile_alpha(AlphaMap(img), 2, 2)
        assert np.allclose(field.values, 0.5, atol=1e-3)

    def test_regions_painters_order(self):
        full = np.ones((4, 4), np.float32)
        left = np.zeros((4, 4), np.float32)
        left[:, :2] = 1.0
        spec = RegionAlphas(regions=((full, 0.2), (left, 0.8)), default_alpha=0.5)
        field = compile_alpha(spec, 4, 4).values
        assert np.all(field[:, :2] == np.float32(0.8))  # later region wins
        assert np.all(field[:, 2:] == np.float32(0.2))

    def test_regions_default_only(self):
        field = compile_alpha(RegionAlphas(regions=()), 2, 3).values
        assert np.all(field == 1.0)

    def test_region_alpha_range_error(self):
        mask = np.ones((2, 2), np.float32)
        with pytest.raises(ValueError):
            compile_alpha(RegionAlphas(regions=((mask, 2.0),)), 2, 2)

    def test_gradient_x(self):
        field = compile_alpha(GradientAlpha("x", 0.0, 1.0), 2, 5).values
        assert np.allclose(field[0], [0.0, 0.25, 0.5, 0.75, 1.0], atol=1e-6)
        assert np.array_equal(field[0], field[1])

    def test_gradient_y(self):
        field = compile_alpha(GradientAlpha("y", 1.0, 0.0), 3, 2).values
        assert np.allclose(field[:, 0], [1.0, 0.5, 0.0], atol=1e-6)

    def test_gradient_singleton_axis_is_start(self):
        field = compile_alpha(GradientAlpha("x", 0.0, 1.0), 3, 1).values
        assert np.all(field == 0.0)

    def test_gradient_bad_axis(self):
        with pytest.raises(ValueError):
            compile_alpha(GradientAlpha("z", 0.0, 1.0), 2, 2)

    def test_unknown_spec_type(self):
        with pytest.raises(TypeError):
            compile_alpha(object(), 2, 2)


class TestCompileBand:
    @pytest.mark.parametrize("spec", [
        UniformAlpha(0.7),
        GradientAlpha("y", 0.1, 0.9),
        GradientAlpha("x", 0.0, 1.0),
    ])
    def test_band_equals_full_slice(self, spec):
        full = compile_alpha(spec, 13, 9).values
        for r0, r1 in [(0, 13), (0, 4), (6, 11), (12, 13)]:
            assert np.array_equal(compile_alpha_band(spec, 13, 9, r0, r1), full[r0:r1])

    def test_band_equals_full_slice_map(self):
        data = np.random.default_rng(0).random((7, 5)).astype(np.float32)
        spec = AlphaMap(data)
        full = compile_alpha(spec, 20, 11).values
        for r0, r1 in [(0, 20), (3, 9), (19, 20)]:
            assert np.array_equal(compile_alpha_band(spec, 20, 11, r0, r1), full[r0:r1])

    def test_band_equals_full_slice_regions(self):
        rng = np.random.default_rng(1)
        spec = RegionAlphas(regions=(
            (rng.random((6, 6)).astype(np.float32), 0.1),
            (rng.random((4, 9)).astype(np.float32), 0.9),
        ), default_alpha=0.4)
        full = compile_alpha(spec, 15, 10).values
        band = compile_alpha_band(spec, 15, 10, 4, 12)
        assert np.array_equal(band, full[4:12])
