import io

import numpy as np
import pytest
from PIL import Image as PILImage

from inrstyle import imaging
from inrstyle.imaging import Image


def _img(arr):
    return Image(np.asarray(arr, dtype=np.float32))


def _noise(h, w, seed=0):
    return _img(np.random.default_rng(seed).random((h, w, 3)))


class TestImageType:
    def test_accepts_valid(self):
        img = _noise(4, 6)
        assert (img.height, img.width) == (4, 6)

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            Image(np.zeros((4, 4), dtype=np.float32))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            _img(np.full((2, 2, 3), 1.5))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Image(np.zeros((0, 3, 3), dtype=np.float32))


class TestCodec:
    def test_png_round_trip_exact_at_8bit(self):
        img = _noise(9, 7, seed=1)
        back = imaging.decode(imaging.encode(img))
        # PNG is lossless; the residual is only the float->u8 quantization
        assert np.array_equal(imaging.to_uint8(back), imaging.to_uint8(img))

    def test_decode_converts_to_rgb(self):
        buf = io.BytesIO()
        PILImage.new("L", (5, 4), color=128).save(buf, format="PNG")
        img = imaging.decode(buf.getvalue())
        assert img.data.shape == (4, 5, 3)
        assert np.allclose(img.data, 128 / 255.0)

    def test_decode_garbage_raises(self):
        with pytest.raises(ValueError):
            imaging.decode(b"not an image at all")

    def test_to_uint8_rounds_half_up(self):
        img = _img(np.full((1, 1, 3), 0.5))
        assert imaging.to_uint8(img)[0, 0, 0] == 128

    def test_decode_gray(self):
        buf = io.BytesIO()
        PILImage.new("L", (3, 2), color=51).save(buf, format="PNG")
        plane = imaging.decode_gray(buf.getvalue())
        assert plane.shape == (2, 3)
        assert np.allclose(plane, 0.2)


class TestResize:
    def test_identity_is_copy(self):
        img = _noise(5, 5)
        out = imaging.resize(img, 5, 5)
        assert np.array_equal(out.data, img.data)
        assert out.data is not img.data

    def test_upsample_2x1_to_4x1_oracle(self):
        # half-pixel centers: positions -0.25, 0.25, 0.75, 1.25 clamped
        col = np.array([[0.0], [1.0]])
        out = imaging.resize_array(col, 1, 4)
        assert np.allclose(out[:, 0], [0.0, 0.25, 0.75, 1.0], atol=1e-12)

    def test_downsample_averages(self):
        plane = np.array([[0.0, 1.0], [0.0, 1.0]])
        out = imaging.resize_array(plane, 1, 1)
        assert np.allclose(out, 0.5, atol=1e-12)

    def test_band_matches_full(self):
        rng = np.random.default_rng(4)
        arr = rng.random((23, 17, 3))
        full = imaging.resize_array(arr, 11, 37)
        for r0, r1 in [(0, 37), (0, 1), (5, 20), (36, 37), (10, 10)]:
            band = imaging.resize_array_band(arr, 11, 37, r0, r1)
            assert np.array_equal(band, full[r0:r1])

    def test_band_matches_full_2d(self):
        arr = np.random.default_rng(5).random((9, 30))
        full = imaging.resize_array(arr, 44, 6)
        band = imaging.resize_array_band(arr, 44, 6, 2, 5)
        assert np.array_equal(band, full[2:5])

    def test_bad_dims(self):
        with pytest.raises(ValueError):
            imaging.resize(_noise(4, 4), 0, 4)

    def test_bad_band(self):
        with pytest.raises(ValueError):
            imaging.resize_array_band(np.zeros((4, 4)), 4, 4, 3, 2)


class TestOps:
    def test_luminance_rec601(self):
        img = _img([[[1.0, 0.0, 0.0]]])
        assert abs(imaging.luminance(img)[0, 0] - 0.299) < 1e-6
        img = _img([[[0.0, 1.0, 0.0]]])
        assert abs(imaging.luminance(img)[0, 0] - 0.587) < 1e-6

    def test_center_crop_square(self):
        img = _noise(10, 16)
        out = imaging.center_crop_square(img)
        assert (out.height, out.width) == (10, 10)
        assert np.array_equal(out.data, img.data[:, 3:13])


class TestStreamingPng:
    def test_stream_matches_pixels(self):
        img = _noise(21, 13, seed=7)
        buf = io.BytesIO()
        bands = [img.data[0:8], img.data[8:16], img.data[16:21]]
        imaging.write_png_rows(buf, 13, 21, bands)
        back = imaging.decode(buf.getvalue())
        assert np.array_equal(imaging.to_uint8(back), imaging.to_uint8(img))

    def test_stream_is_deterministic(self):
        img = _noise(6, 6, seed=8)
        chunks = [img.data[:3], img.data[3:]]
        a, b = io.BytesIO(), io.BytesIO()
        imaging.write_png_rows(a, 6, 6, chunks)
        imaging.write_png_rows(b, 6, 6, chunks)
        assert a.getvalue() == b.getvalue()

    def test_row_count_mismatch_raises(self):
        with pytest.raises(ValueError):
            imaging.write_png_rows(io.BytesIO(), 4, 5, [np.zeros((4, 4, 3), np.uint8)])

    def test_width_mismatch_raises(self):
        with pytest.raises(ValueError):
            imaging.write_png_rows(io.BytesIO(), 4, 2, [np.zeros((2, 3, 3), np.uint8)])
