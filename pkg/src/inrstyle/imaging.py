"""Raster image I/O and resampling.

Images live internally as float RGB in [0, 1]; 8-bit values appear only at
the PNG/JPEG boundary.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from io import BytesIO

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError


class DecodeError(ValueError):
    """Raised when an encoded image cannot be parsed."""


@dataclass(frozen=True)
class Image:
    """H x W x 3 raster, float32 channels in [0, 1], row-major."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise ValueError(f"image data must be (H, W, 3), got {self.data.shape}")
        if self.data.dtype != np.float32:
            object.__setattr__(self, "data", self.data.astype(np.float32))
        if self.data.size == 0:
            raise ValueError("empty image")
        lo, hi = float(self.data.min()), float(self.data.max())
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo < 0.0 or hi > 1.0:
            raise ValueError(f"channel values outside [0, 1]: min={lo}, max={hi}")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def decode(data: bytes) -> Image:
    """Decode PNG or JPEG bytes to a float image (8-bit value / 255 exactly)."""
    try:
        with PILImage.open(BytesIO(data)) as pil:
            pil.load()
            rgb = pil.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc
    return Image(arr.astype(np.float32) / np.float32(255.0))


def decode_gray(data: bytes) -> np.ndarray:
    """Decode to a 2-D float32 array in [0, 1] (grayscale value / 255)."""
    try:
        with PILImage.open(BytesIO(data)) as pil:
            pil.load()
            gray = pil.convert("L")
            arr = np.asarray(gray, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc
    return arr.astype(np.float32) / np.float32(255.0)


def to_uint8(img: Image) -> np.ndarray:
    # round half away from zero: 0.5 -> 128
    return np.clip(np.floor(img.data * 255.0 + 0.5), 0, 255).astype(np.uint8)


def encode(img: Image, format: str = "png") -> bytes:
    """Encode to PNG (lossless reference format) or JPEG bytes."""
    fmt = format.lower()
    if fmt not in ("png", "jpeg", "jpg"):
        raise ValueError(f"unsupported format {format!r}")
    pil = PILImage.fromarray(to_uint8(img), mode="RGB")
    buf = BytesIO()
    pil.save(buf, format="PNG" if fmt == "png" else "JPEG")
    return buf.getvalue()


def encode_gray(values: np.ndarray) -> bytes:
    """Encode a 2-D array in [0, 1] as an 8-bit grayscale PNG."""
    arr = np.clip(np.floor(np.asarray(values, dtype=np.float32) * 255.0 + 0.5), 0, 255)
    pil = PILImage.fromarray(arr.astype(np.uint8), mode="L")
    buf = BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def _axis_positions(n_out: int, n_in: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # half-pixel centers, edges clamped
    pos = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    i0 = np.floor(pos).astype(np.int64)
    frac = pos - i0
    i1 = np.clip(i0 + 1, 0, n_in - 1)
    i0 = np.clip(i0, 0, n_in - 1)
    return i0, i1, frac


def resize_array_band(arr: np.ndarray, w: int, h: int, r0: int, r1: int) -> np.ndarray:
    """Rows [r0, r1) of the (h, w) bilinear resample of `arr`.

    Touches only the source rows the band depends on, so memory stays
    proportional to the band, not the full output. Bit-identical to slicing
    the full resample (each output row depends on its own two source rows).
    """
    if w < 1 or h < 1:
        raise ValueError("target dimensions must be >= 1")
    if not 0 <= r0 <= r1 <= h:
        raise ValueError(f"row band [{r0}, {r1}) out of range for height {h}")
    orig = np.asarray(arr)
    in_h, in_w = orig.shape[:2]
    if (in_h, in_w) == (h, w):
        return np.array(orig[r0:r1], copy=True)

    squeeze = orig.ndim == 2
    if r0 == r1:
        shape = (0, w) if squeeze else (0, w) + orig.shape[2:]
        return np.empty(shape, dtype=orig.dtype)
    j0, j1, fx = _axis_positions(w, in_w)
    i0, i1, fy = _axis_positions(h, in_h)
    i0, i1, fy = i0[r0:r1], i1[r0:r1], fy[r0:r1]
    need = np.unique(np.concatenate([i0, i1]))
    src = orig[need].astype(np.float64).reshape(len(need), in_w, -1)
    rows = src[:, j0] * (1.0 - fx)[None, :, None] + src[:, j1] * fx[None, :, None]
    k0 = np.searchsorted(need, i0)
    k1 = np.searchsorted(need, i1)
    out = rows[k0] * (1.0 - fy)[:, None, None] + rows[k1] * fy[:, None, None]
    if squeeze:
        out = out[:, :, 0]
    return out.astype(orig.dtype, copy=False)


def resize_array(arr: np.ndarray, w: int, h: int) -> np.ndarray:
    """Bilinear resample of a (H, W) or (H, W, C) array to (h, w)."""
    return resize_array_band(arr, w, h, 0, h)


def resize(img: Image, w: int, h: int) -> Image:
    """Bilinear resize with half-pixel centers; output dims (h, w)."""
    out = resize_array(img.data, w, h)
    return Image(np.clip(out, 0.0, 1.0).astype(np.float32))


def luminance(img: Image) -> np.ndarray:
    """Rec. 601 luma of an RGB image, 2-D float32 in [0, 1]."""
    d = img.data.astype(np.float64)
    y = 0.299 * d[:, :, 0] + 0.587 * d[:, :, 1] + 0.114 * d[:, :, 2]
    return np.clip(y, 0.0, 1.0).astype(np.float32)


def center_crop_square(img: Image) -> Image:
    """Crop the largest centered square."""
    side = min(img.height, img.width)
    top = (img.height - side) // 2
    left = (img.width - side) // 2
    return Image(np.array(img.data[top : top + side, left : left + side]))


def _png_chunk(stream, tag: bytes, data: bytes) -> None:
    stream.write(struct.pack(">I", len(data)))
    stream.write(tag)
    stream.write(data)
    stream.write(struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF))


def write_png_rows(stream, width: int, height: int, bands) -> None:
    """Stream an 8-bit RGB PNG from an iterable of row bands.

    Each band is (rows, width, 3), float in [0, 1] or uint8. Rows are
    compressed as they arrive (filter 0, one IDAT chunk per band), so huge
    outputs never need a full-frame buffer.
    """
    if width < 1 or height < 1:
        raise ValueError("PNG dimensions must be >= 1")
    stream.write(b"\x89PNG\r\n\x1a\n")
    _png_chunk(stream, b"IHDR", struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0))
    comp = zlib.compressobj(6)
    total = 0
    for band in bands:
        band = np.asarray(band)
        u8 = band if band.dtype == np.uint8 else \
            np.clip(np.floor(band * 255.0 + 0.5), 0, 255).astype(np.uint8)
        if u8.ndim != 3 or u8.shape[1] != width or u8.shape[2] != 3:
            raise ValueError(f"band shape {band.shape} incompatible with width {width}")
        total += u8.shape[0]
        if total > height:
            raise ValueError(f"more rows than the declared height {height}")
        scanlines = np.empty((u8.shape[0], 1 + width * 3), dtype=np.uint8)
        scanlines[:, 0] = 0
        scanlines[:, 1:] = u8.reshape(u8.shape[0], -1)
        out = comp.compress(scanlines.tobytes())
        if out:
            _png_chunk(stream, b"IDAT", out)
    if total != height:
        raise ValueError(f"got {total} rows, declared height {height}")
    out = comp.flush()
    if out:
        _png_chunk(stream, b"IDAT", out)
    _png_chunk(stream, b"IEND", b"")
