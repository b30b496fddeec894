"""Latent pair, convex interpolation, and per-pixel style-degree fields.

The content/style latent vectors are drawn once per session and frozen;
training updates generator weights only. A style-degree field assigns each
pixel an alpha in [0, 1]: alpha = 1 reproduces content, alpha = 0 is full
stylization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from inrstyle.imaging import Image, luminance, resize_array_band

LATENT_DIM = 16


@dataclass(frozen=True)
class LatentPair:
    z_content: np.ndarray  # (dim,) float32, dim = 16 by default
    z_style: np.ndarray    # (dim,) float32
    seed: int

    def __post_init__(self):
        for name, z in (("z_content", self.z_content), ("z_style", self.z_style)):
            if z.ndim != 1 or z.size == 0:
                raise ValueError(f"{name} must be a non-empty vector, got shape {z.shape}")
            if not np.all(np.isfinite(z)):
                raise ValueError(f"{name} contains non-finite values")
        if self.z_content.shape != self.z_style.shape:
            raise ValueError("content and style latents must have the same shape")

    @property
    def dim(self) -> int:
        return self.z_content.shape[0]


def init_latents(seed: int, dim: int = LATENT_DIM) -> LatentPair:
    """Draw the fixed latent pair i.i.d. standard normal, deterministic per seed."""
    rng = np.random.default_rng(seed)
    z_c = rng.standard_normal(dim).astype(np.float32)
    z_s = rng.standard_normal(dim).astype(np.float32)
    return LatentPair(z_content=z_c, z_style=z_s, seed=seed)


def interpolate(pair: LatentPair, alpha: float) -> np.ndarray:
    """Convex combination alpha * z_content + (1 - alpha) * z_style."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    a = np.float32(alpha)
    return a * pair.z_content + (np.float32(1.0) - a) * pair.z_style


@dataclass(frozen=True)
class AlphaField:
    """Per-pixel style degree, values in [0, 1], shape (height, width)."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise ValueError(f"alpha field must be 2-D, got shape {v.shape}")
        if v.dtype != np.float32:
            object.__setattr__(self, "values", v.astype(np.float32))
        v = self.values
        if v.size == 0:
            raise ValueError("alpha field is empty")
        if not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("alpha values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class UniformAlpha:
    alpha: float


@dataclass(frozen=True)
class AlphaMap:
    """Grayscale map: value = alpha. Accepts a 2-D array in [0, 1] or an Image
    (reduced to luma). Resampled bilinearly to the target dims."""

    data: Union[np.ndarray, Image]


@dataclass(frozen=True)
class RegionAlphas:
    """Masked regions painted over a default alpha, in list order (later wins).

    Masks are grayscale images or 2-D arrays, binarized at 0.5 after resampling.
    """

    regions: tuple  # of (mask, alpha)
    default_alpha: float = 1.0


@dataclass(frozen=True)
class GradientAlpha:
    """Linear ramp from `start` to `stop` along axis 'x' (width) or 'y' (height)."""

    axis: str = "x"
    start: float = 0.0
    stop: float = 1.0


AlphaSpec = Union[UniformAlpha, AlphaMap, RegionAlphas, GradientAlpha]


def _as_plane(data: Union[np.ndarray, Image]) -> np.ndarray:
    plane = luminance(data) if isinstance(data, Image) else np.asarray(data, dtype=np.float32)
    if plane.ndim != 2:
        raise ValueError(f"expected 2-D map/mask, got shape {plane.shape}")
    if plane.size == 0:
        raise ValueError("map/mask is empty")
    if not np.all(np.isfinite(plane)):
        raise ValueError("map/mask contains non-finite values")
    return plane


def _check_alpha(value: float, what: str) -> float:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{what} must be in [0, 1], got {value}")
    return float(value)


def compile_alpha_band(spec: AlphaSpec, h: int, w: int, r0: int, r1: int) -> np.ndarray:
    """Rows [r0, r1) of the compiled (h, w) field, without materializing it.

    Matches compile_alpha(spec, h, w).values[r0:r1] exactly; this is what lets
    renders stream outputs far larger than memory.
    """
    if h < 1 or w < 1:
        raise ValueError("field dimensions must be >= 1")
    if not 0 <= r0 <= r1 <= h:
        raise ValueError(f"row band [{r0}, {r1}) out of range for height {h}")
    n_rows = r1 - r0
    if isinstance(spec, UniformAlpha):
        _check_alpha(spec.alpha, "uniform alpha")
        return np.full((n_rows, w), spec.alpha, dtype=np.float32)
    if isinstance(spec, AlphaMap):
        band = resize_array_band(_as_plane(spec.data), w, h, r0, r1)
        return np.clip(band.astype(np.float32, copy=False), 0.0, 1.0)
    if isinstance(spec, RegionAlphas):
        _check_alpha(spec.default_alpha, "default alpha")
        values = np.full((n_rows, w), spec.default_alpha, dtype=np.float32)
        for mask, alpha in spec.regions:
            _check_alpha(alpha, "region alpha")
            inside = resize_array_band(_as_plane(mask), w, h, r0, r1) >= 0.5
            values[inside] = alpha
        return values
    if isinstance(spec, GradientAlpha):
        _check_alpha(spec.start, "gradient start")
        _check_alpha(spec.stop, "gradient stop")
        if spec.axis not in ("x", "y"):
            raise ValueError(f"gradient axis must be 'x' or 'y', got {spec.axis!r}")
        n = w if spec.axis == "x" else h
        ramp = np.full(n, spec.start) if n == 1 else np.linspace(spec.start, spec.stop, n)
        ramp = ramp.astype(np.float32)
        if spec.axis == "x":
            return np.broadcast_to(ramp[None, :], (n_rows, w)).copy()
        return np.broadcast_to(ramp[r0:r1, None], (n_rows, w)).copy()
    raise TypeError(f"unknown alpha spec: {type(spec).__name__}")


def compile_alpha(spec: AlphaSpec, h: int, w: int) -> AlphaField:
    """Turn a control spec into a concrete (h, w) alpha field."""
    return AlphaField(compile_alpha_band(spec, h, w, 0, h))


def expand(pair: LatentPair, alpha: AlphaField) -> np.ndarray:
    """Per-pixel interpolated latents, row-major (H*W, 16) float32."""
    a = alpha.values.reshape(-1, 1)
    return a * pair.z_content[None, :] + (np.float32(1.0) - a) * pair.z_style[None, :]


def expand_values(pair: LatentPair, alpha_values: np.ndarray) -> np.ndarray:
    """expand() for a raw (N,) alpha vector."""
    a = np.asarray(alpha_values, dtype=np.float32).reshape(-1, 1)
    return a * pair.z_content[None, :] + (np.float32(1.0) - a) * pair.z_style[None, :]
