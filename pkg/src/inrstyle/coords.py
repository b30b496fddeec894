"""Normalized coordinate grids and sinusoidal positional encoding.

Grids are align-corners: corner pixels map exactly to +/-1, so the grid of a
(2h-1, 2w-1) output nests the (h, w) grid at stride 2 exactly. Encoding of a
coordinate p is the interleaved (sin, cos) ladder at frequencies 2^k * pi,
k = 0..n_f-1, per axis (x block first, then y), giving 4*n_f values per pixel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_N_FREQS = 6


def axis_coords(n: int) -> np.ndarray:
    """Align-corners positions of one axis: n points spanning [-1, 1] (0 if n == 1)."""
    if n < 1:
        raise ValueError("axis length must be >= 1")
    if n == 1:
        return np.zeros(1, dtype=np.float64)
    return np.linspace(-1.0, 1.0, n, dtype=np.float64)


@dataclass(frozen=True)
class CoordGrid:
    height: int
    width: int
    x: np.ndarray  # (width,)  in [-1, 1]
    y: np.ndarray  # (height,) in [-1, 1]

    @property
    def coords(self) -> np.ndarray:
        """Per-pixel (x, y), shape (height, width, 2)."""
        out = np.empty((self.height, self.width, 2), dtype=np.float64)
        out[:, :, 0] = self.x[None, :]
        out[:, :, 1] = self.y[:, None]
        return out


def make_grid(h: int, w: int) -> CoordGrid:
    return CoordGrid(height=h, width=w, x=axis_coords(w), y=axis_coords(h))


def encode_points(points: np.ndarray, n_f: int = DEFAULT_N_FREQS) -> np.ndarray:
    """Positionally encode (N, 2) coordinates to (N, 4 * n_f).

    Per axis and ascending frequency k: sin(2^k pi p), cos(2^k pi p),
    interleaved; all x-axis terms precede all y-axis terms.
    """
    if n_f < 1:
        raise ValueError("n_f must be >= 1")
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"points must be (N, 2), got {pts.shape}")
    n = pts.shape[0]
    out = np.empty((n, 4 * n_f), dtype=np.float64)
    freqs = (2.0 ** np.arange(n_f)) * np.pi
    for axis in range(2):
        base = axis * 2 * n_f
        phase = pts[:, axis : axis + 1] * freqs[None, :]  # (N, n_f)
        out[:, base + 0 : base + 2 * n_f : 2] = np.sin(phase)
        out[:, base + 1 : base + 2 * n_f : 2] = np.cos(phase)
    return out


def encode(grid: CoordGrid, n_f: int = DEFAULT_N_FREQS) -> np.ndarray:
    """Encode a full grid row-major: (H*W, 4*n_f)."""
    return encode_points(grid.coords.reshape(-1, 2), n_f)
