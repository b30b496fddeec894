"""Controllable inference: evaluate the trained generator at any resolution
under any per-pixel style-degree field, in memory-bounded chunks.

Output rows are produced chunk_rows at a time; inside a row chunk, columns are
tiled so no batch exceeds chunk_rows^2 pixels. Transient working memory is
therefore governed by chunk_rows (and the row width), never by the output
area — the property that makes wall-sized renders from a small trained model
practical.

The MLP forward runs in float64 internally (float32 in and out): a matmul's
reduction order depends on the batch shape, so a float32 forward lets the
same pixel drift by ~1e-6 as chunk geometry changes; accumulating in float64
pushes that drift far below float32 resolution, making renders effectively
independent of chunk_rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
import torch

from inrstyle import coords, generator, latents
from inrstyle.imaging import Image
from inrstyle.latents import AlphaSpec, GradientAlpha, UniformAlpha, compile_alpha_band
from inrstyle.trainer import Session

# guard against index overflow / absurd requests, not RAM (streaming handles RAM)
MAX_RENDER_PIXELS = 1 << 30


@dataclass(frozen=True)
class RenderRequest:
    height: int
    width: int
    alpha: AlphaSpec = field(default_factory=lambda: UniformAlpha(0.5))
    chunk_rows: int = 256

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("output dimensions must be >= 1")
        if self.height * self.width > MAX_RENDER_PIXELS:
            raise ValueError(
                f"output of {self.height}x{self.width} exceeds {MAX_RENDER_PIXELS} pixels")
        if self.chunk_rows < 1:
            raise ValueError("chunk_rows must be >= 1")


@dataclass
class MemStats:
    """Analytic allocation accounting for one render (bytes)."""

    output_bytes: int = 0
    peak_transient_bytes: int = 0
    batches: int = 0
    row_chunks: int = 0

    def observe(self, transient: int) -> None:
        self.batches += 1
        self.peak_transient_bytes = max(self.peak_transient_bytes, transient)


def _batch_transient_bytes(session: Session, n: int, alpha_band_bytes: int,
                           fixed_bytes: int) -> int:
    arch = session.params.arch
    d_e = 4 * session.n_freqs
    pts = n * 2 * 8
    enc = n * d_e * 8                            # f64, fed straight to the MLP
    lat = n * 4 + n * arch.latent_dim * (4 + 8)  # alpha row, f32 z', f64 copy
    out = n * 3 * (8 + 4)                        # f64 activations + f32 band slice
    return fixed_bytes + alpha_band_bytes + pts + enc + lat + out + \
        generator.transient_bytes(arch, n, bytes_per_elem=8)


def render_rows(session: Session, req: RenderRequest,
                stats: MemStats | None = None) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (row_start, band) pairs, bands of shape (rows, W, 3) float32.

    Bands arrive top to bottom, chunk_rows rows at a time; the union is the
    full render. Peak memory is bounded by the chunk geometry, not H*W.
    """
    h, w = req.height, req.width
    x_axis = coords.axis_coords(w)
    y_axis = coords.axis_coords(h)
    pair = session.latents
    params = session.params.astype(torch.float64)
    fixed_bytes = (h + w) * 8 + \
        8 * sum(wt.numel() + b.numel() for wt, b in params.layers)
    max_batch = req.chunk_rows * req.chunk_rows

    for r0 in range(0, h, req.chunk_rows):
        r1 = min(r0 + req.chunk_rows, h)
        n_rows = r1 - r0
        alpha_band = compile_alpha_band(req.alpha, h, w, r0, r1)
        band = np.empty((n_rows, w, 3), dtype=np.float32)
        tile = max(1, max_batch // n_rows)
        for c0 in range(0, w, tile):
            c1 = min(c0 + tile, w)
            xx, yy = np.meshgrid(x_axis[c0:c1], y_axis[r0:r1])
            pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
            enc = torch.from_numpy(coords.encode_points(pts, session.n_freqs))
            a = np.ascontiguousarray(alpha_band[:, c0:c1]).reshape(-1)
            # f32 interpolation is per-pixel, so staying in f32 here cannot
            # reintroduce chunk-shape dependence
            lat = torch.from_numpy(latents.expand_values(pair, a)).double()
            with torch.no_grad():
                out = generator.forward_t(params, lat, enc)
            band[:, c0:c1] = out.numpy().astype(np.float32).reshape(n_rows, c1 - c0, 3)
            if stats is not None:
                stats.observe(_batch_transient_bytes(
                    session, len(pts), alpha_band.nbytes, fixed_bytes))
        if stats is not None:
            stats.row_chunks += 1
        yield r0, band


def render_with_stats(session: Session, req: RenderRequest) -> tuple[Image, MemStats]:
    stats = MemStats(output_bytes=req.height * req.width * 3 * 4)
    out = np.empty((req.height, req.width, 3), dtype=np.float32)
    for r0, band in render_rows(session, req, stats):
        out[r0:r0 + band.shape[0]] = band
    return Image(out), stats


def render(session: Session, req: RenderRequest) -> Image:
    img, _ = render_with_stats(session, req)
    return img


def render_gradation(session: Session, axis: str, h: int, w: int) -> Image:
    """Column-wise (axis 'x') or row-wise ('y') style gradation from 0 to 1."""
    spec = GradientAlpha(axis=axis, start=0.0, stop=1.0)
    return render(session, RenderRequest(height=h, width=w, alpha=spec))
