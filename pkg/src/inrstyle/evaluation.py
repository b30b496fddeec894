"""Quantitative metrics: SSIM, PSNR, gram distance, the pixel-wise
controllability probe, and the style-degree disentanglement sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from inrstyle.imaging import Image, luminance, resize
from inrstyle.latents import AlphaMap, UniformAlpha
from inrstyle.objective import LossConfig, style_loss
from inrstyle.perceptual import FeatureExtractor
from inrstyle.renderer import RenderRequest, render
from inrstyle.trainer import Session

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2
PSNR_CAP_DB = 99.0


@dataclass
class MetricReport:
    """Named scalar metrics plus the parameters that produced them."""

    metrics: dict
    params: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    deltas: list = field(default_factory=list)

    def __post_init__(self):
        for group in (self.metrics, *self.records, *self.deltas):
            for key, val in group.items():
                if isinstance(val, float) and not math.isfinite(val):
                    raise ValueError(f"metric {key!r} is not finite: {val}")

    def to_dict(self) -> dict:
        return {
            "metrics": dict(self.metrics),
            "params": dict(self.params),
            "records": [dict(r) for r in self.records],
            "deltas": [dict(d) for d in self.deltas],
        }


def _gauss_kernel(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _filter_valid(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # separable windowed mean, full windows only (no padding bias at borders)
    n = len(kernel)
    horiz = sliding_window_view(plane, n, axis=1) @ kernel
    return sliding_window_view(horiz, n, axis=0) @ kernel


def _check_dims(a: Image, b: Image) -> None:
    if (a.height, a.width) != (b.height, b.width):
        raise ValueError(
            f"image dims differ: {a.height}x{a.width} vs {b.height}x{b.width}")


def ssim(a: Image, b: Image) -> float:
    """Mean SSIM on [0, 1] luminance; 11x11 Gaussian window, sigma 1.5."""
    _check_dims(a, b)
    if min(a.height, a.width) < SSIM_WINDOW:
        raise ValueError(f"images must be at least {SSIM_WINDOW}px per side for SSIM")
    ya = luminance(a).astype(np.float64)
    yb = luminance(b).astype(np.float64)
    k = _gauss_kernel()
    mu_a = _filter_valid(ya, k)
    mu_b = _filter_valid(yb, k)
    var_a = _filter_valid(ya * ya, k) - mu_a * mu_a
    var_b = _filter_valid(yb * yb, k) - mu_b * mu_b
    cov = _filter_valid(ya * yb, k) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


def psnr(a: Image, b: Image) -> float:
    """10*log10(1/MSE) on [0, 1] RGB, capped at 99 dB."""
    _check_dims(a, b)
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(1.0 / mse))


def gram_distance(a: Image, b: Image, extractor: FeatureExtractor) -> float:
    """Summed RMS gram-matrix distance over the extractor's style taps.

    Same normalization as the style loss with unit weight, so training-time
    and evaluation-time style numbers are directly comparable.
    """
    cfg = LossConfig(lambda_style=1.0)
    return float(style_loss(extractor.extract(a), extractor.extract(b), cfg))


def _average_ranks(v: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the average of their rank positions."""
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    sv = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(x, y) -> float:
    """Spearman rank correlation of two equal-length 1-d sequences.

    Tie-free inputs use the closed form 1 - 6*sum(d^2)/(n*(n^2 - 1)) on
    integer ranks. The coefficient is then a rational number and the closed
    form evaluates it with at most two roundings — one adjacent swap among
    five points lands exactly on the float 0.9 — whereas computing it as a
    Pearson correlation of the ranks drags the value through mean/variance
    round-off and can come out a hair below the exact result, flipping
    threshold comparisons. Ties fall back to Pearson on average ranks.
    """
    xv = np.asarray(x, dtype=np.float64).ravel()
    yv = np.asarray(y, dtype=np.float64).ravel()
    if xv.size != yv.size:
        raise ValueError(f"length mismatch: {xv.size} vs {yv.size}")
    if xv.size < 2:
        raise ValueError("need at least two points")
    rx = _average_ranks(xv)
    ry = _average_ranks(yv)
    n = xv.size
    if np.unique(xv).size == n and np.unique(yv).size == n:
        d2 = float(np.sum((rx - ry) ** 2))
        return 1.0 - 6.0 * d2 / (n * (n * n - 1))
    return float(np.corrcoef(rx, ry)[0, 1])


def _chebyshev_ring(i: int, j: int, d: int) -> list[tuple[int, int]]:
    ring = []
    for di in range(-d, d + 1):
        for dj in range(-d, d + 1):
            if max(abs(di), abs(dj)) == d:
                ring.append((i + di, j + dj))
    return ring


def controllability_probe(session: Session, targets, d: int,
                          height: int | None = None, width: int | None = None) -> float:
    """Mean |Δ| on the Chebyshev-d ring when one pixel's alpha flips 1 -> 0.

    For each target, renders with alpha = 1 everywhere except 0 at the target,
    and compares the ring pixels against the pure alpha = 1 render. A perfectly
    local model scores 0: flipping one pixel leaves its neighbors untouched.
    """
    if d < 1:
        raise ValueError("ring distance d must be >= 1")
    if not targets:
        raise ValueError("need at least one target pixel")
    h = height if height is not None else session.train_height
    w = width if width is not None else session.train_width
    for (i, j) in targets:
        if not (d <= i < h - d and d <= j < w - d):
            raise ValueError(f"target ({i}, {j}) too close to border for d={d} in {h}x{w}")

    base = render(session, RenderRequest(height=h, width=w, alpha=UniformAlpha(1.0)))
    total = 0.0
    for (i, j) in targets:
        alpha = np.ones((h, w), dtype=np.float32)
        alpha[i, j] = 0.0
        flipped = render(session, RenderRequest(height=h, width=w, alpha=AlphaMap(alpha)))
        ring = _chebyshev_ring(i, j, d)
        diffs = [np.mean(np.abs(flipped.data[p] - base.data[p])) for p in ring]
        total += float(np.mean(diffs))
    return total / len(targets)


def disentanglement_sweep(session: Session, content: Image, style: Image,
                          alphas, extractor: FeatureExtractor) -> MetricReport:
    """Per-alpha PSNR vs content and gram distance vs style, plus consecutive
    deltas: how much each metric moves per step of the style degree."""
    if not alphas:
        raise ValueError("need at least one alpha")
    h, w = session.train_height, session.train_width
    content_r = resize(content, w, h)
    style_r = resize(style, w, h)

    records = []
    for alpha in alphas:
        img = render(session, RenderRequest(height=h, width=w, alpha=UniformAlpha(alpha)))
        records.append({
            "alpha": float(alpha),
            "psnr_content": psnr(img, content_r),
            "gram_style": gram_distance(img, style_r, extractor),
        })
    deltas = []
    for prev, cur in zip(records, records[1:]):
        deltas.append({
            "alpha_from": prev["alpha"],
            "alpha_to": cur["alpha"],
            "d_psnr_content": cur["psnr_content"] - prev["psnr_content"],
            "d_gram_style": cur["gram_style"] - prev["gram_style"],
        })
    metrics = {
        "psnr_content_best": max(r["psnr_content"] for r in records),
        "gram_style_best": min(r["gram_style"] for r in records),
    }
    params = {
        "alphas": [float(a) for a in alphas],
        "taps": list(extractor.preset.style_taps),
        "content_tap": extractor.preset.content_tap,
        "train_dims": [h, w],
    }
    return MetricReport(metrics=metrics, params=params, records=records, deltas=deltas)
