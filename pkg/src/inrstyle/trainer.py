"""Test-time training: fit the coordinate MLP to one content/style pair.

Each step samples a style degree alpha, interpolates the frozen latent pair,
evaluates the generator over the full training grid, scores the reweighted
content/style objective against precomputed target features, and takes one
Adam step. The result is a Session: frozen weights plus everything needed to
reproduce any render.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np
import torch

from inrstyle import coords, generator, latents
from inrstyle.imaging import Image, center_crop_square, resize
from inrstyle.generator import GeneratorArch, GeneratorParams
from inrstyle.latents import LatentPair
from inrstyle.objective import LossConfig, LossReport, total_loss
from inrstyle.perceptual import FeatureExtractor, FeaturePyramid, LayerPreset, gram

ARCHIVE_VERSION = 1


class ConfigError(ValueError):
    """Training configuration inconsistent with the extractor or architecture."""


class TrainingDiverged(RuntimeError):
    def __init__(self, iteration: int, last_report: LossReport | None):
        self.iteration = iteration
        self.last_report = last_report
        super().__init__(f"non-finite loss at iteration {iteration}; last report: {last_report}")


@dataclass(frozen=True)
class AlphaSampling:
    """How the per-step style degree is drawn: 'uniform' on [0, 1], a 'fixed'
    value, 'exponential' (rate) truncated and renormalized to [0, 1], or
    'edges' — uniform mixed with point masses at exactly 0 and 1 so the
    endpoint objectives (whose reweighting is strongest) are trained
    directly instead of only approached."""

    mode: str = "uniform"
    value: float = 0.5
    rate: float = 1.0
    edge_mass: float = 0.5

    def __post_init__(self):
        if self.mode not in ("uniform", "fixed", "exponential", "edges"):
            raise ValueError(f"unknown alpha sampling mode {self.mode!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"fixed alpha must be in [0, 1], got {self.value}")
        if self.rate <= 0:
            raise ValueError(f"exponential rate must be positive, got {self.rate}")
        if not 0.0 <= self.edge_mass < 1.0:
            raise ValueError(f"edge mass must be in [0, 1), got {self.edge_mass}")


def sample_alpha(sampling: AlphaSampling, rng: np.random.Generator) -> float:
    if sampling.mode == "fixed":
        return sampling.value
    if sampling.mode == "uniform":
        return float(rng.random())
    if sampling.mode == "edges":
        u = rng.random()
        if u < sampling.edge_mass / 2.0:
            return 0.0
        if u < sampling.edge_mass:
            return 1.0
        return float(rng.random())
    # inverse CDF of Exp(rate) restricted to [0, 1]
    u = rng.random()
    scale = 1.0 - math.exp(-sampling.rate)
    return float(-math.log(1.0 - u * scale) / sampling.rate)


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 5000
    learning_rate: float = 1.0e-3
    lr_schedule: str = "constant"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1.0e-8
    train_size: int = 256
    center_crop: bool = False
    alpha_sampling: AlphaSampling = field(default_factory=AlphaSampling)
    loss: LossConfig = field(default_factory=LossConfig)
    arch: GeneratorArch = field(default_factory=GeneratorArch)
    n_freqs: int = coords.DEFAULT_N_FREQS
    latent_seed: int = 0
    param_seed: int = 0
    alpha_seed: int = 0
    snapshot_interval: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ValueError(f"unknown lr schedule {self.lr_schedule!r}")
        if self.train_size < 16:
            raise ValueError("train size must be >= 16")
        if self.n_freqs < 1:
            raise ValueError("n_freqs must be >= 1")
        if self.snapshot_interval < 0:
            raise ValueError("snapshot interval must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alpha_sampling"] = asdict(self.alpha_sampling)
        d["loss"] = self.loss.to_dict()
        d["arch"] = self.arch.to_dict()
        return d

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        d = dict(d)
        d["alpha_sampling"] = AlphaSampling(**d.get("alpha_sampling", {}))
        d["loss"] = LossConfig.from_dict(d.get("loss", {}))
        d["arch"] = GeneratorArch.from_dict(d["arch"]) if "arch" in d else GeneratorArch()
        return TrainConfig(**d)


@dataclass
class Session:
    """Frozen training result: the unit of persistence and of all inference."""

    params: GeneratorParams
    latents: LatentPair
    preset: LayerPreset
    pooling: str
    n_freqs: int
    train_config: TrainConfig
    train_height: int
    train_width: int
    loss_history: list[LossReport] = field(default_factory=list)
    loss_summary: dict = field(default_factory=dict)
    version: int = ARCHIVE_VERSION

    def summary(self) -> dict:
        if self.loss_history:
            totals = [r.total for r in self.loss_history]
            return {
                "iterations": len(totals),
                "first_total": totals[0],
                "last_total": totals[-1],
                "min_total": min(totals),
            }
        return dict(self.loss_summary)


def history_jsonl(history: list[LossReport]) -> str:
    """Loss history as JSON lines: iteration, content, style, total, alpha."""
    lines = []
    for i, r in enumerate(history):
        lines.append(json.dumps({
            "iteration": i,
            "content": r.content,
            "style": r.style,
            "total": r.total,
            "alpha": r.alpha,
        }))
    return "\n".join(lines) + ("\n" if lines else "")


def _prepare_image(img: Image, size: int, crop: bool) -> Image:
    if crop:
        img = center_crop_square(img)
    return resize(img, size, size)


def _render_snapshot(params: GeneratorParams, pair: LatentPair, enc: torch.Tensor,
                     h: int, w: int, alpha: float) -> Image:
    z = latents.interpolate(pair, alpha)
    rows = torch.from_numpy(z).unsqueeze(0).expand(h * w, -1)
    with torch.no_grad():
        out = generator.forward_t(params, rows, enc)
    return Image(out.reshape(h, w, 3).numpy().copy())


def train(content: Image, style: Image, cfg: TrainConfig, extractor: FeatureExtractor,
          progress=None, snapshot=None) -> Session:
    """Run the full training loop; deterministic given the three seeds.

    `progress(iteration, report)` fires every iteration; `snapshot(iteration,
    {alpha: Image})` fires every `snapshot_interval` iterations with preview
    renders at alpha 0, 0.5, and 1.
    """
    arch = cfg.arch
    if arch.encoding_dim != 4 * cfg.n_freqs:
        raise ConfigError(
            f"arch encoding_dim {arch.encoding_dim} != 4 * n_freqs = {4 * cfg.n_freqs}")

    h = w = cfg.train_size
    content_r = _prepare_image(content, cfg.train_size, cfg.center_crop)
    style_r = _prepare_image(style, cfg.train_size, cfg.center_crop)

    pair = latents.init_latents(cfg.latent_seed, dim=arch.latent_dim)
    params = generator.init_params(arch, cfg.param_seed)
    for t in params.tensors():
        t.requires_grad_(True)

    enc = torch.from_numpy(
        coords.encode(coords.make_grid(h, w), cfg.n_freqs).astype(np.float32))

    content_pyr = extractor.extract(content_r)
    style_pyr = extractor.extract(style_r)
    style_grams = {tap: gram(style_pyr[tap]) for tap in extractor.preset.style_taps}

    opt = torch.optim.Adam(params.tensors(), lr=cfg.learning_rate,
                           betas=(cfg.beta1, cfg.beta2), eps=cfg.adam_eps)
    rng = np.random.default_rng(cfg.alpha_seed)
    history: list[LossReport] = []

    n = h * w
    for i in range(cfg.iterations):
        if cfg.lr_schedule == "cosine":
            span = max(1, cfg.iterations - 1)
            lr_i = cfg.learning_rate * 0.5 * (1.0 + math.cos(math.pi * i / span))
            for group in opt.param_groups:
                group["lr"] = lr_i
        alpha = sample_alpha(cfg.alpha_sampling, rng)
        z = latents.interpolate(pair, alpha)
        latent_rows = torch.from_numpy(z).unsqueeze(0).expand(n, -1)
        out_rows = generator.forward_t(params, latent_rows, enc)
        out_image = out_rows.reshape(h, w, 3).permute(2, 0, 1).unsqueeze(0)
        gen_feats = extractor.features_t(out_image)
        gen_pyr = FeaturePyramid(extractor.preset, gen_feats)

        try:
            loss, report = total_loss(alpha, gen_pyr, content_pyr, style_grams, cfg.loss)
        except ValueError as exc:
            raise TrainingDiverged(i, history[-1] if history else None) from exc

        opt.zero_grad(set_to_none=True)
        loss.backward()
        opt.step()

        history.append(report)
        if progress is not None:
            progress(i, report)
        if snapshot is not None and cfg.snapshot_interval and (i + 1) % cfg.snapshot_interval == 0:
            previews = {a: _render_snapshot(params, pair, enc, h, w, a) for a in (0.0, 0.5, 1.0)}
            snapshot(i, previews)

    session = Session(
        params=params.clone_detached(),
        latents=pair,
        preset=extractor.preset,
        pooling=extractor.pooling,
        n_freqs=cfg.n_freqs,
        train_config=cfg,
        train_height=h,
        train_width=w,
        loss_history=history,
    )
    session.loss_summary = session.summary()
    return session
