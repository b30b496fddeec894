"""Controllable style transfer with a test-time-trained coordinate MLP.

Train once on a content/style image pair, then render stylizations under
arbitrary per-pixel style-degree fields and arbitrary output resolutions
without retraining.
"""

from inrstyle.imaging import Image, decode, encode, resize
from inrstyle.coords import CoordGrid, make_grid, encode_points
from inrstyle.latents import (
    AlphaField,
    GradientAlpha,
    LatentPair,
    AlphaMap,
    RegionAlphas,
    UniformAlpha,
    compile_alpha,
    init_latents,
    interpolate,
)
from inrstyle.generator import GeneratorArch, GeneratorParams, init_params
from inrstyle.perceptual import FeatureExtractor, LayerPreset, load_extractor
from inrstyle.objective import LossConfig, LossReport
from inrstyle.trainer import AlphaSampling, Session, TrainConfig, train
from inrstyle.session import (
    load_session_file,
    save_session_file,
    session_from_bytes,
    session_to_bytes,
)
from inrstyle.renderer import (
    MemStats,
    RenderRequest,
    render,
    render_gradation,
    render_rows,
    render_with_stats,
)
from inrstyle.evaluation import (
    MetricReport,
    controllability_probe,
    disentanglement_sweep,
    gram_distance,
    psnr,
    spearman_rho,
    ssim,
)
from inrstyle.estimator import ControllableStyleTransfer

__version__ = "0.1.0"

__all__ = [
    "Image", "decode", "encode", "resize",
    "CoordGrid", "make_grid", "encode_points",
    "LatentPair", "AlphaField", "UniformAlpha", "AlphaMap", "RegionAlphas",
    "GradientAlpha", "init_latents", "interpolate", "compile_alpha",
    "GeneratorArch", "GeneratorParams", "init_params",
    "FeatureExtractor", "LayerPreset", "load_extractor",
    "LossConfig", "LossReport",
    "AlphaSampling", "TrainConfig", "train", "Session",
    "save_session_file", "load_session_file", "session_to_bytes", "session_from_bytes",
    "RenderRequest", "MemStats", "render", "render_with_stats", "render_rows",
    "render_gradation",
    "MetricReport", "ssim", "psnr", "gram_distance", "spearman_rho",
    "controllability_probe", "disentanglement_sweep",
    "ControllableStyleTransfer",
    "__version__",
]
