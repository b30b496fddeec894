"""Frozen VGG-19 feature extractor, layer presets, and gram matrices.

Weights come from a named-tensor file (see `tensorio`); tensor names are
conv{block}_{index}.weight / .bias for the 16 convolutional layers of the
VGG-19 feature stack, kernels shaped (out, in, 3, 3). A converter for
torchvision checkpoints lives in tools/convert_vgg_weights.py, and
`random_weights` produces He-initialized stand-ins for testing.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import torch
import torch.nn.functional as F

from inrstyle import tensorio
from inrstyle.imaging import Image

MAGIC = b"VGGW"
FORMAT_VERSION = 1

# ImageNet statistics on [0, 1] RGB, matching the pretraining regime.
PREPROC_MEAN = (0.485, 0.456, 0.406)
PREPROC_STD = (0.229, 0.224, 0.225)

# (name, in_channels, out_channels) per conv; pools sit after each block.
VGG19_CONVS = (
    ("conv1_1", 3, 64), ("conv1_2", 64, 64),
    ("conv2_1", 64, 128), ("conv2_2", 128, 128),
    ("conv3_1", 128, 256), ("conv3_2", 256, 256), ("conv3_3", 256, 256), ("conv3_4", 256, 256),
    ("conv4_1", 256, 512), ("conv4_2", 512, 512), ("conv4_3", 512, 512), ("conv4_4", 512, 512),
    ("conv5_1", 512, 512), ("conv5_2", 512, 512), ("conv5_3", 512, 512), ("conv5_4", 512, 512),
)

_POOL_AFTER = {"conv1_2", "conv2_2", "conv3_4", "conv4_4", "conv5_4"}

# Activation points in forward order: conv output, then its relu.
TAP_NAMES = tuple(
    name for conv, _, _ in VGG19_CONVS for name in (conv, "relu" + conv[4:])
)

# The published shallow/deep tap lists use a nonstandard conv numbering; these
# are the nearest canonical VGG-19 sets and are recorded per session.
PRESET_TAPS = {
    "shallow_relu": ("relu1_1", "relu1_2", "relu2_1", "relu2_2", "relu3_1"),
    "shallow_conv": ("conv1_1", "conv1_2", "conv2_1", "conv2_2", "conv3_1"),
    "deep_relu": ("relu1_2", "relu2_2", "relu3_3", "relu4_3", "relu5_3"),
    "deep_conv": ("conv1_2", "conv2_2", "conv3_3", "conv4_3", "conv5_3"),
}


class WeightLoadError(ValueError):
    """Raised when a weight file is missing or malformed."""


@dataclass(frozen=True)
class LayerPreset:
    """Style taps plus the designated content tap (default: deepest style tap)."""

    style_taps: tuple[str, ...] = PRESET_TAPS["shallow_relu"]
    content_tap: str = ""

    def __post_init__(self):
        if not self.style_taps:
            raise ValueError("tap list must be non-empty")
        for tap in self.style_taps:
            if tap not in TAP_NAMES:
                raise ValueError(f"unknown tap {tap!r}")
        if not self.content_tap:
            deepest = max(self.style_taps, key=TAP_NAMES.index)
            object.__setattr__(self, "content_tap", deepest)
        elif self.content_tap not in TAP_NAMES:
            raise ValueError(f"unknown content tap {self.content_tap!r}")

    @staticmethod
    def named(name: str, content_tap: str = "") -> "LayerPreset":
        if name not in PRESET_TAPS:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESET_TAPS)}")
        return LayerPreset(style_taps=PRESET_TAPS[name], content_tap=content_tap)

    @property
    def all_taps(self) -> tuple[str, ...]:
        taps = list(self.style_taps)
        if self.content_tap not in taps:
            taps.append(self.content_tap)
        return tuple(taps)


class FeaturePyramid:
    """Ordered tap -> feature map (C, H, W); order matches the preset."""

    def __init__(self, preset: LayerPreset, features: dict[str, torch.Tensor]):
        self.preset = preset
        self.features = features

    def __getitem__(self, tap: str) -> torch.Tensor:
        if tap not in self.features:
            raise KeyError(f"tap {tap!r} not in pyramid ({sorted(self.features)})")
        return self.features[tap]

    def items(self):
        return [(tap, self.features[tap]) for tap in self.preset.all_taps]


class FeatureExtractor:
    """VGG-19 convolutional stack with frozen weights, evaluated up to the
    deepest requested tap only."""

    def __init__(self, tensors: dict[str, np.ndarray], preset: LayerPreset, pooling: str = "max"):
        if pooling not in ("max", "avg"):
            raise ValueError(f"pooling must be 'max' or 'avg', got {pooling!r}")
        self.preset = preset
        self.pooling = pooling
        self.weights: dict[str, torch.Tensor] = {}
        for name, c_in, c_out in VGG19_CONVS:
            for suffix, shape in ((f"{name}.weight", (c_out, c_in, 3, 3)), (f"{name}.bias", (c_out,))):
                if suffix not in tensors:
                    raise WeightLoadError(f"missing tensor {suffix}")
                arr = np.asarray(tensors[suffix], dtype=np.float32)
                if arr.shape != shape:
                    raise WeightLoadError(f"tensor {suffix} has shape {arr.shape}, expected {shape}")
                self.weights[suffix] = torch.from_numpy(arr.copy())
        self._depth = max(TAP_NAMES.index(t) for t in preset.all_taps)
        mean = torch.tensor(PREPROC_MEAN).view(1, 3, 1, 1)
        std = torch.tensor(PREPROC_STD).view(1, 3, 1, 1)
        self._mean, self._std = mean, std

    def preprocess(self, x: torch.Tensor) -> torch.Tensor:
        """Normalize a (1, 3, H, W) tensor in [0, 1] to extractor statistics."""
        return (x - self._mean) / self._std

    def features_t(self, x: torch.Tensor, preprocess: bool = True) -> dict[str, torch.Tensor]:
        """Differentiable taps for a (1, 3, H, W) batch in [0, 1]."""
        if preprocess:
            x = self.preprocess(x)
        wanted = set(self.preset.all_taps)
        out: dict[str, torch.Tensor] = {}
        for idx, (name, _, _) in enumerate(VGG19_CONVS):
            x = F.conv2d(x, self.weights[f"{name}.weight"], self.weights[f"{name}.bias"], padding=1)
            if name in wanted:
                out[name] = x[0]
            if 2 * idx >= self._depth:
                break
            x = torch.relu(x)
            relu_name = "relu" + name[4:]
            if relu_name in wanted:
                out[relu_name] = x[0]
            if 2 * idx + 1 >= self._depth:
                break
            if name in _POOL_AFTER:
                x = F.max_pool2d(x, 2) if self.pooling == "max" else F.avg_pool2d(x, 2)
        return out

    def extract(self, img: Image) -> FeaturePyramid:
        """Feature pyramid of an image at the preset's taps."""
        x = torch.from_numpy(img.data).permute(2, 0, 1).unsqueeze(0)
        with torch.no_grad():
            feats = self.features_t(x)
        return FeaturePyramid(self.preset, feats)


def gram(feat: Union[torch.Tensor, np.ndarray]) -> torch.Tensor:
    """Channel gram matrix F F^T / (C*H*W) of a (C, H, W) feature map."""
    t = feat if isinstance(feat, torch.Tensor) else torch.from_numpy(np.asarray(feat, dtype=np.float32))
    if t.ndim != 3:
        raise ValueError(f"expected (C, H, W), got shape {tuple(t.shape)}")
    c, h, w = t.shape
    flat = t.reshape(c, h * w)
    return flat @ flat.T / float(c * h * w)


def save_weights(path: Union[str, Path], tensors: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as f:
        tensorio.write_container(f, MAGIC, FORMAT_VERSION, {"layout": "vgg19-features"}, tensors)


def load_weights(path: Union[str, Path]) -> dict[str, np.ndarray]:
    try:
        with open(path, "rb") as f:
            _, _, tensors = tensorio.read_container(f, MAGIC, FORMAT_VERSION)
    except tensorio.FormatError as exc:
        raise WeightLoadError(f"{path}: {exc}") from exc
    return tensors


def load_extractor(path: Union[str, Path], preset: LayerPreset | None = None,
                   pooling: str = "max") -> FeatureExtractor:
    """Load a weight file and build an extractor; fails closed on any missing tensor."""
    return FeatureExtractor(load_weights(path), preset or LayerPreset(), pooling=pooling)


def random_weights(seed: int = 0) -> dict[str, np.ndarray]:
    """He-initialized VGG-19-shaped weights (unit-variance activations in
    expectation). Useful where pretrained weights are unavailable; features
    are random but fixed, so they still define valid content/style statistics."""
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    for name, c_in, c_out in VGG19_CONVS:
        std = np.sqrt(2.0 / (c_in * 9))
        tensors[f"{name}.weight"] = rng.normal(0.0, std, (c_out, c_in, 3, 3)).astype(np.float32)
        tensors[f"{name}.bias"] = np.zeros(c_out, dtype=np.float32)
    return tensors


# torchvision vgg19().features state-dict indices of the 16 conv layers.
TORCHVISION_INDEX = (0, 2, 5, 7, 10, 12, 14, 16, 19, 21, 23, 25, 28, 30, 32, 34)


def from_torchvision_state_dict(state: dict) -> dict[str, np.ndarray]:
    """Map a torchvision vgg19 state dict (full model or .features) to named tensors."""
    tensors = {}
    for (name, _, _), idx in zip(VGG19_CONVS, TORCHVISION_INDEX):
        for suffix in ("weight", "bias"):
            for key in (f"features.{idx}.{suffix}", f"{idx}.{suffix}"):
                if key in state:
                    tensors[f"{name}.{suffix}"] = np.asarray(state[key], dtype=np.float32)
                    break
            else:
                raise WeightLoadError(f"state dict missing features.{idx}.{suffix} (for {name})")
    return tensors
