"""The coordinate MLP: per-pixel (latent, encoded-position) -> RGB.

Nine fully connected layers, ReLU between them, sigmoid on the output, and a
DeepSDF-style skip that re-concatenates the network input before one of the
middle layers. Every pixel is evaluated independently, which is what makes
per-pixel style control and arbitrary-resolution rendering exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from inrstyle import tensorio

MAGIC = b"INRG"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class GeneratorArch:
    latent_dim: int = 16
    encoding_dim: int = 24
    hidden_width: int = 256
    n_layers: int = 9
    skip_at: int = 5  # 1-based layer whose input re-concatenates the network input

    @property
    def input_dim(self) -> int:
        return self.latent_dim + self.encoding_dim

    def __post_init__(self):
        if self.n_layers < 2:
            raise ValueError("need at least an input and an output layer")
        if not (2 <= self.skip_at <= self.n_layers):
            raise ValueError(f"skip_at must be in [2, {self.n_layers}], got {self.skip_at}")
        if min(self.latent_dim, self.encoding_dim, self.hidden_width) < 1:
            raise ValueError("dimensions must be positive")

    def layer_dims(self) -> list[tuple[int, int]]:
        """(in_dim, out_dim) per layer, 1-based order."""
        dims = []
        for k in range(1, self.n_layers + 1):
            d_in = self.input_dim if k == 1 else self.hidden_width
            if k == self.skip_at:
                d_in += self.input_dim
            d_out = 3 if k == self.n_layers else self.hidden_width
            dims.append((d_in, d_out))
        return dims

    def to_dict(self) -> dict:
        return {
            "latent_dim": self.latent_dim,
            "encoding_dim": self.encoding_dim,
            "hidden_width": self.hidden_width,
            "n_layers": self.n_layers,
            "skip_at": self.skip_at,
        }

    @staticmethod
    def from_dict(d: dict) -> "GeneratorArch":
        return GeneratorArch(**{k: int(d[k]) for k in
                                ("latent_dim", "encoding_dim", "hidden_width", "n_layers", "skip_at")})


@dataclass
class GeneratorParams:
    arch: GeneratorArch
    seed: int
    layers: list  # of (weight (out, in), bias (out,)) float32 torch tensors

    def validate(self):
        dims = self.arch.layer_dims()
        if len(self.layers) != len(dims):
            raise ValueError(f"expected {len(dims)} layers, got {len(self.layers)}")
        for k, ((w, b), (d_in, d_out)) in enumerate(zip(self.layers, dims), start=1):
            if tuple(w.shape) != (d_out, d_in):
                raise ValueError(f"layer {k} weight shape {tuple(w.shape)} != ({d_out}, {d_in})")
            if tuple(b.shape) != (d_out,):
                raise ValueError(f"layer {k} bias shape {tuple(b.shape)} != ({d_out},)")
            if not (torch.isfinite(w).all() and torch.isfinite(b).all()):
                raise ValueError(f"layer {k} has non-finite values")

    def tensors(self) -> list[torch.Tensor]:
        out = []
        for w, b in self.layers:
            out.extend((w, b))
        return out

    def clone_detached(self) -> "GeneratorParams":
        return GeneratorParams(
            arch=self.arch,
            seed=self.seed,
            layers=[(w.detach().clone(), b.detach().clone()) for w, b in self.layers],
        )

    def astype(self, dtype: torch.dtype) -> "GeneratorParams":
        return GeneratorParams(
            arch=self.arch,
            seed=self.seed,
            layers=[(w.detach().to(dtype), b.detach().to(dtype)) for w, b in self.layers],
        )


def init_params(arch: GeneratorArch, seed: int) -> GeneratorParams:
    """Kaiming-uniform fan-in weights, zero biases, deterministic per seed."""
    gen = torch.Generator().manual_seed(int(seed))
    layers = []
    for d_in, d_out in arch.layer_dims():
        bound = math.sqrt(6.0 / d_in)
        w = (torch.rand(d_out, d_in, generator=gen, dtype=torch.float32) * 2.0 - 1.0) * bound
        b = torch.zeros(d_out, dtype=torch.float32)
        layers.append((w, b))
    return GeneratorParams(arch=arch, seed=int(seed), layers=layers)


def forward_t(params: GeneratorParams, latent_rows: torch.Tensor, encoded_rows: torch.Tensor) -> torch.Tensor:
    """Differentiable row-wise evaluation: (N, d_z), (N, d_e) -> (N, 3) in (0, 1)."""
    arch = params.arch
    if latent_rows.shape[0] != encoded_rows.shape[0]:
        raise ValueError(
            f"row count mismatch: {latent_rows.shape[0]} latents vs {encoded_rows.shape[0]} encodings")
    if latent_rows.shape[1] != arch.latent_dim:
        raise ValueError(f"latent dim {latent_rows.shape[1]} != {arch.latent_dim}")
    if encoded_rows.shape[1] != arch.encoding_dim:
        raise ValueError(f"encoding dim {encoded_rows.shape[1]} != {arch.encoding_dim}")

    x0 = torch.cat([latent_rows, encoded_rows], dim=1)
    x = x0
    last = len(params.layers)
    for k, (w, b) in enumerate(params.layers, start=1):
        if k == arch.skip_at:
            x = torch.cat([x, x0], dim=1)
        x = torch.nn.functional.linear(x, w, b)
        x = torch.sigmoid(x) if k == last else torch.relu(x)
    return x


def forward(params: GeneratorParams, latent_rows: np.ndarray, encoded_rows: np.ndarray) -> np.ndarray:
    """Non-differentiable convenience wrapper over numpy rows."""
    with torch.no_grad():
        out = forward_t(
            params,
            torch.from_numpy(np.ascontiguousarray(latent_rows, dtype=np.float32)),
            torch.from_numpy(np.ascontiguousarray(encoded_rows, dtype=np.float32)),
        )
    return out.numpy()


def transient_bytes(arch: GeneratorArch, n_rows: int, bytes_per_elem: int = 4) -> int:
    """Bytes of live intermediates for one forward over n_rows pixels.

    Counts the concatenated input plus, per layer, its output activation and
    (at the skip layer) the widened input copy. At any instant at most the
    current layer input and output are live.
    """
    peak = 0
    live_in = arch.input_dim
    for k, (d_in, d_out) in enumerate(arch.layer_dims(), start=1):
        widened = d_in if k == arch.skip_at else 0
        # input activation (+skip copy) + output activation
        peak = max(peak, live_in + widened + d_out)
        live_in = d_out
    # the original input stays alive until the skip layer consumed it
    return (peak + arch.input_dim) * n_rows * bytes_per_elem


def serialize(params: GeneratorParams) -> bytes:
    params.validate()
    header = {"arch": params.arch.to_dict(), "seed": params.seed}
    tensors = {}
    for k, (w, b) in enumerate(params.layers, start=1):
        tensors[f"layer{k}.weight"] = w.detach().numpy()
        tensors[f"layer{k}.bias"] = b.detach().numpy()
    return tensorio.to_bytes(MAGIC, FORMAT_VERSION, header, tensors)


def params_from_tensors(arch: GeneratorArch, seed: int, tensors: dict[str, np.ndarray]) -> GeneratorParams:
    layers = []
    for k in range(1, arch.n_layers + 1):
        for suffix in ("weight", "bias"):
            if f"layer{k}.{suffix}" not in tensors:
                raise tensorio.FormatError(f"missing tensor layer{k}.{suffix}")
        layers.append((
            torch.from_numpy(tensors[f"layer{k}.weight"].copy()),
            torch.from_numpy(tensors[f"layer{k}.bias"].copy()),
        ))
    extra = set(tensors) - {f"layer{k}.{s}" for k in range(1, arch.n_layers + 1) for s in ("weight", "bias")}
    if extra:
        raise tensorio.FormatError(f"unexpected tensor blocks: {sorted(extra)}")
    params = GeneratorParams(arch=arch, seed=seed, layers=layers)
    try:
        params.validate()
    except ValueError as exc:
        raise tensorio.FormatError(str(exc)) from exc
    return params


def deserialize(data: bytes) -> GeneratorParams:
    _, header, tensors = tensorio.from_bytes(data, MAGIC, FORMAT_VERSION)
    arch = GeneratorArch.from_dict(header["arch"])
    return params_from_tensors(arch, int(header.get("seed", 0)), tensors)
