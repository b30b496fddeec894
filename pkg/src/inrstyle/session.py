"""Session archives (.inrs): binary container with a JSON header and the
trained generator weights as named f32 tensor blocks.

The header is everything except the weights: architecture, training config,
feature taps, the frozen latent pair, training dimensions, and a loss summary.
Weights use the layer{k}.weight / layer{k}.bias naming shared with the
generator checkpoint format.
"""

from __future__ import annotations

import io
from typing import BinaryIO

import numpy as np

from inrstyle import tensorio
from inrstyle.generator import GeneratorArch, params_from_tensors
from inrstyle.latents import LatentPair
from inrstyle.perceptual import LayerPreset
from inrstyle.tensorio import FormatError
from inrstyle.trainer import ARCHIVE_VERSION, Session, TrainConfig

MAGIC = b"INRS"


def _header(session: Session) -> dict:
    return {
        "arch": session.params.arch.to_dict(),
        "config": session.train_config.to_dict(),
        "taps": {
            "style_taps": list(session.preset.style_taps),
            "content_tap": session.preset.content_tap,
            "pooling": session.pooling,
            "n_freqs": session.n_freqs,
        },
        "latents": {
            "seed": session.latents.seed,
            "z_content": [float(v) for v in session.latents.z_content],
            "z_style": [float(v) for v in session.latents.z_style],
        },
        "train_height": session.train_height,
        "train_width": session.train_width,
        "loss_summary": session.summary(),
    }


def save_session(session: Session, stream: BinaryIO) -> None:
    tensors = {}
    for k, (w, b) in enumerate(session.params.layers, start=1):
        tensors[f"layer{k}.weight"] = w.detach().numpy()
        tensors[f"layer{k}.bias"] = b.detach().numpy()
    tensorio.write_container(stream, MAGIC, session.version, _header(session), tensors)


def session_to_bytes(session: Session) -> bytes:
    buf = io.BytesIO()
    save_session(session, buf)
    return buf.getvalue()


def load_session(stream: BinaryIO) -> Session:
    version, header, tensors = tensorio.read_container(
        stream, expect_magic=MAGIC, max_version=ARCHIVE_VERSION)
    try:
        arch = GeneratorArch.from_dict(header["arch"])
        cfg = TrainConfig.from_dict(header["config"])
        taps = header["taps"]
        preset = LayerPreset(style_taps=tuple(taps["style_taps"]),
                             content_tap=taps["content_tap"])
        lat = header["latents"]
        pair = LatentPair(
            z_content=np.asarray(lat["z_content"], dtype=np.float32),
            z_style=np.asarray(lat["z_style"], dtype=np.float32),
            seed=int(lat["seed"]),
        )
        train_h = int(header["train_height"])
        train_w = int(header["train_width"])
        loss_summary = dict(header.get("loss_summary", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"session header invalid: {exc}") from exc

    params = params_from_tensors(arch, cfg.param_seed, tensors)
    return Session(
        params=params,
        latents=pair,
        preset=preset,
        pooling=str(taps.get("pooling", "max")),
        n_freqs=int(taps.get("n_freqs", cfg.n_freqs)),
        train_config=cfg,
        train_height=train_h,
        train_width=train_w,
        loss_history=[],
        loss_summary=loss_summary,
        version=version,
    )


def session_from_bytes(data: bytes) -> Session:
    return load_session(io.BytesIO(data))


def save_session_file(session: Session, path) -> None:
    with open(path, "wb") as fh:
        save_session(session, fh)


def load_session_file(path) -> Session:
    with open(path, "rb") as fh:
        return load_session(fh)
