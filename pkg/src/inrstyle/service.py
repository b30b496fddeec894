"""HTTP session service: train asynchronously, poll progress, render on
demand, and import/export session archives. Backs the studio UI.

State model per session: queued -> training -> ready | failed. The store is
in-memory; ready sessions are also written as .inrs archives under the data
dir (and reloaded from there on startup) when one is configured.

Env vars: INRST_ADDR (default 127.0.0.1:8080), INRST_DATA_DIR,
INRST_VGG_WEIGHTS.
"""

from __future__ import annotations

import base64
import binascii
import json
import os
import secrets
import sys
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, File, Form, UploadFile
from fastapi.responses import JSONResponse, Response

from inrstyle import imaging
from inrstyle.latents import (AlphaMap, AlphaSpec, GradientAlpha, RegionAlphas,
                              UniformAlpha)
from inrstyle.objective import LossConfig
from inrstyle.perceptual import FeatureExtractor, WeightLoadError, load_extractor
from inrstyle.renderer import RenderRequest, render
from inrstyle.session import (load_session_file, save_session_file,
                              session_from_bytes, session_to_bytes)
from inrstyle.tensorio import FormatError
from inrstyle.trainer import Session, TrainConfig, train

DEFAULT_ADDR = "127.0.0.1:8080"
DEFAULT_MAX_UPLOAD = 16 * 1024 * 1024  # per image
LOSS_WINDOW = 50
PREVIEW_ALPHAS = (0.0, 0.5, 1.0)

_CONFIG_FIELDS = {
    "size": 256,
    "iters": 5000,
    "kappa": 2.0,
    "style_weight": 1e5,
    "seed": 0,
    "center_crop": False,
    "snapshot_interval": None,  # default: iters // 10
}


class ConfigFieldError(ValueError):
    pass


class AlphaSpecError(ValueError):
    """Structurally invalid alpha spec JSON (400)."""


class AlphaRangeError(ValueError):
    """Well-formed spec with out-of-range alpha (422)."""


def parse_train_config(raw: str) -> tuple[TrainConfig, dict]:
    """Flat friendly schema -> TrainConfig; returns (config, echo-with-defaults)."""
    try:
        data = json.loads(raw) if raw.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigFieldError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigFieldError("config must be a JSON object")
    unknown = set(data) - set(_CONFIG_FIELDS)
    if unknown:
        raise ConfigFieldError(f"unknown config field: {sorted(unknown)[0]}")
    merged = {**_CONFIG_FIELDS, **data}
    if merged["snapshot_interval"] is None:
        merged["snapshot_interval"] = max(1, int(merged["iters"]) // 10)
    try:
        cfg = TrainConfig(
            iterations=int(merged["iters"]),
            train_size=int(merged["size"]),
            center_crop=bool(merged["center_crop"]),
            loss=LossConfig(lambda_style=float(merged["style_weight"]),
                            kappa=float(merged["kappa"])),
            latent_seed=int(merged["seed"]),
            param_seed=int(merged["seed"]),
            alpha_seed=int(merged["seed"]),
            snapshot_interval=int(merged["snapshot_interval"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigFieldError(str(exc)) from exc
    return cfg, merged


def parse_alpha_json(obj) -> AlphaSpec:
    if not isinstance(obj, dict) or "type" not in obj:
        raise AlphaSpecError("alpha spec must be an object with a 'type' field")
    kind = obj["type"]

    def _num(key, default=None):
        if key not in obj:
            if default is None:
                raise AlphaSpecError(f"alpha spec missing field {key!r}")
            return default
        val = obj[key]
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise AlphaSpecError(f"alpha spec field {key!r} must be a number")
        return float(val)

    def _unit(key, default=None):
        val = _num(key, default)
        if not 0.0 <= val <= 1.0:
            raise AlphaRangeError(f"alpha spec field {key!r} must be in [0, 1], got {val}")
        return val

    def _plane(b64: str) -> np.ndarray:
        if not isinstance(b64, str):
            raise AlphaSpecError("png_base64 must be a string")
        try:
            raw = base64.b64decode(b64, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise AlphaSpecError(f"invalid base64 image: {exc}") from exc
        try:
            return imaging.decode_gray(raw)
        except Exception as exc:
            raise AlphaSpecError(f"undecodable mask image: {exc}") from exc

    if kind == "uniform":
        return UniformAlpha(_unit("alpha"))
    if kind == "map":
        if "png_base64" not in obj:
            raise AlphaSpecError("map spec needs png_base64")
        return AlphaMap(_plane(obj["png_base64"]))
    if kind == "regions":
        regions_in = obj.get("regions")
        if not isinstance(regions_in, list):
            raise AlphaSpecError("regions spec needs a 'regions' list")
        regions = []
        for entry in regions_in:
            if not isinstance(entry, dict) or "png_base64" not in entry:
                raise AlphaSpecError("each region needs png_base64 and alpha")
            mask = _plane(entry["png_base64"])
            val = entry.get("alpha")
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                raise AlphaSpecError("each region needs a numeric alpha")
            if not 0.0 <= float(val) <= 1.0:
                raise AlphaRangeError(f"region alpha must be in [0, 1], got {val}")
            regions.append((mask, float(val)))
        default = _unit("default_alpha", default=1.0)
        return RegionAlphas(regions=tuple(regions), default_alpha=default)
    if kind == "gradient":
        axis = obj.get("axis", "x")
        if axis not in ("x", "y"):
            raise AlphaSpecError(f"gradient axis must be 'x' or 'y', got {axis!r}")
        return GradientAlpha(axis=axis, start=_unit("start", 0.0), stop=_unit("stop", 1.0))
    raise AlphaSpecError(f"unknown alpha spec type {kind!r}")


@dataclass
class SessionRecord:
    id: str
    state: str = "queued"
    iteration: int = 0
    total_iterations: int = 0
    recent_losses: deque = dc_field(default_factory=lambda: deque(maxlen=LOSS_WINDOW))
    previews: dict = dc_field(default_factory=dict)  # "0.5" -> PNG bytes
    session: Session | None = None
    error: str | None = None
    created_at: float = dc_field(default_factory=time.time)
    lock: threading.Lock = dc_field(default_factory=threading.Lock, repr=False)

    def status(self) -> dict:
        with self.lock:
            return {
                "id": self.id,
                "state": self.state,
                "iteration": self.iteration,
                "total_iterations": self.total_iterations,
                "losses": list(self.recent_losses),
                "previews": [
                    {"alpha": float(key), "url": f"/api/sessions/{self.id}/previews/{key}.png"}
                    for key in sorted(self.previews)
                ],
                "error": self.error,
            }


class StyleService:
    def __init__(self, extractor: FeatureExtractor | None = None,
                 weights_path: str | None = None, data_dir: str | None = None,
                 max_upload: int = DEFAULT_MAX_UPLOAD, workers: int | None = None):
        if extractor is None and weights_path:
            extractor = load_extractor(weights_path)
        self.extractor = extractor
        self.data_dir = Path(data_dir) if data_dir else None
        self.max_upload = max_upload
        self._records: dict[str, SessionRecord] = {}
        self._store_lock = threading.Lock()
        n_workers = workers or max(1, (os.cpu_count() or 2) // 2)
        self._pool = ThreadPoolExecutor(max_workers=n_workers,
                                        thread_name_prefix="inrst-train")
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            self._load_archives()

    def _load_archives(self) -> None:
        for path in sorted(self.data_dir.glob("*.inrs")):
            try:
                session = load_session_file(path)
            except (FormatError, OSError):
                continue
            record = SessionRecord(id=path.stem, state="ready")
            record.session = session
            record.total_iterations = session.train_config.iterations
            record.iteration = session.train_config.iterations
            self._records[record.id] = record

    def get(self, session_id: str) -> SessionRecord | None:
        with self._store_lock:
            return self._records.get(session_id)

    def _register(self, record: SessionRecord) -> None:
        with self._store_lock:
            self._records[record.id] = record

    def _new_id(self) -> str:
        return secrets.token_hex(8)

    def submit(self, content: imaging.Image, style: imaging.Image,
               cfg: TrainConfig) -> SessionRecord:
        if self.extractor is None:
            raise RuntimeError("service has no feature extractor configured")
        record = SessionRecord(id=self._new_id(), total_iterations=cfg.iterations)
        self._register(record)
        self._pool.submit(self._train_job, record, content, style, cfg)
        return record

    def adopt(self, session: Session) -> SessionRecord:
        record = SessionRecord(id=self._new_id(), state="ready")
        record.session = session
        record.total_iterations = session.train_config.iterations
        record.iteration = session.train_config.iterations
        self._register(record)
        self._persist(record)
        return record

    def _persist(self, record: SessionRecord) -> None:
        if self.data_dir and record.session is not None:
            save_session_file(record.session, self.data_dir / f"{record.id}.inrs")

    def _train_job(self, record: SessionRecord, content: imaging.Image,
                   style: imaging.Image, cfg: TrainConfig) -> None:
        with record.lock:
            record.state = "training"

        def progress(i, report):
            with record.lock:
                record.iteration = i + 1
                record.recent_losses.append({
                    "iteration": i,
                    "content": report.content,
                    "style": report.style,
                    "total": report.total,
                    "alpha": report.alpha,
                })

        def snapshot(_i, previews):
            encoded = {f"{a:g}": imaging.encode(img) for a, img in previews.items()}
            with record.lock:
                record.previews.update(encoded)

        try:
            session = train(content, style, cfg, self.extractor,
                            progress=progress, snapshot=snapshot)
            final = {}
            for a in PREVIEW_ALPHAS:
                img = render(session, RenderRequest(
                    height=session.train_height, width=session.train_width,
                    alpha=UniformAlpha(a)))
                final[f"{a:g}"] = imaging.encode(img)
            with record.lock:
                record.session = session
                record.previews.update(final)
                record.state = "ready"
            self._persist(record)
        except Exception as exc:  # noqa: BLE001 - job boundary
            with record.lock:
                record.state = "failed"
                record.error = str(exc)

    def shutdown(self) -> None:
        self._pool.shutdown(wait=False, cancel_futures=True)


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(extractor: FeatureExtractor | None = None,
               weights_path: str | None = None, data_dir: str | None = None,
               max_upload: int = DEFAULT_MAX_UPLOAD,
               workers: int | None = None) -> FastAPI:
    service = StyleService(extractor=extractor, weights_path=weights_path,
                           data_dir=data_dir, max_upload=max_upload, workers=workers)
    app = FastAPI(title="inrstyle service")
    app.state.service = service

    @app.post("/api/sessions", status_code=202)
    async def create_session(content: UploadFile = File(...),
                             style: UploadFile = File(...),
                             config: str = Form("{}")):
        try:
            cfg, echo = parse_train_config(config)
        except ConfigFieldError as exc:
            return _error(400, str(exc))
        images = {}
        for name, upload in (("content", content), ("style", style)):
            data = await upload.read()
            if len(data) > service.max_upload:
                return _error(413, f"{name} image exceeds {service.max_upload} bytes")
            try:
                images[name] = imaging.decode(data)
            except ValueError as exc:
                return _error(400, f"{name} image: {exc}")
        if service.extractor is None:
            return _error(400, "service has no feature extractor configured")
        record = service.submit(images["content"], images["style"], cfg)
        return JSONResponse(status_code=202,
                            content={"id": record.id, "config": echo})

    @app.get("/api/sessions/{session_id}")
    async def session_status(session_id: str):
        record = service.get(session_id)
        if record is None:
            return _error(404, f"unknown session {session_id}")
        return record.status()

    @app.get("/api/sessions/{session_id}/previews/{name}")
    async def session_preview(session_id: str, name: str):
        record = service.get(session_id)
        if record is None:
            return _error(404, f"unknown session {session_id}")
        key = name[:-4] if name.endswith(".png") else name
        with record.lock:
            data = record.previews.get(key)
        if data is None:
            return _error(404, f"no preview {name!r}")
        return Response(content=data, media_type="image/png")

    @app.post("/api/sessions/{session_id}/render")
    async def render_session(session_id: str, body: dict):
        record = service.get(session_id)
        if record is None:
            return _error(404, f"unknown session {session_id}")
        with record.lock:
            state, session = record.state, record.session
        if state != "ready" or session is None:
            return _error(409, f"session is {state}, not ready")
        try:
            spec = parse_alpha_json(body.get("alpha", {"type": "uniform", "alpha": 0.5}))
        except AlphaRangeError as exc:
            return _error(422, str(exc))
        except AlphaSpecError as exc:
            return _error(400, str(exc))
        try:
            width = int(body.get("width", session.train_width))
            height = int(body.get("height", session.train_height))
            chunk_rows = int(body.get("chunk_rows", 256))
            req = RenderRequest(height=height, width=width, alpha=spec,
                                chunk_rows=chunk_rows)
        except (TypeError, ValueError) as exc:
            return _error(400, f"invalid render request: {exc}")
        try:
            img = render(session, req)
        except ValueError as exc:
            return _error(422, str(exc))
        return Response(content=imaging.encode(img), media_type="image/png")

    @app.get("/api/sessions/{session_id}/archive")
    async def export_archive(session_id: str):
        record = service.get(session_id)
        if record is None:
            return _error(404, f"unknown session {session_id}")
        with record.lock:
            state, session = record.state, record.session
        if state != "ready" or session is None:
            return _error(409, f"session is {state}, not ready")
        return Response(content=session_to_bytes(session),
                        media_type="application/octet-stream",
                        headers={"Content-Disposition":
                                 f'attachment; filename="{session_id}.inrs"'})

    @app.post("/api/sessions/import")
    async def import_archive(archive: UploadFile = File(...)):
        data = await archive.read()
        try:
            session = session_from_bytes(data)
        except FormatError as exc:
            return _error(400, str(exc))
        record = service.adopt(session)
        return {"id": record.id}

    return app


def main(argv=None) -> int:
    import uvicorn

    addr = os.environ.get("INRST_ADDR", DEFAULT_ADDR)
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        print(f"error: INRST_ADDR must be host:port, got {addr!r}", file=sys.stderr)
        return 1
    weights = os.environ.get("INRST_VGG_WEIGHTS")
    data_dir = os.environ.get("INRST_DATA_DIR")
    if not weights:
        print("error: INRST_VGG_WEIGHTS must point to a weight file", file=sys.stderr)
        return 1
    try:
        app = create_app(weights_path=weights, data_dir=data_dir)
    except (WeightLoadError, FormatError, OSError) as exc:
        print(f"error: cannot load weights: {exc}", file=sys.stderr)
        return 1
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
