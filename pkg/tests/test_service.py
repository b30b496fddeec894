import base64
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from inrstyle import imaging
from inrstyle.imaging import Image
from inrstyle.latents import AlphaMap, GradientAlpha, RegionAlphas, UniformAlpha
from inrstyle.service import (
    AlphaRangeError,
    AlphaSpecError,
    ConfigFieldError,
    SessionRecord,
    create_app,
    parse_alpha_json,
    parse_train_config,
)
from inrstyle.session import session_from_bytes

TRAIN_CONFIG = '{"size": 32, "iters": 3, "style_weight": 100, "snapshot_interval": 1}'


def _png(seed: int, h: int = 40, w: int = 40) -> bytes:
    rng = np.random.default_rng(seed)
    return imaging.encode(Image(rng.random((h, w, 3)).astype(np.float32)))


def _mask_b64(h: int = 8, w: int = 8, value: float = 1.0) -> str:
    img = Image(np.full((h, w, 3), value, dtype=np.float32))
    return base64.b64encode(imaging.encode(img)).decode()


def _wait_ready(client, session_id: str, timeout: float = 120.0) -> dict:
    deadline = time.time() + timeout
    while time.time() < deadline:
        status = client.get(f"/api/sessions/{session_id}").json()
        if status["state"] in ("ready", "failed"):
            return status
        time.sleep(0.05)
    raise TimeoutError(f"session {session_id} did not finish")


class TestParseTrainConfig:
    def test_defaults(self):
        cfg, echo = parse_train_config("")
        assert cfg.iterations == 5000
        assert cfg.train_size == 256
        assert echo["snapshot_interval"] == 500

    def test_overrides_and_echo(self):
        cfg, echo = parse_train_config(TRAIN_CONFIG)
        assert cfg.train_size == 32
        assert cfg.iterations == 3
        assert cfg.loss.lambda_style == 100.0
        assert cfg.snapshot_interval == 1
        assert echo["kappa"] == 2.0  # default filled in

    def test_snapshot_default_scales_with_iters(self):
        cfg, _ = parse_train_config('{"iters": 35}')
        assert cfg.snapshot_interval == 3

    def test_seed_fans_out(self):
        cfg, _ = parse_train_config('{"seed": 9}')
        assert cfg.latent_seed == cfg.param_seed == cfg.alpha_seed == 9

    def test_unknown_field_named(self):
        with pytest.raises(ConfigFieldError, match="sizes"):
            parse_train_config('{"sizes": 32}')

    def test_invalid_json(self):
        with pytest.raises(ConfigFieldError, match="not valid JSON"):
            parse_train_config("{nope")

    def test_non_object(self):
        with pytest.raises(ConfigFieldError, match="JSON object"):
            parse_train_config("[1, 2]")

    def test_domain_violations_surface(self):
        with pytest.raises(ConfigFieldError, match="kappa"):
            parse_train_config('{"kappa": -1}')
        with pytest.raises(ConfigFieldError, match="iterations"):
            parse_train_config('{"iters": 0}')


class TestParseAlphaJson:
    def test_uniform(self):
        assert parse_alpha_json({"type": "uniform", "alpha": 0.25}) == UniformAlpha(0.25)

    def test_map(self):
        spec = parse_alpha_json({"type": "map", "png_base64": _mask_b64()})
        assert isinstance(spec, AlphaMap)

    def test_regions(self):
        spec = parse_alpha_json({
            "type": "regions",
            "regions": [{"png_base64": _mask_b64(), "alpha": 0.2}],
            "default_alpha": 0.8,
        })
        assert isinstance(spec, RegionAlphas)
        assert spec.default_alpha == 0.8
        assert spec.regions[0][1] == 0.2

    def test_gradient_with_defaults(self):
        spec = parse_alpha_json({"type": "gradient", "axis": "y"})
        assert spec == GradientAlpha(axis="y", start=0.0, stop=1.0)

    @pytest.mark.parametrize("obj", [
        "not a dict",
        {},
        {"type": "mystery"},
        {"type": "uniform"},
        {"type": "uniform", "alpha": True},
        {"type": "map"},
        {"type": "map", "png_base64": "!!!not-base64!!!"},
        {"type": "map", "png_base64": base64.b64encode(b"junk").decode()},
        {"type": "regions", "regions": "nope"},
        {"type": "regions", "regions": [{"alpha": 0.5}]},
        {"type": "gradient", "axis": "diagonal"},
    ])
    def test_structural_errors(self, obj):
        with pytest.raises(AlphaSpecError):
            parse_alpha_json(obj)

    @pytest.mark.parametrize("obj", [
        {"type": "uniform", "alpha": 1.5},
        {"type": "uniform", "alpha": -0.1},
        {"type": "gradient", "start": 2.0},
        {"type": "regions", "regions": [], "default_alpha": 3.0},
    ])
    def test_range_errors(self, obj):
        with pytest.raises(AlphaRangeError):
            parse_alpha_json(obj)

    def test_region_alpha_range(self):
        with pytest.raises(AlphaRangeError):
            parse_alpha_json({"type": "regions",
                              "regions": [{"png_base64": _mask_b64(), "alpha": 9}]})


@pytest.fixture(scope="module")
def app(extractor, tmp_path_factory):
    data_dir = tmp_path_factory.mktemp("service-data")
    return create_app(extractor=extractor, data_dir=str(data_dir))


@pytest.fixture(scope="module")
def client(app):
    with TestClient(app) as c:
        yield c
    app.state.service.shutdown()


@pytest.fixture(scope="module")
def ready_session(client) -> str:
    resp = client.post("/api/sessions",
                       files={"content": ("c.png", _png(0), "image/png"),
                              "style": ("s.png", _png(1), "image/png")},
                       data={"config": TRAIN_CONFIG})
    assert resp.status_code == 202
    session_id = resp.json()["id"]
    status = _wait_ready(client, session_id)
    assert status["state"] == "ready", status.get("error")
    return session_id


class TestLifecycle:
    def test_create_echoes_config(self, client):
        resp = client.post("/api/sessions",
                           files={"content": ("c.png", _png(2), "image/png"),
                                  "style": ("s.png", _png(3), "image/png")},
                           data={"config": TRAIN_CONFIG})
        assert resp.status_code == 202
        body = resp.json()
        assert body["config"]["size"] == 32
        assert body["config"]["iters"] == 3
        assert body["config"]["kappa"] == 2.0
        _wait_ready(client, body["id"])  # don't leave the worker running

    def test_progress_and_previews(self, client, ready_session):
        status = client.get(f"/api/sessions/{ready_session}").json()
        assert status["iteration"] == status["total_iterations"] == 3
        assert [p["alpha"] for p in status["previews"]] == [0.0, 0.5, 1.0]
        assert len(status["losses"]) == 3
        assert set(status["losses"][0]) == {"iteration", "content", "style", "total", "alpha"}

    def test_preview_is_png(self, client, ready_session):
        status = client.get(f"/api/sessions/{ready_session}").json()
        url = status["previews"][1]["url"]
        resp = client.get(url)
        assert resp.status_code == 200
        assert resp.headers["content-type"] == "image/png"
        img = imaging.decode(resp.content)
        assert img.data.shape == (32, 32, 3)

    def test_unknown_session_404(self, client):
        assert client.get("/api/sessions/doesnotexist").status_code == 404
        assert client.get("/api/sessions/doesnotexist/previews/0.5.png").status_code == 404

    def test_unknown_preview_404(self, client, ready_session):
        assert client.get(f"/api/sessions/{ready_session}/previews/0.7.png").status_code == 404

    def test_bad_image_400(self, client):
        resp = client.post("/api/sessions",
                           files={"content": ("c.png", b"not a png", "image/png"),
                                  "style": ("s.png", _png(4), "image/png")},
                           data={"config": TRAIN_CONFIG})
        assert resp.status_code == 400
        assert "content image" in resp.json()["error"]

    def test_bad_config_400(self, client):
        resp = client.post("/api/sessions",
                           files={"content": ("c.png", _png(5), "image/png"),
                                  "style": ("s.png", _png(6), "image/png")},
                           data={"config": '{"kappa": 0}'})
        assert resp.status_code == 400
        assert "kappa" in resp.json()["error"]

    def test_oversize_413(self, extractor):
        app = create_app(extractor=extractor, max_upload=64)
        with TestClient(app) as small_client:
            resp = small_client.post("/api/sessions",
                                     files={"content": ("c.png", _png(7), "image/png"),
                                            "style": ("s.png", _png(8), "image/png")},
                                     data={"config": TRAIN_CONFIG})
        app.state.service.shutdown()
        assert resp.status_code == 413

    def test_failed_job_reports_error(self, client):
        # divergence can't be forced through the public schema; exercise the
        # failed state directly
        service = client.app.state.service
        record = SessionRecord(id="failed-demo", state="failed",
                               error="non-finite loss at iteration 3")
        service._register(record)
        status = client.get("/api/sessions/failed-demo").json()
        assert status["state"] == "failed"
        assert "non-finite" in status["error"]


class TestRenderEndpoint:
    def test_render_default(self, client, ready_session):
        resp = client.post(f"/api/sessions/{ready_session}/render", json={})
        assert resp.status_code == 200
        assert resp.headers["content-type"] == "image/png"
        assert imaging.decode(resp.content).data.shape == (32, 32, 3)

    def test_render_dims_and_alpha(self, client, ready_session):
        resp = client.post(f"/api/sessions/{ready_session}/render",
                           json={"alpha": {"type": "uniform", "alpha": 1.0},
                                 "width": 24, "height": 12})
        assert resp.status_code == 200
        assert imaging.decode(resp.content).data.shape == (12, 24, 3)

    def test_render_deterministic_bytes(self, client, ready_session):
        body = {"alpha": {"type": "gradient", "axis": "x"}, "width": 16, "height": 16}
        a = client.post(f"/api/sessions/{ready_session}/render", json=body)
        b = client.post(f"/api/sessions/{ready_session}/render", json=body)
        assert a.content == b.content

    def test_render_not_ready_409(self, client):
        record = SessionRecord(id="still-training", state="training", total_iterations=100)
        client.app.state.service._register(record)
        resp = client.post("/api/sessions/still-training/render", json={})
        assert resp.status_code == 409
        assert "training" in resp.json()["error"]

    def test_render_alpha_range_422(self, client, ready_session):
        resp = client.post(f"/api/sessions/{ready_session}/render",
                           json={"alpha": {"type": "uniform", "alpha": 2.0}})
        assert resp.status_code == 422

    def test_render_bad_spec_400(self, client, ready_session):
        resp = client.post(f"/api/sessions/{ready_session}/render",
                           json={"alpha": {"type": "vortex"}})
        assert resp.status_code == 400

    def test_render_bad_dims_400(self, client, ready_session):
        resp = client.post(f"/api/sessions/{ready_session}/render",
                           json={"width": 0, "height": 16})
        assert resp.status_code == 400
        resp = client.post(f"/api/sessions/{ready_session}/render",
                           json={"width": "wide", "height": 16})
        assert resp.status_code == 400

    def test_render_404(self, client):
        assert client.post("/api/sessions/nope/render", json={}).status_code == 404


class TestArchiveEndpoints:
    def test_export_parses_and_renders(self, client, ready_session):
        resp = client.get(f"/api/sessions/{ready_session}/archive")
        assert resp.status_code == 200
        assert resp.headers["content-type"] == "application/octet-stream"
        assert ready_session in resp.headers["content-disposition"]
        session = session_from_bytes(resp.content)
        assert session.train_config.iterations == 3

    def test_import_round_trip_renders_identically(self, client, ready_session):
        archive = client.get(f"/api/sessions/{ready_session}/archive").content
        resp = client.post("/api/sessions/import",
                           files={"archive": ("s.inrs", archive, "application/octet-stream")})
        assert resp.status_code == 200
        new_id = resp.json()["id"]
        assert new_id != ready_session
        body = {"alpha": {"type": "uniform", "alpha": 0.5}, "width": 20, "height": 20}
        original = client.post(f"/api/sessions/{ready_session}/render", json=body)
        imported = client.post(f"/api/sessions/{new_id}/render", json=body)
        assert original.content == imported.content

    def test_import_bad_archive_400(self, client):
        resp = client.post("/api/sessions/import",
                           files={"archive": ("bad.inrs", b"garbage bytes", "application/octet-stream")})
        assert resp.status_code == 400

    def test_export_not_ready_409(self, client):
        record = SessionRecord(id="queued-export", state="queued")
        client.app.state.service._register(record)
        assert client.get("/api/sessions/queued-export/archive").status_code == 409

    def test_archives_reload_on_startup(self, client, ready_session, extractor):
        # a second service over the same data dir sees the persisted session
        data_dir = client.app.state.service.data_dir
        assert (data_dir / f"{ready_session}.inrs").exists()
        app2 = create_app(extractor=extractor, data_dir=str(data_dir))
        with TestClient(app2) as client2:
            status = client2.get(f"/api/sessions/{ready_session}").json()
            assert status["state"] == "ready"
            render = client2.post(f"/api/sessions/{ready_session}/render", json={})
            assert render.status_code == 200
        app2.state.service.shutdown()


class TestServiceWithoutExtractor:
    def test_create_rejected(self, tmp_path):
        app = create_app(extractor=None)
        with TestClient(app) as c:
            resp = c.post("/api/sessions",
                          files={"content": ("c.png", _png(11), "image/png"),
                                 "style": ("s.png", _png(12), "image/png")},
                          data={"config": TRAIN_CONFIG})
        app.state.service.shutdown()
        assert resp.status_code == 400
        assert "extractor" in resp.json()["error"]
