"""HTTP service contract: health, catalog, try-on, and edit sessions.

Runs against checkpoints trained by the shared toy fixture. Images travel as
base64 PNG; determinism of the pipeline makes golden-image comparisons exact,
so reset round trips are checked byte-for-byte.
"""

from __future__ import annotations

import base64
import io
import json

import pytest
from fastapi.testclient import TestClient
from PIL import Image

from style_vton.core import LABELS
from style_vton.service import create_app


@pytest.fixture(scope="module")
def client(toy_artifacts):
    app = create_app(toy_artifacts.ckpt_dir, toy_artifacts.data_dir)
    with TestClient(app) as c:
        c.data_dir = toy_artifacts.data_dir
        yield c


def png_size(b64: str):
    img = Image.open(io.BytesIO(base64.b64decode(b64)))
    return img.size  # (width, height)


def garment_ids(client):
    return [g["id"] for g in client.get("/garments").json()["garments"]]


def test_healthz_reports_three_stages_and_manifest(client):
    body = client.get("/healthz").json()
    assert body["status"] == "ok"
    assert body["stages_loaded"] == 3
    assert len(body["manifest"]["hash"]) == 16
    assert body["manifest"]["version"]


def test_garments_lists_heldout_catalog(client):
    resp = client.get("/garments")
    assert resp.status_code == 200
    body = resp.json()
    items = body["garments"]
    assert len(items) == 8
    assert [g["id"] for g in items] == sorted(g["id"] for g in items)
    for g in items:
        assert g["width"] == 48 and g["height"] == 64
        assert g["texture_kind"]
    assert body["manifest"] == client.get("/healthz").json()["manifest"]


def test_tryon_fixture_returns_pipeline_sized_images(client):
    gid = garment_ids(client)[1]
    resp = client.post("/tryon", json={"garment_id": gid})
    assert resp.status_code == 200
    body = resp.json()
    assert body["garment_id"] == gid
    assert png_size(body["image_png_b64"]) == (48, 64)
    assert png_size(body["warped_texture_png_b64"]) == (48, 64)
    assert "manifest" in body


def test_tryon_unknown_garment_404(client):
    resp = client.post("/tryon", json={"garment_id": "nope"})
    assert resp.status_code == 404


def test_tryon_unknown_fixture_404(client):
    gid = garment_ids(client)[0]
    resp = client.post("/tryon", json={"garment_id": gid, "fixture_id": "nope"})
    assert resp.status_code == 404


def test_tryon_upload_requires_parsing_and_pose(client):
    gid = garment_ids(client)[0]
    person_b64 = base64.b64encode(
        (client.data_dir / "pairs" / gid / "person.png").read_bytes()
    ).decode()
    resp = client.post("/tryon", json={"garment_id": gid, "person_png_b64": person_b64})
    assert resp.status_code == 400
    assert "parsing_png_b64" in resp.json()["detail"]


def test_tryon_upload_rejects_bad_base64(client):
    gid = garment_ids(client)[0]
    resp = client.post(
        "/tryon",
        json={
            "garment_id": gid,
            "person_png_b64": "@@not-base64@@",
            "parsing_png_b64": "@@not-base64@@",
            "pose_keypoints": [],
        },
    )
    assert resp.status_code == 400


def test_tryon_upload_rejects_wrong_size(client):
    gid = garment_ids(client)[0]
    buf = io.BytesIO()
    Image.new("RGB", (16, 16)).save(buf, format="PNG")
    person_b64 = base64.b64encode(buf.getvalue()).decode()
    parsing_b64 = base64.b64encode(
        (client.data_dir / "pairs" / gid / "parsing.png").read_bytes()
    ).decode()
    pose = json.loads((client.data_dir / "pairs" / gid / "pose.json").read_text())
    resp = client.post(
        "/tryon",
        json={
            "garment_id": gid,
            "person_png_b64": person_b64,
            "parsing_png_b64": parsing_b64,
            "pose_keypoints": pose,
        },
    )
    assert resp.status_code == 400


def test_tryon_upload_matches_fixture_result(client):
    # uploading a fixture's own person/parsing/pose must reproduce the
    # fixture-path output exactly: png decode and pose rebuild are lossless
    ids = garment_ids(client)
    gid, fixture = ids[2], ids[0]
    pair_dir = client.data_dir / "pairs" / fixture
    payload = {
        "garment_id": gid,
        "person_png_b64": base64.b64encode((pair_dir / "person.png").read_bytes()).decode(),
        "parsing_png_b64": base64.b64encode((pair_dir / "parsing.png").read_bytes()).decode(),
        "pose_keypoints": json.loads((pair_dir / "pose.json").read_text()),
    }
    uploaded = client.post("/tryon", json=payload)
    assert uploaded.status_code == 200
    via_fixture = client.post("/tryon", json={"garment_id": gid, "fixture_id": fixture})
    assert uploaded.json()["image_png_b64"] == via_fixture.json()["image_png_b64"]


def start_session(client, regions=("torso-garment",), fixture_id=None):
    payload = {"editable_regions": list(regions)}
    if fixture_id is not None:
        payload["fixture_id"] = fixture_id
    resp = client.post("/edit/start", json=payload)
    assert resp.status_code == 200
    return resp.json()


def test_edit_start_shapes(client):
    body = start_session(client)
    assert body["session_id"].startswith("sess-")
    assert isinstance(body["score"], float)
    summary = body["code_summary"]
    assert summary["regions"] == list(LABELS)
    assert summary["shape_latent_dim"] == 8
    assert summary["texture_feature_dim"] == 16
    assert len(summary["shape_norm_per_region"]) == len(LABELS)
    assert png_size(body["image_png_base64"]) == (48, 64)


def test_edit_start_unknown_region_400(client):
    resp = client.post("/edit/start", json={"editable_regions": ["bogus"]})
    assert resp.status_code == 400


def test_edit_start_unknown_fixture_404(client):
    resp = client.post(
        "/edit/start", json={"fixture_id": "nope", "editable_regions": ["torso-garment"]}
    )
    assert resp.status_code == 404


def test_edit_step_zero_budget_is_identity(client):
    body = start_session(client)
    golden = body["image_png_base64"]
    resp = client.post(
        "/edit/step", json={"session_id": body["session_id"], "budget": 0.0, "steps": 3}
    )
    assert resp.status_code == 200
    step = resp.json()
    assert step["steps_accepted"] == 0
    assert len(step["score_trace"]) == 1
    assert step["code_delta_norm"] == 0.0
    assert step["image_png_base64"] == golden


def test_edit_step_monotone_trace_within_budget(client):
    body = start_session(client)
    resp = client.post(
        "/edit/step",
        json={"session_id": body["session_id"], "steps": 5, "budget": 2.0},
    )
    assert resp.status_code == 200
    step = resp.json()
    trace = step["score_trace"]
    assert trace[0] == pytest.approx(body["score"])
    assert all(b > a for a, b in zip(trace, trace[1:]))
    assert step["steps_accepted"] == len(trace) - 1
    assert step["code_delta_norm"] <= 2.0 + 1e-6


def test_edit_budget_anchors_at_session_origin(client):
    # two step calls accumulate; displacement stays inside the ball around
    # the session's starting code, not around each call's starting point
    body = start_session(client)
    for _ in range(2):
        resp = client.post(
            "/edit/step",
            json={"session_id": body["session_id"], "steps": 4, "budget": 1.0},
        )
        assert resp.status_code == 200
        assert resp.json()["code_delta_norm"] <= 1.0 + 1e-6


def test_edit_reset_restores_golden_image(client):
    body = start_session(client)
    golden = body["image_png_base64"]
    first = client.post(
        "/edit/step", json={"session_id": body["session_id"], "steps": 4, "budget": 2.0}
    ).json()
    reset = client.post("/edit/reset", json={"session_id": body["session_id"]})
    assert reset.status_code == 200
    assert reset.json()["image_png_base64"] == golden
    assert reset.json()["code_delta_norm"] == 0.0
    # the session is genuinely back at the origin: replaying the same step
    # request reproduces the first response exactly
    again = client.post(
        "/edit/step", json={"session_id": body["session_id"], "steps": 4, "budget": 2.0}
    ).json()
    assert again["score_trace"] == first["score_trace"]
    assert again["image_png_base64"] == first["image_png_base64"]


def test_edit_sessions_are_isolated(client):
    a = start_session(client)
    b = start_session(client)
    assert a["session_id"] != b["session_id"]
    client.post("/edit/step", json={"session_id": a["session_id"], "steps": 4, "budget": 2.0})
    reset_b = client.post("/edit/reset", json={"session_id": b["session_id"]}).json()
    assert reset_b["image_png_base64"] == b["image_png_base64"]


def test_edit_step_unknown_session_404(client):
    resp = client.post("/edit/step", json={"session_id": "sess-999999"})
    assert resp.status_code == 404


def test_edit_step_unknown_region_400(client):
    body = start_session(client)
    resp = client.post(
        "/edit/step",
        json={"session_id": body["session_id"], "editable_regions": ["bogus"]},
    )
    assert resp.status_code == 400


def test_edit_step_without_regions_400(client):
    body = start_session(client, regions=())
    resp = client.post("/edit/step", json={"session_id": body["session_id"]})
    assert resp.status_code == 400
    assert "no editable regions" in resp.json()["detail"]


def test_every_response_pins_the_same_manifest(client):
    manifest = client.get("/healthz").json()["manifest"]
    gid = garment_ids(client)[0]
    session = start_session(client)
    responses = [
        client.get("/garments").json(),
        client.post("/tryon", json={"garment_id": gid}).json(),
        session,
        client.post("/edit/step", json={"session_id": session["session_id"]}).json(),
        client.post("/edit/reset", json={"session_id": session["session_id"]}).json(),
    ]
    assert all(r["manifest"] == manifest for r in responses)
