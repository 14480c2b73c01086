"""HTTP service over a trained pipeline.

Endpoints: GET /healthz, GET /garments, POST /tryon, POST /edit/start,
POST /edit/step, POST /edit/reset. Images travel as base64 PNG. Every
response embeds the checkpoint manifest so clients can pin what produced it.

Edit sessions are held in memory with one lock per session: concurrent steps
on the same session serialize, distinct sessions never share a StyleCode.
"""

from __future__ import annotations

import base64
import binascii
import threading
from pathlib import Path
from typing import Dict, List, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from ._version import version_string
from .checkpoint import manifest_hash
from .core import DatasetPair, ImageTensor, SegmentationMap
from .dataset_io import (
    image_to_png_bytes,
    parsing_from_png_bytes,
    png_bytes_to_image,
    pose_from_keypoints,
)
from .inference import TryOnPipeline
from .style_edit import StyleCode
from .training import ensure_dataset, split_dataset

NUM_PIPELINE_STAGES = 3


class TryonRequest(BaseModel):
    garment_id: str
    # person source: a dataset fixture id, or an uploaded png (which also
    # needs its parsing map and pose, since their estimation is out of scope)
    fixture_id: Optional[str] = None
    person_png_b64: Optional[str] = None
    parsing_png_b64: Optional[str] = None
    pose_keypoints: Optional[List[Optional[List[float]]]] = None


class EditStartRequest(BaseModel):
    fixture_id: Optional[str] = None
    editable_regions: List[str] = Field(default_factory=list)


class EditStepRequest(BaseModel):
    session_id: str
    editable_regions: Optional[List[str]] = None
    steps: int = Field(default=5, ge=1)
    step_size: float = Field(default=0.5, gt=0)
    budget: float = Field(default=2.0, ge=0)
    components: List[str] = Field(default=["shape", "texture"])


class EditResetRequest(BaseModel):
    session_id: str


def _b64_png(image) -> str:
    return base64.b64encode(image_to_png_bytes(image)).decode("ascii")


def _code_summary(code: StyleCode) -> dict:
    shape = code.shape_latents.detach()
    texture = code.texture_features.detach()
    return {
        "regions": list(code.vocabulary),
        "shape_latent_dim": int(shape.shape[1]),
        "texture_feature_dim": int(texture.shape[1]),
        "shape_norm_per_region": [round(float(v), 6) for v in shape.norm(dim=1)],
        "texture_norm_per_region": [round(float(v), 6) for v in texture.norm(dim=1)],
    }


class _EditSession:
    def __init__(self, pair: DatasetPair, code: StyleCode, editable_regions: List[str]):
        self.pair = pair
        self.origin = code.clone()
        self.code = code
        self.editable_regions = editable_regions
        self.lock = threading.Lock()


def create_app(ckpt_dir: Path, data_dir: Path) -> FastAPI:
    ckpt_dir = Path(ckpt_dir)
    pipeline = TryOnPipeline.from_checkpoint_dir(ckpt_dir)
    dataset = ensure_dataset(Path(data_dir), pipeline.run)
    _, eval_pairs = split_dataset(dataset, pipeline.run)
    if not eval_pairs:
        eval_pairs = list(dataset)
    pairs_by_id: Dict[str, DatasetPair] = {p.pair_id: p for p in eval_pairs}
    default_pair_id = eval_pairs[0].pair_id
    manifest = {"hash": manifest_hash(ckpt_dir), "version": version_string()}

    app = FastAPI(title="style-vton", version=version_string())
    sessions: Dict[str, _EditSession] = {}
    registry_lock = threading.Lock()
    counter = {"next": 1}

    def _pair_or_404(pair_id: Optional[str]) -> DatasetPair:
        pid = pair_id or default_pair_id
        if pid not in pairs_by_id:
            raise HTTPException(status_code=404, detail=f"unknown fixture_id {pid!r}")
        return pairs_by_id[pid]

    def _session_or_404(session_id: str) -> _EditSession:
        with registry_lock:
            if session_id not in sessions:
                raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
            return sessions[session_id]

    def _decode_person(req: TryonRequest):
        if req.person_png_b64 is None:
            pair = _pair_or_404(req.fixture_id)
            return pair.person, pair.parsing_gt, pair.pose
        if req.parsing_png_b64 is None or req.pose_keypoints is None:
            raise HTTPException(
                status_code=400,
                detail="person uploads need parsing_png_b64 and pose_keypoints "
                "(pose/parsing estimation is not part of this service)",
            )
        try:
            person = png_bytes_to_image(base64.b64decode(req.person_png_b64, validate=True))
            parsing = parsing_from_png_bytes(
                base64.b64decode(req.parsing_png_b64, validate=True)
            )
            pose = pose_from_keypoints(req.pose_keypoints, person.height, person.width)
        except (ValueError, binascii.Error, OSError) as exc:
            raise HTTPException(status_code=400, detail=f"bad person upload: {exc}")
        if (parsing.labels.shape != (person.height, person.width)) or (
            person.height != pipeline.run.image_height
            or person.width != pipeline.run.image_width
        ):
            raise HTTPException(
                status_code=400,
                detail=f"person/parsing must be {pipeline.run.image_height}x"
                f"{pipeline.run.image_width} to match the trained pipeline",
            )
        return person, parsing, pose

    @app.get("/healthz")
    def healthz():
        return {
            "stages_loaded": NUM_PIPELINE_STAGES,
            "status": "ok",
            "manifest": manifest,
        }

    @app.get("/garments")
    def garments():
        items = [
            {
                "id": p.pair_id,
                "texture_kind": p.texture_kind or "unknown",
                "width": p.garment.width,
                "height": p.garment.height,
            }
            for p in eval_pairs
        ]
        return {"garments": items, "manifest": manifest}

    @app.post("/tryon")
    def tryon(req: TryonRequest):
        if req.garment_id not in pairs_by_id:
            raise HTTPException(status_code=404, detail=f"unknown garment_id {req.garment_id!r}")
        garment_pair = pairs_by_id[req.garment_id]
        person, parsing, pose = _decode_person(req)
        result = pipeline.tryon(
            person, parsing, pose, garment_pair.garment, garment_pair.garment_mask
        )
        return {
            "garment_id": req.garment_id,
            "image_png_b64": _b64_png(result.output),
            "warped_texture_png_b64": _b64_png(result.warped_texture),
            "manifest": manifest,
        }

    @app.post("/edit/start")
    def edit_start(req: EditStartRequest):
        pair = _pair_or_404(req.fixture_id)
        code = pipeline.encode_style(pair.tryon_gt, pair.parsing_gt)
        bad = [r for r in req.editable_regions if r not in code.vocabulary]
        if bad:
            raise HTTPException(status_code=400, detail=f"unknown regions: {bad}")
        with registry_lock:
            session_id = f"sess-{counter['next']:06d}"
            counter["next"] += 1
            sessions[session_id] = _EditSession(pair, code, list(req.editable_regions))
        image, _, score = pipeline.render_code(code)
        return {
            "session_id": session_id,
            "fixture_id": pair.pair_id,
            "score": score,
            "code_summary": _code_summary(code),
            "image_png_base64": _b64_png(image),
            "manifest": manifest,
        }

    @app.post("/edit/step")
    def edit_step(req: EditStepRequest):
        session = _session_or_404(req.session_id)
        regions = req.editable_regions if req.editable_regions is not None else session.editable_regions
        if not regions:
            raise HTTPException(status_code=400, detail="no editable regions for this session")
        with session.lock:
            try:
                result = pipeline.edit_style(
                    session.code,
                    editable_regions=regions,
                    steps=req.steps,
                    step_size=req.step_size,
                    budget=req.budget,
                    components=tuple(req.components),
                    origin=session.origin,
                )
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            session.code = result.code
            return {
                "session_id": req.session_id,
                "score_trace": result.score_trace,
                "code_delta_norm": result.code_delta_norm,
                "steps_accepted": result.steps_accepted,
                "image_png_base64": _b64_png(result.image),
                "manifest": manifest,
            }

    @app.post("/edit/reset")
    def edit_reset(req: EditResetRequest):
        session = _session_or_404(req.session_id)
        with session.lock:
            session.code = session.origin.clone()
            image, _, score = pipeline.render_code(session.code)
            return {
                "session_id": req.session_id,
                "score": score,
                "code_delta_norm": 0.0,
                "image_png_base64": _b64_png(image),
                "manifest": manifest,
            }

    return app
