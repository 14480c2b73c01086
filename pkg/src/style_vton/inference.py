"""End-to-end try-on pipeline assembled from stage checkpoints."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np
import torch
import torch.nn as nn

from .checkpoint import load_checkpoint
from .config import RunConfig, config_from_dict
from .core import BinaryMask, ImageTensor, PoseHeatmap, SegmentationMap
from .parsing import parsing_forward
from .person import build_person_representation
from .style_edit import (
    EditResult,
    ShapeVAE,
    StyleCode,
    StyleGenerators,
    TextureEncoderGenerator,
    encode_style,
    minimal_edit,
    regions_from_logits,
    render_style,
)
from .torch_utils import image_to_tensor, tensor_to_image
from .texture_map import (
    UVCorrespondence,
    predict_correspondence,
    sample_texture,
    synthesize_tryon,
    warp_contour,
)
from .training import STAGE_NAMES, build_stage_modules


@dataclass
class TryonResult:
    """Everything the three stages hand forward plus the composed image."""

    parsing: SegmentationMap
    warped_mask: BinaryMask
    correspondence: UVCorrespondence
    warped_texture: ImageTensor
    output: ImageTensor


class TryOnPipeline:
    """Loads all stage checkpoints and exposes try-on and style editing."""

    def __init__(self, run: RunConfig, modules: Dict[str, Dict[str, nn.Module]]):
        self.run = run
        self.modules = modules
        for stage_mods in modules.values():
            for m in stage_mods.values():
                m.eval()

    @classmethod
    def from_checkpoint_dir(cls, ckpt_dir: Path) -> "TryOnPipeline":
        ckpt_dir = Path(ckpt_dir)
        missing = [s for s in STAGE_NAMES if not (ckpt_dir / f"{s}.ckpt").exists()]
        if missing:
            raise FileNotFoundError(
                f"checkpoint dir {ckpt_dir} is missing stages: {', '.join(missing)}"
            )
        run: Optional[RunConfig] = None
        modules: Dict[str, Dict[str, nn.Module]] = {}
        for stage in STAGE_NAMES:
            header, tensors = load_checkpoint(ckpt_dir / f"{stage}.ckpt")
            if run is None:
                run = config_from_dict(header["config"])
            modules[stage] = build_stage_modules(stage, run, tensors)
        return cls(run, modules)

    # stage hand-offs -------------------------------------------------------

    def predict_parsing(
        self,
        person: ImageTensor,
        parsing: SegmentationMap,
        pose: PoseHeatmap,
        garment: ImageTensor,
    ) -> SegmentationMap:
        rep = build_person_representation(person, parsing, pose)
        pred, _ = parsing_forward(self.modules["parsing"]["generator"], rep, garment)
        return pred

    def tryon(
        self,
        person: ImageTensor,
        parsing: SegmentationMap,
        pose: PoseHeatmap,
        garment: ImageTensor,
        garment_mask: BinaryMask,
    ) -> TryonResult:
        rep = build_person_representation(person, parsing, pose)
        pred_parsing, _ = parsing_forward(self.modules["parsing"]["generator"], rep, garment)
        warped = warp_contour(
            self.modules["contour"]["warper"], garment_mask, pose, rep.fuzzy_parsing
        )
        corr = predict_correspondence(self.modules["correspondence"]["net"], warped)
        if corr.validity.sum() > 0:
            tex = sample_texture(corr, garment, garment_mask)
        else:
            tex = ImageTensor(np.zeros((person.height, person.width, 3), dtype=np.float32))
        out = synthesize_tryon(
            self.modules["synthesizer"]["synthesizer"],
            pose,
            pred_parsing,
            tex,
            rep.identity_image,
        )
        return TryonResult(
            parsing=pred_parsing,
            warped_mask=warped,
            correspondence=corr,
            warped_texture=tex,
            output=out,
        )

    # style editing ---------------------------------------------------------

    def style_vae(self) -> ShapeVAE:
        return ShapeVAE(
            encoder=self.modules["vae"]["encoder"], decoder=self.modules["vae"]["decoder"]
        )

    def style_generators(self) -> StyleGenerators:
        return StyleGenerators(
            shape_decoder=self.modules["vae"]["decoder"],
            texture_generator=self.modules["texture"]["generator"],
        )

    def encode_style(self, image: ImageTensor, regions: SegmentationMap) -> StyleCode:
        tex = TextureEncoderGenerator(
            encoder=self.modules["texture"]["encoder"],
            generator=self.modules["texture"]["generator"],
        )
        return encode_style(self.style_vae(), tex, image_to_tensor(image), regions)

    def render_code(self, code: StyleCode):
        """Hard-render a style code: (image, regions, classifier score)."""
        gens = self.style_generators()
        scorer = self.modules["classifier"]["classifier"]
        with torch.no_grad():
            logits, probs, image = render_style(gens, code, soft_tau=None)
            score = float(scorer(image, probs))
        return tensor_to_image(image), regions_from_logits(logits, gens.vocabulary), score

    def edit_style(
        self,
        code: StyleCode,
        editable_regions: Sequence[str],
        steps: int,
        step_size: float,
        budget: float,
        classifier: Optional[nn.Module] = None,
        components: Sequence[str] = ("shape", "texture"),
        origin: Optional[StyleCode] = None,
    ) -> EditResult:
        scorer = classifier if classifier is not None else self.modules["classifier"]["classifier"]
        return minimal_edit(
            code,
            scorer,
            self.style_generators(),
            editable_regions,
            steps=steps,
            step_size=step_size,
            budget=budget,
            components=components,
            origin=origin,
        )
