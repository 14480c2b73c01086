"""Stage 1: conditional parsing generation.

A dense-block encoder/decoder predicts the dressed-body parsing from the
fused person representation plus the flat garment image; a patch
discriminator conditioned on the same inputs drives the adversarial term.
"""

from __future__ import annotations

from typing import Tuple

import torch

from .core import NUM_KEYPOINTS, NUM_LABELS, ImageTensor, SegmentationMap
from .networks import DenseEncoderDecoder, PatchDiscriminator
from .person import PersonRepresentation
from .torch_utils import image_to_tensor, parsing_to_onehot, pose_to_tensor


class ParsingGenerator(DenseEncoderDecoder):
    """Dense-block encoder/decoder over (fuzzy parsing, pose, identity, garment)."""

    def __init__(
        self,
        num_labels: int = NUM_LABELS,
        num_keypoints: int = NUM_KEYPOINTS,
        base: int = 16,
        growth: int = 12,
        block_layers: int = 3,
        dropout: float = 0.1,
    ):
        in_ch = num_labels + num_keypoints + 3 + 3
        super().__init__(
            in_ch=in_ch,
            out_ch=num_labels,
            base=base,
            growth=growth,
            block_layers=block_layers,
            dropout=dropout,
        )
        self.num_labels = num_labels


class ParsingDiscriminator(PatchDiscriminator):
    """Patch scores over (candidate parsing one-hot, conditioning stack)."""

    def __init__(self, num_labels: int = NUM_LABELS, num_keypoints: int = NUM_KEYPOINTS, base: int = 16):
        super().__init__(in_ch=num_labels + num_labels + num_keypoints + 3 + 3, base=base)


def stage1_input(rep: PersonRepresentation, garment: ImageTensor) -> torch.Tensor:
    """Concatenated conditioning tensor (L + K + 3 + 3 channels)."""
    if garment.data.shape[:2] != rep.fuzzy_parsing.shape:
        raise ValueError("garment and person representation shapes must agree")
    return torch.cat(
        [
            parsing_to_onehot(rep.fuzzy_parsing),
            pose_to_tensor(rep.pose),
            image_to_tensor(rep.identity_image),
            image_to_tensor(garment),
        ],
        dim=0,
    )


def parsing_forward(
    gen: ParsingGenerator, rep: PersonRepresentation, garment: ImageTensor
) -> Tuple[SegmentationMap, torch.Tensor]:
    """Predict the dressed parsing; returns (argmax map, raw logits).

    Runs in eval mode (dropout off), so repeated calls are identical.
    """
    x = stage1_input(rep, garment)
    was_training = gen.training
    gen.eval()
    with torch.no_grad():
        logits = gen(x[None])[0]
    gen.train(was_training)
    labels = logits.argmax(dim=0).numpy()
    return SegmentationMap(labels, rep.fuzzy_parsing.label_vocabulary), logits
