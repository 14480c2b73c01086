"""Clothing-agnostic person representation (stage-0 preprocessing).

The garment-bearing regions of the input parsing collapse into a single
``indistinct`` label, and the person image keeps only face/hair/background
pixels; everything else is filled with neutral mid-gray so no garment pixel
can leak into later stages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ImageTensor, PoseHeatmap, SegmentationMap

# Regions fused away before stage 1 / regions copied through untouched.
FUSED_LABELS = ("torso-garment", "arms")
PRESERVED_LABELS = ("background", "face", "hair")
NEUTRAL_FILL = 0.5


@dataclass(frozen=True)
class PersonRepresentation:
    fuzzy_parsing: SegmentationMap
    pose: PoseHeatmap
    identity_image: ImageTensor


def build_person_representation(
    person: ImageTensor, parsing: SegmentationMap, pose: PoseHeatmap
) -> PersonRepresentation:
    if parsing.shape != person.data.shape[:2] or pose.data.shape[1:] != parsing.shape:
        raise ValueError("person, parsing and pose shapes must agree")
    vocab = parsing.label_vocabulary
    for name in FUSED_LABELS + ("indistinct",):
        if name not in vocab:
            raise ValueError(f"parsing vocabulary lacks required label {name!r}")

    labels = parsing.labels.copy()
    fused = np.isin(labels, [vocab.index(n) for n in FUSED_LABELS])
    labels[fused] = vocab.index("indistinct")

    preserved = np.isin(parsing.labels, [vocab.index(n) for n in PRESERVED_LABELS])
    identity = np.full_like(person.data, NEUTRAL_FILL)
    identity[preserved] = person.data[preserved]

    return PersonRepresentation(
        fuzzy_parsing=SegmentationMap(labels, vocab),
        pose=pose,
        identity_image=ImageTensor(identity),
    )
