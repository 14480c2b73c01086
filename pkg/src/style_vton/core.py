"""Shared domain types and mask algebra.

Conventions used across the whole package:
  * images are channel-last float arrays with values in [0, 1]
  * segmentation maps use the 8-entry ``LABELS`` vocabulary below
  * pose heatmaps have one channel per entry of ``KEYPOINTS``
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

# Region vocabulary, trimmed to 8 upper-body-centric labels. Index == label id.
LABELS: Tuple[str, ...] = (
    "background",
    "face",
    "hair",
    "hat",
    "torso-garment",
    "arms",
    "legs",
    "indistinct",
)
LABEL_IDS = {name: i for i, name in enumerate(LABELS)}
NUM_LABELS = len(LABELS)

# Minimum vocabulary any SegmentationMap must carry.
REQUIRED_LABELS = ("background", "face", "hair", "torso-garment", "arms", "indistinct")

# Upper-body keypoint set: enough to pose a top garment.
KEYPOINTS: Tuple[str, ...] = (
    "head",
    "neck",
    "shoulder_l",
    "shoulder_r",
    "elbow_l",
    "elbow_r",
    "wrist_l",
    "wrist_r",
)
NUM_KEYPOINTS = len(KEYPOINTS)

# Heatmap spread: 2 px at a 256-row image, scaled with resolution.
BASE_SIGMA = 2.0
BASE_HEIGHT = 256


def default_sigma(height: int) -> float:
    return BASE_SIGMA * height / BASE_HEIGHT


def _as_float_image(data: np.ndarray) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr


@dataclass(frozen=True)
class ImageTensor:
    """H x W x C float image with all values finite and inside [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = _as_float_image(self.data)
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"image must be HxWx1 or HxWx3, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("image values must lie in [0, 1]")
        object.__setattr__(self, "data", arr)
        arr.setflags(write=False)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.data.shape


@dataclass(frozen=True)
class BinaryMask:
    """H x W mask whose entries are exactly 0 or 1."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError(f"mask must be HxW, got shape {arr.shape}")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("mask values must be exactly 0 or 1")
        arr = arr.astype(np.uint8)
        object.__setattr__(self, "data", arr)
        arr.setflags(write=False)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    def is_empty(self) -> bool:
        return not self.data.any()


@dataclass(frozen=True)
class SegmentationMap:
    """H x W integer label map over an ordered region vocabulary."""

    labels: np.ndarray
    label_vocabulary: Tuple[str, ...] = LABELS

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 2:
            raise ValueError(f"label map must be HxW, got shape {arr.shape}")
        vocab = tuple(self.label_vocabulary)
        missing = [name for name in REQUIRED_LABELS if name not in vocab]
        if missing:
            raise ValueError(f"vocabulary is missing required labels: {missing}")
        if arr.min() < 0 or arr.max() >= len(vocab):
            raise ValueError("pixel labels must lie in [0, len(vocabulary))")
        arr = arr.astype(np.int64)
        object.__setattr__(self, "labels", arr)
        object.__setattr__(self, "label_vocabulary", vocab)
        arr.setflags(write=False)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.labels.shape

    def label_id(self, name: str) -> int:
        return self.label_vocabulary.index(name)

    def region_mask(self, name: str) -> BinaryMask:
        return BinaryMask((self.labels == self.label_id(name)).astype(np.uint8))


@dataclass(frozen=True)
class PoseHeatmap:
    """K x H x W Gaussian keypoint response maps in [0, 1].

    A visible keypoint at an integer pixel produces a channel peaking at
    exactly 1.0 there; absent keypoints give all-zero channels.
    """

    data: np.ndarray
    sigma: float

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 3:
            raise ValueError(f"heatmap must be KxHxW, got shape {arr.shape}")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("heatmap values must lie in [0, 1]")
        object.__setattr__(self, "data", arr)
        arr.setflags(write=False)

    @property
    def keypoints(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class AffineWarp:
    """Affine map from target-image (y, x) coords to garment (y, x) coords.

    Stored by the synthetic generator as its own ground-truth warp so tests
    can check texture transfer against an independent oracle.
    """

    matrix: np.ndarray  # 2x2
    offset: np.ndarray  # 2

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64).reshape(2, 2)
        o = np.asarray(self.offset, dtype=np.float64).reshape(2)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "offset", o)

    def apply(self, coords_yx: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords_yx, dtype=np.float64)
        return coords @ self.matrix.T + self.offset


@dataclass(frozen=True)
class DatasetPair:
    """One training/test sample: a person, a flat garment and aligned targets."""

    person: ImageTensor
    garment: ImageTensor
    garment_mask: BinaryMask
    parsing_gt: SegmentationMap
    pose: PoseHeatmap
    tryon_gt: ImageTensor
    pair_id: str = ""
    # Generator-only extras (not part of the on-disk pair layout):
    garment_warp: Optional[AffineWarp] = None
    texture_kind: Optional[str] = None
    seed: Optional[int] = None

    def __post_init__(self):
        hw = self.person.data.shape[:2]
        members = {
            "garment": self.garment.data.shape[:2],
            "garment_mask": self.garment_mask.shape,
            "parsing_gt": self.parsing_gt.shape,
            "pose": self.pose.data.shape[1:],
            "tryon_gt": self.tryon_gt.data.shape[:2],
        }
        for name, shape in members.items():
            if tuple(shape) != tuple(hw):
                raise ValueError(f"{name} shape {shape} does not match person shape {hw}")

    @property
    def height(self) -> int:
        return self.person.height

    @property
    def width(self) -> int:
        return self.person.width


def make_gaussian_heatmap(
    keypoints: Sequence[Optional[Tuple[float, float]]],
    height: int,
    width: int,
    sigma: float,
) -> PoseHeatmap:
    """Render (x, y) keypoints as Gaussian channels; None entries stay zero.

    Channel k holds exp(-((x - x_k)^2 + (y - y_k)^2) / (2 sigma^2)) sampled at
    pixel centers.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    ys = np.arange(height, dtype=np.float64)[:, None]
    xs = np.arange(width, dtype=np.float64)[None, :]
    channels = np.zeros((len(keypoints), height, width), dtype=np.float32)
    for k, kp in enumerate(keypoints):
        if kp is None:
            continue
        x, y = float(kp[0]), float(kp[1])
        if not (0 <= x <= width - 1 and 0 <= y <= height - 1):
            raise ValueError(f"keypoint {k} at ({x}, {y}) lies outside the image")
        g = np.exp(-((xs - x) ** 2 + (ys - y) ** 2) / (2.0 * sigma**2))
        channels[k] = g.astype(np.float32)
    return PoseHeatmap(data=channels, sigma=float(sigma))


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union of two same-shape masks; 1.0 when both empty."""
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    inter = int(np.logical_and(a.data, b.data).sum())
    union = int(np.logical_or(a.data, b.data).sum())
    if union == 0:
        return 1.0
    return inter / union
