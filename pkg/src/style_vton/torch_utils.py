"""Converters between the numpy domain types and torch tensors."""

from __future__ import annotations

import numpy as np
import torch

from .core import BinaryMask, ImageTensor, PoseHeatmap, SegmentationMap


def image_to_tensor(image: ImageTensor) -> torch.Tensor:
    """HxWxC image -> (C, H, W) float32 tensor."""
    return torch.from_numpy(np.ascontiguousarray(image.data.transpose(2, 0, 1)))


def tensor_to_image(t: torch.Tensor) -> ImageTensor:
    """(C, H, W) tensor -> clamped image."""
    arr = t.detach().clamp(0, 1).cpu().numpy().transpose(1, 2, 0)
    return ImageTensor(arr.astype(np.float32))


def mask_to_tensor(mask: BinaryMask) -> torch.Tensor:
    return torch.from_numpy(mask.data.astype(np.float32))[None]


def tensor_to_mask(t: torch.Tensor, threshold: float = 0.5) -> BinaryMask:
    arr = (t.detach().cpu().numpy() >= threshold).astype(np.uint8)
    return BinaryMask(arr.squeeze())


def parsing_to_onehot(parsing: SegmentationMap) -> torch.Tensor:
    """(L, H, W) one-hot float tensor."""
    num = len(parsing.label_vocabulary)
    return torch.nn.functional.one_hot(labels_to_tensor(parsing), num).permute(2, 0, 1).float()


def labels_to_tensor(parsing: SegmentationMap) -> torch.Tensor:
    # label arrays are frozen read-only; torch needs a writable copy
    return torch.from_numpy(np.array(parsing.labels, copy=True))


def pose_to_tensor(pose: PoseHeatmap) -> torch.Tensor:
    return torch.from_numpy(np.array(pose.data, copy=True))


def onehot_from_labels(labels: torch.Tensor, num_classes: int) -> torch.Tensor:
    """(..., H, W) int labels -> (..., L, H, W) float one-hot."""
    oh = torch.nn.functional.one_hot(labels.long(), num_classes)
    return oh.movedim(-1, -3).float()
