"""UV-correspondence texture transfer (stage 2).

A contour network warps the flat garment mask onto the body; a mask-only
correspondence network then predicts, for every texel of a KxL grid laid over
the warped silhouette, which garment-image coordinate supplies its color.
Texture reaches the output exclusively through bilinear sampling at those
coordinates, so the predictor never sees texture during inference - only
silhouette shape.
"""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import torch

from .core import BinaryMask, ImageTensor, PoseHeatmap, SegmentationMap
from .networks import CorrespondenceNet, UNetSmall
from .torch_utils import (
    image_to_tensor,
    mask_to_tensor,
    parsing_to_onehot,
    pose_to_tensor,
    tensor_to_image,
    tensor_to_mask,
)

_BBOX_EPS = 1e-6


@dataclass(frozen=True)
class UVCorrespondence:
    """Per-texel garment coordinates over a grid spanning `bbox` in the target.

    coords: (K, L, 2) float64 (y, x) garment-pixel coordinates.
    validity: (K, L) uint8; invalid texels carry no coordinate contract.
    bbox: (y0, x0, y1, x1) inclusive extent the grid spans in the target image.
    target_shape: (H, W) of the target image.
    footprint: optional mask of target pixels the texture rasterizes onto.
    """

    coords: np.ndarray
    validity: np.ndarray
    bbox: Tuple[float, float, float, float]
    target_shape: Tuple[int, int]
    footprint: Optional[BinaryMask] = None

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        validity = np.asarray(self.validity, dtype=np.uint8)
        if coords.ndim != 3 or coords.shape[2] != 2:
            raise ValueError(f"coords must be KxLx2, got {coords.shape}")
        if validity.shape != coords.shape[:2]:
            raise ValueError("validity shape must match the texel grid")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "validity", validity)
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))
        object.__setattr__(self, "target_shape", tuple(int(v) for v in self.target_shape))

    @property
    def grid_shape(self) -> Tuple[int, int]:
        return self.coords.shape[:2]

    def texel_positions(self) -> np.ndarray:
        """(K, L, 2) target-image (y, x) position of each texel."""
        k, l = self.grid_shape
        y0, x0, y1, x1 = self.bbox
        ys = np.linspace(y0, y1, k)
        xs = np.linspace(x0, x1, l)
        return np.stack(np.meshgrid(ys, xs, indexing="ij"), axis=-1)

    def to_bytes(self) -> bytes:
        header = {
            "format": "uvcorr-v1",
            "k": self.grid_shape[0],
            "l": self.grid_shape[1],
            "height": self.target_shape[0],
            "width": self.target_shape[1],
            "bbox": list(self.bbox),
            "coords_dtype": "<f8",
        }
        blob = json.dumps(header).encode()
        out = io.BytesIO()
        out.write(len(blob).to_bytes(4, "little"))
        out.write(blob)
        out.write(self.coords.astype("<f8").tobytes())
        out.write(self.validity.astype(np.uint8).tobytes())
        return out.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "UVCorrespondence":
        n = int.from_bytes(data[:4], "little")
        header = json.loads(data[4 : 4 + n])
        if header.get("format") != "uvcorr-v1":
            raise ValueError("unrecognized correspondence blob")
        k, l = header["k"], header["l"]
        off = 4 + n
        coords = np.frombuffer(data[off : off + k * l * 2 * 8], dtype="<f8").reshape(k, l, 2)
        off += k * l * 2 * 8
        validity = np.frombuffer(data[off : off + k * l], dtype=np.uint8).reshape(k, l)
        return cls(
            coords=coords.copy(),
            validity=validity.copy(),
            bbox=tuple(header["bbox"]),
            target_shape=(header["height"], header["width"]),
        )


def identity_correspondence(
    height: int, width: int, grid: Tuple[int, int] = (32, 32), footprint: Optional[BinaryMask] = None
) -> UVCorrespondence:
    """Texels map to their own image position: sampling reproduces the input."""
    k, l = grid
    bbox = (0.0, 0.0, float(height - 1), float(width - 1))
    ys = np.linspace(0.0, height - 1.0, k)
    xs = np.linspace(0.0, width - 1.0, l)
    coords = np.stack(np.meshgrid(ys, xs, indexing="ij"), axis=-1)
    return UVCorrespondence(
        coords=coords,
        validity=np.ones((k, l), dtype=np.uint8),
        bbox=bbox,
        target_shape=(height, width),
        footprint=footprint,
    )


def mask_bbox(mask: np.ndarray) -> Optional[Tuple[float, float, float, float]]:
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return None
    return (float(ys.min()), float(xs.min()), float(ys.max()), float(xs.max()))


def bilinear_sample_torch(image: torch.Tensor, coords_yx: torch.Tensor) -> torch.Tensor:
    """Sample (C, H, W) at float (..., 2) (y, x) coords, border-clamped.

    Differentiable w.r.t. both image and coordinates.
    """
    c, h, w = image.shape
    y = coords_yx[..., 0].clamp(0.0, h - 1.0)
    x = coords_yx[..., 1].clamp(0.0, w - 1.0)
    y0 = y.detach().floor().clamp(0, h - 2).long()
    x0 = x.detach().floor().clamp(0, w - 2).long()
    wy = (y - y0).unsqueeze(-1)
    wx = (x - x0).unsqueeze(-1)
    flat = image.reshape(c, -1).t()  # (H*W, C)
    idx00 = (y0 * w + x0).reshape(-1)
    idx01 = (y0 * w + x0 + 1).reshape(-1)
    idx10 = ((y0 + 1) * w + x0).reshape(-1)
    idx11 = ((y0 + 1) * w + x0 + 1).reshape(-1)
    shape = coords_yx.shape[:-1] + (c,)
    c00 = flat[idx00].reshape(shape)
    c01 = flat[idx01].reshape(shape)
    c10 = flat[idx10].reshape(shape)
    c11 = flat[idx11].reshape(shape)
    top = c00 * (1 - wx) + c01 * wx
    bot = c10 * (1 - wx) + c11 * wx
    return top * (1 - wy) + bot * wy


def interp_coord_field(
    coords: torch.Tensor,
    bbox: Tuple[float, float, float, float],
    pixel_yx: torch.Tensor,
) -> torch.Tensor:
    """Bilinearly interpolate the (K, L, 2) texel coordinate field at pixels.

    pixel_yx: (N, 2) target-image positions; returns (N, 2) garment coords.
    Differentiable w.r.t. `coords`.
    """
    k, l = coords.shape[:2]
    y0, x0, y1, x1 = bbox
    gy = (pixel_yx[:, 0] - y0) / max(y1 - y0, _BBOX_EPS) * (k - 1)
    gx = (pixel_yx[:, 1] - x0) / max(x1 - x0, _BBOX_EPS) * (l - 1)
    grid_pts = torch.stack([gy, gx], dim=-1)
    field = coords.permute(2, 0, 1)  # (2, K, L) as a 2-channel image
    return bilinear_sample_torch(field, grid_pts)


def sample_texture_torch(
    coords: torch.Tensor,
    bbox: Tuple[float, float, float, float],
    footprint: torch.Tensor,
    garment: torch.Tensor,
    garment_mask: Optional[torch.Tensor],
    out_shape: Tuple[int, int],
) -> torch.Tensor:
    """Differentiable rasterization of the warped garment texture.

    coords: (K, L, 2) garment coords; footprint: (H, W) {0,1}; garment:
    (C, H, W); garment_mask: (H, W) or None. Returns (C, H, W) with zeros
    outside the footprint.
    """
    h, w = out_shape
    c = garment.shape[0]
    out = garment.new_zeros((h, w, c))
    idx = footprint.nonzero(as_tuple=False)
    if idx.numel() == 0:
        return out.permute(2, 0, 1)
    pixel_yx = idx.to(garment.dtype)
    g_coords = interp_coord_field(coords, bbox, pixel_yx)
    samples = bilinear_sample_torch(garment, g_coords)
    if garment_mask is not None:
        mvals = bilinear_sample_torch(garment_mask[None].to(garment.dtype), g_coords)
        samples = samples * mvals
    out[idx[:, 0], idx[:, 1]] = samples
    return out.permute(2, 0, 1)


def sample_texture(
    corr: UVCorrespondence,
    garment: ImageTensor,
    garment_mask: BinaryMask,
    target_shape: Optional[Tuple[int, int]] = None,
) -> ImageTensor:
    """Pull garment colors through the correspondence onto the target image.

    Each texel's color is the bilinear sample of `garment` at its predicted
    coordinate (masked by `garment_mask`); colors rasterize back onto the
    footprint, and everything outside is 0. A correspondence with no valid
    texel yields an all-zero image plus a warning.
    """
    if target_shape is None:
        target_shape = corr.target_shape
    h, w = target_shape
    if corr.validity.sum() == 0:
        warnings.warn("correspondence has no valid texel; returning a zero image")
        return ImageTensor(np.zeros((h, w, garment.channels), dtype=np.float32))
    if corr.footprint is not None:
        fp = torch.from_numpy(corr.footprint.data.astype(np.float64))
    else:
        fp = torch.ones((h, w), dtype=torch.float64)
    g = torch.from_numpy(garment.data.astype(np.float64).transpose(2, 0, 1))
    m = torch.from_numpy(garment_mask.data.astype(np.float64))
    coords = torch.from_numpy(corr.coords)
    out = sample_texture_torch(coords, corr.bbox, fp, g, m, (h, w))
    return ImageTensor(out.numpy().transpose(1, 2, 0).clip(0.0, 1.0).astype(np.float32))


class ContourWarper(UNetSmall):
    """GAN generator: (garment mask, pose, parsing) -> soft warped mask."""

    def __init__(self, num_labels: int, num_keypoints: int, base: int = 16):
        super().__init__(in_ch=1 + num_keypoints + num_labels, out_ch=1, base=base, depth=3)

    def forward(self, x):
        return torch.sigmoid(super().forward(x))


class TryonSynthesizer(UNetSmall):
    """GAN generator: (pose, parsing, warped garment, identity image) -> try-on."""

    def __init__(self, num_labels: int, num_keypoints: int, base: int = 24):
        super().__init__(in_ch=num_keypoints + num_labels + 3 + 3, out_ch=3, base=base, depth=3)

    def forward(self, x):
        return torch.sigmoid(super().forward(x))


def warp_contour(
    warper: ContourWarper,
    garment_mask: BinaryMask,
    pose: PoseHeatmap,
    parsing: SegmentationMap,
) -> BinaryMask:
    """Predict the on-body garment silhouette, binarized at 0.5."""
    if garment_mask.shape != parsing.shape or pose.data.shape[1:] != garment_mask.shape:
        raise ValueError("garment mask, pose and parsing shapes must agree")
    x = torch.cat(
        [mask_to_tensor(garment_mask), pose_to_tensor(pose), parsing_to_onehot(parsing)], dim=0
    )
    was_training = warper.training
    warper.eval()
    with torch.no_grad():
        soft = warper(x[None])[0, 0]
    warper.train(was_training)
    return tensor_to_mask(soft)


def predict_correspondence(net: CorrespondenceNet, warped_mask: BinaryMask) -> UVCorrespondence:
    """Map a warped silhouette to its UV->garment coordinate grid.

    The texel grid spans the mask's bounding box; texels landing outside the
    mask are flagged invalid. An empty mask produces an all-invalid grid.
    """
    h, w = warped_mask.shape
    k = net.grid
    bbox = mask_bbox(warped_mask.data)
    if bbox is None:
        return UVCorrespondence(
            coords=np.zeros((k, k, 2)),
            validity=np.zeros((k, k), dtype=np.uint8),
            bbox=(0.0, 0.0, 0.0, 0.0),
            target_shape=(h, w),
            footprint=warped_mask,
        )
    was_training = net.training
    net.eval()
    with torch.no_grad():
        coords = net(mask_to_tensor(warped_mask)[None])[0]
    net.train(was_training)
    coords = coords.numpy().transpose(1, 2, 0).astype(np.float64)
    y0, x0, y1, x1 = bbox
    corr = UVCorrespondence(
        coords=coords,
        validity=np.ones((k, k), dtype=np.uint8),
        bbox=(y0, x0, y1, x1),
        target_shape=(h, w),
        footprint=warped_mask,
    )
    pos = corr.texel_positions()
    iy = np.clip(np.round(pos[..., 0]).astype(int), 0, h - 1)
    ix = np.clip(np.round(pos[..., 1]).astype(int), 0, w - 1)
    validity = warped_mask.data[iy, ix].astype(np.uint8)
    return UVCorrespondence(
        coords=coords,
        validity=validity,
        bbox=(y0, x0, y1, x1),
        target_shape=(h, w),
        footprint=warped_mask,
    )


def synthesize_tryon(
    synth: TryonSynthesizer,
    pose: PoseHeatmap,
    parsing: SegmentationMap,
    warped_garment: ImageTensor,
    identity_image: ImageTensor,
) -> ImageTensor:
    """Compose the final try-on image from stage-1/2 outputs."""
    shapes = {
        tuple(pose.data.shape[1:]),
        parsing.shape,
        warped_garment.data.shape[:2],
        identity_image.data.shape[:2],
    }
    if len(shapes) != 1:
        raise ValueError("synthesizer inputs must share height/width")
    x = torch.cat(
        [
            pose_to_tensor(pose),
            parsing_to_onehot(parsing),
            image_to_tensor(warped_garment),
            image_to_tensor(identity_image),
        ],
        dim=0,
    )
    was_training = synth.training
    synth.eval()
    with torch.no_grad():
        out = synth(x[None])[0]
    synth.train(was_training)
    return tensor_to_image(out)
