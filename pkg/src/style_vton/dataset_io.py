"""On-disk dataset layout.

    <root>/pairs/<id>/person.png        8-bit RGB
                      garment.png       8-bit RGB
                      garment_mask.png  8-bit grayscale, 0/255
                      parsing.png       palette-indexed, pixel value == label id
                      pose.json         array of [x, y] or null per keypoint

The parsing palette below maps label ids to display colors; the label id is
the palette index, so parsing maps round-trip exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from PIL import Image

from .core import (
    BinaryMask,
    DatasetPair,
    ImageTensor,
    LABELS,
    PoseHeatmap,
    SegmentationMap,
    default_sigma,
    make_gaussian_heatmap,
)

PARSING_PALETTE = {
    "background": (0, 0, 0),
    "face": (255, 224, 189),
    "hair": (94, 60, 30),
    "hat": (200, 30, 30),
    "torso-garment": (30, 100, 200),
    "arms": (255, 180, 120),
    "legs": (60, 60, 130),
    "indistinct": (128, 128, 128),
}


def image_to_png_bytes(image: ImageTensor) -> bytes:
    import io

    arr = np.round(image.data * 255.0).astype(np.uint8)
    if arr.shape[2] == 1:
        arr = arr[:, :, 0]
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def png_bytes_to_image(data: bytes) -> ImageTensor:
    import io

    img = Image.open(io.BytesIO(data))
    arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return ImageTensor(arr)


def save_image(path: Path, image: ImageTensor) -> None:
    path.write_bytes(image_to_png_bytes(image))


def load_image(path: Path) -> ImageTensor:
    return png_bytes_to_image(path.read_bytes())


def save_mask(path: Path, mask: BinaryMask) -> None:
    Image.fromarray(mask.data * 255).save(path)


def load_mask(path: Path) -> BinaryMask:
    arr = np.asarray(Image.open(path).convert("L"))
    return BinaryMask((arr >= 128).astype(np.uint8))


def save_parsing(path: Path, parsing: SegmentationMap) -> None:
    img = Image.fromarray(parsing.labels.astype(np.uint8), mode="P")
    palette = []
    for name in parsing.label_vocabulary:
        palette.extend(PARSING_PALETTE.get(name, (255, 0, 255)))
    img.putpalette(palette)
    img.save(path)


def load_parsing(path: Path) -> SegmentationMap:
    img = Image.open(path)
    if img.mode != "P":
        raise ValueError(f"{path} is not a palette-indexed parsing map")
    return SegmentationMap(np.asarray(img, dtype=np.int64))


def parsing_from_png_bytes(data: bytes) -> SegmentationMap:
    """Decode an uploaded palette-indexed parsing map (pixel value = label id)."""
    import io

    img = Image.open(io.BytesIO(data))
    if img.mode != "P":
        raise ValueError("parsing upload must be a palette-indexed png (pixel value = label id)")
    labels = np.asarray(img, dtype=np.int64)
    if labels.max() >= len(LABELS):
        raise ValueError(f"parsing upload uses label ids above {len(LABELS) - 1}")
    return SegmentationMap(labels)


def pose_from_keypoints(raw: Sequence, height: int, width: int) -> PoseHeatmap:
    """Build heatmaps from an uploaded [x, y] (or null) keypoint list."""
    keypoints = [None if p is None else (float(p[0]), float(p[1])) for p in raw]
    return make_gaussian_heatmap(keypoints, height, width, default_sigma(height))


def save_pose(path: Path, pose: PoseHeatmap) -> None:
    points: List[Optional[List[float]]] = []
    for k in range(pose.keypoints):
        channel = pose.data[k]
        if channel.max() <= 0:
            points.append(None)
            continue
        y, x = np.unravel_index(int(channel.argmax()), channel.shape)
        points.append([float(x), float(y)])
    path.write_text(json.dumps(points))


def load_pose(path: Path, height: int, width: int, sigma: Optional[float] = None) -> PoseHeatmap:
    raw = json.loads(path.read_text())
    keypoints = [None if p is None else (float(p[0]), float(p[1])) for p in raw]
    if sigma is None:
        sigma = default_sigma(height)
    return make_gaussian_heatmap(keypoints, height, width, sigma)


def save_pair(pair_dir: Path, pair: DatasetPair) -> None:
    pair_dir.mkdir(parents=True, exist_ok=True)
    save_image(pair_dir / "person.png", pair.person)
    save_image(pair_dir / "garment.png", pair.garment)
    save_mask(pair_dir / "garment_mask.png", pair.garment_mask)
    save_parsing(pair_dir / "parsing.png", pair.parsing_gt)
    save_pose(pair_dir / "pose.json", pair.pose)


def load_pair(pair_dir: Path) -> DatasetPair:
    person = load_image(pair_dir / "person.png")
    garment = load_image(pair_dir / "garment.png")
    mask = load_mask(pair_dir / "garment_mask.png")
    parsing = load_parsing(pair_dir / "parsing.png")
    pose = load_pose(pair_dir / "pose.json", person.height, person.width)
    # pairs on disk are self-reconstruction pairs: the stored person is the target
    return DatasetPair(
        person=person,
        garment=garment,
        garment_mask=mask,
        parsing_gt=parsing,
        pose=pose,
        tryon_gt=person,
        pair_id=Path(pair_dir).name,
    )


def save_dataset(root: Path, pairs: Sequence[DatasetPair]) -> None:
    for i, pair in enumerate(pairs):
        save_pair(Path(root) / "pairs" / (pair.pair_id or f"{i:04d}"), pair)


def load_dataset(root: Path) -> List[DatasetPair]:
    pairs_dir = Path(root) / "pairs"
    if not pairs_dir.is_dir():
        raise FileNotFoundError(f"no pairs directory under {root}")
    out = []
    for sub in sorted(pairs_dir.iterdir()):
        if sub.is_dir():
            out.append(load_pair(sub))
    return out


def list_pair_dirs(root: Path) -> List[Path]:
    pairs_dir = Path(root) / "pairs"
    if not pairs_dir.is_dir():
        return []
    return sorted(p for p in pairs_dir.iterdir() if p.is_dir())


__all__ = [name for name in dir() if not name.startswith("_")]
