"""Procedural synthetic try-on pairs.

Each pair is a stylized upper-body "person" (head disc, torso rectangle, arm
bars, leg bars) whose torso carries a flat-lay garment texture warped through
a known affine map. The generator keeps that warp around as an oracle so
texture-transfer code can be tested against ground truth it did not compute.

All randomness comes from one ``numpy`` Generator seeded per pair, so pairs
are bit-identical across runs for the same seed.
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np

from .core import (
    AffineWarp,
    BinaryMask,
    DatasetPair,
    ImageTensor,
    LABEL_IDS,
    PoseHeatmap,
    SegmentationMap,
    default_sigma,
    make_gaussian_heatmap,
)

TEXTURE_KINDS = ("solid", "hstripes", "vstripes", "checker")


def _disc(height: int, width: int, cy: float, cx: float, r: float) -> np.ndarray:
    ys = np.arange(height)[:, None]
    xs = np.arange(width)[None, :]
    return (ys - cy) ** 2 + (xs - cx) ** 2 <= r**2


def _rect(height: int, width: int, y0: int, y1: int, x0: int, x1: int) -> np.ndarray:
    m = np.zeros((height, width), dtype=bool)
    y0, y1 = max(0, y0), min(height, y1)
    x0, x1 = max(0, x0), min(width, x1)
    if y1 > y0 and x1 > x0:
        m[y0:y1, x0:x1] = True
    return m


def _segment(height: int, width: int, p0, p1, thickness: float) -> np.ndarray:
    """Pixels within `thickness` of the segment p0-p1 (points are (y, x))."""
    ys = np.arange(height)[:, None].astype(np.float64)
    xs = np.arange(width)[None, :].astype(np.float64)
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    d = p1 - p0
    denom = float(d @ d)
    if denom == 0:
        dist2 = (ys - p0[0]) ** 2 + (xs - p0[1]) ** 2
        return dist2 <= thickness**2
    t = ((ys - p0[0]) * d[0] + (xs - p0[1]) * d[1]) / denom
    t = np.clip(t, 0.0, 1.0)
    py = p0[0] + t * d[0]
    px = p0[1] + t * d[1]
    dist2 = (ys - py) ** 2 + (xs - px) ** 2
    return dist2 <= thickness**2


def bilinear_sample_np(image: np.ndarray, coords_yx: np.ndarray) -> np.ndarray:
    """Sample an HxWxC array at float (y, x) coords with border clamping."""
    h, w = image.shape[:2]
    y = np.clip(coords_yx[..., 0], 0.0, h - 1.0)
    x = np.clip(coords_yx[..., 1], 0.0, w - 1.0)
    y0 = np.floor(y).astype(np.int64)
    x0 = np.floor(x).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (y - y0)[..., None]
    wx = (x - x0)[..., None]
    c00 = image[y0, x0]
    c01 = image[y0, x1]
    c10 = image[y1, x0]
    c11 = image[y1, x1]
    top = c00 * (1 - wx) + c01 * wx
    bot = c10 * (1 - wx) + c11 * wx
    return top * (1 - wy) + bot * wy


def _random_color(rng: np.random.Generator, lo=0.1, hi=0.9) -> np.ndarray:
    return rng.uniform(lo, hi, size=3)


def _garment_texture(
    rng: np.random.Generator, height: int, width: int, box: Tuple[int, int, int, int]
) -> Tuple[np.ndarray, str]:
    """Paint a procedural texture inside `box` on a black canvas."""
    kind = str(rng.choice(TEXTURE_KINDS))
    c0 = _random_color(rng)
    c1 = _random_color(rng)
    # keep the two pattern colors clearly apart
    for _ in range(16):
        if np.abs(c0 - c1).sum() >= 0.8:
            break
        c1 = _random_color(rng)
    y0, y1, x0, x1 = box
    period = max(3, int(round(width * 0.14 * rng.choice((1.0, 1.25, 1.5)))))
    ys = np.arange(height)[:, None]
    xs = np.arange(width)[None, :]
    if kind == "solid":
        pattern = np.zeros((height, width))
    elif kind == "hstripes":
        pattern = ((ys - y0) // period) % 2 + np.zeros_like(xs)
    elif kind == "vstripes":
        pattern = ((xs - x0) // period) % 2 + np.zeros_like(ys)
    else:  # checker
        pattern = (((ys - y0) // period) + ((xs - x0) // period)) % 2
    base = c0[None, None, :] * (1 - pattern[..., None]) + c1[None, None, :] * pattern[..., None]
    # smooth two-axis shading ramp: gives the texture a gradient everywhere,
    # which keeps correspondence learning well-conditioned even for solids
    u = np.clip((ys - y0) / max(1, y1 - 1 - y0), 0, 1)
    v = np.clip((xs - x0) / max(1, x1 - 1 - x0), 0, 1)
    shade = 0.70 + 0.30 * (0.5 * (u + v))
    canvas = np.zeros((height, width, 3), dtype=np.float64)
    inside = _rect(height, width, y0, y1, x0, x1)
    tex = np.clip(base * shade[..., None], 0.02, 0.98)
    canvas[inside] = tex[inside]
    return canvas, kind


def generate_synthetic_pair(seed: int, height: int, width: int) -> DatasetPair:
    """Deterministically build one person/garment pair with aligned targets.

    The returned pair is self-reconstructing: the person already wears the
    garment's texture (warped onto the torso), so ``tryon_gt == person``.
    """
    if height < 16 or width < 16:
        raise ValueError("height and width must be at least 16")
    rng = np.random.default_rng(seed)
    H, W = int(height), int(width)

    labels = np.zeros((H, W), dtype=np.int64)  # background

    # torso rectangle
    cx = W * (0.5 + rng.uniform(-0.04, 0.04))
    t_top = int(round(H * (0.36 + rng.uniform(-0.03, 0.03))))
    t_bot = int(round(H * (0.64 + rng.uniform(-0.02, 0.04))))
    t_halfw = W * (0.16 + rng.uniform(0.0, 0.05))
    t_l = int(round(cx - t_halfw))
    t_r = int(round(cx + t_halfw))
    torso_rect = _rect(H, W, t_top, t_bot, t_l, t_r)

    # head disc split into hair (upper cap) and face
    head_r = H * (0.095 + rng.uniform(0.0, 0.02))
    head_cy = t_top - head_r - H * 0.02
    head = _disc(H, W, head_cy, cx, head_r)
    face = _disc(H, W, head_cy + 0.30 * head_r, cx, 0.72 * head_r)
    hair = head & ~face

    # arms: shoulder -> elbow -> wrist bars, drawn over the torso
    thickness = max(1.0, H * 0.028)
    sh_y = t_top + max(1, int(round(H * 0.01)))
    sh_l = (sh_y, cx - t_halfw * 0.92)
    sh_r = (sh_y, cx + t_halfw * 0.92)
    arm_masks = []
    elbows, wrists = [], []
    for side, sh in ((-1, sh_l), (+1, sh_r)):
        el = (
            sh[0] + H * (0.12 + rng.uniform(0.0, 0.04)),
            sh[1] + side * W * (0.04 + rng.uniform(0.0, 0.07)),
        )
        wr = (
            el[0] + H * (0.10 + rng.uniform(0.0, 0.05)),
            el[1] + side * W * rng.uniform(-0.03, 0.07),
        )
        el = (min(el[0], H - 2.0), min(max(el[1], 1.0), W - 2.0))
        wr = (min(wr[0], H - 2.0), min(max(wr[1], 1.0), W - 2.0))
        arm_masks.append(
            _segment(H, W, sh, el, thickness) | _segment(H, W, el, wr, thickness)
        )
        elbows.append(el)
        wrists.append(wr)
    arms = arm_masks[0] | arm_masks[1]

    # legs: two bars under the torso
    leg_top = t_bot
    leg_bot = int(round(H * 0.93))
    leg_w = max(1, int(round(t_halfw * 0.55)))
    gap = max(1, int(round(t_halfw * 0.25)))
    legs = _rect(H, W, leg_top, leg_bot, int(round(cx)) - gap - leg_w, int(round(cx)) - gap) | _rect(
        H, W, leg_top, leg_bot, int(round(cx)) + gap, int(round(cx)) + gap + leg_w
    )

    # optional hat
    has_hat = rng.uniform() < 0.3
    hat = np.zeros((H, W), dtype=bool)
    if has_hat:
        hat_h = max(1, int(round(H * 0.05)))
        hat_top = int(round(head_cy - head_r)) - hat_h
        hat = _rect(
            H, W, hat_top, hat_top + hat_h + 1, int(round(cx - head_r)), int(round(cx + head_r)) + 1
        )

    # paint labels back-to-front
    labels[legs] = LABEL_IDS["legs"]
    labels[torso_rect] = LABEL_IDS["torso-garment"]
    labels[arms] = LABEL_IDS["arms"]
    labels[hair] = LABEL_IDS["hair"]
    labels[face] = LABEL_IDS["face"]
    labels[hat] = LABEL_IDS["hat"]

    # flat-lay garment centered on its own canvas; the extent is fixed, like
    # a standardized product shot, so the silhouette-only correspondence task
    # stays well-posed (a mask alone can't reveal a per-pair source extent)
    g_halfh = H * 0.20
    g_halfw = W * 0.26
    gy0 = int(round(H * 0.5 - g_halfh))
    gy1 = int(round(H * 0.5 + g_halfh))
    gx0 = int(round(W * 0.5 - g_halfw))
    gx1 = int(round(W * 0.5 + g_halfw))
    garment_canvas, kind = _garment_texture(rng, H, W, (gy0, gy1, gx0, gx1))
    garment_mask = _rect(H, W, gy0, gy1, gx0, gx1)

    # ground-truth warp: torso rectangle -> garment rectangle (index-to-index)
    sy = (gy1 - 1 - gy0) / max(1, t_bot - 1 - t_top)
    sx = (gx1 - 1 - gx0) / max(1, t_r - 1 - t_l)
    warp = AffineWarp(
        matrix=np.array([[sy, 0.0], [0.0, sx]]),
        offset=np.array([gy0 - t_top * sy, gx0 - t_l * sx]),
    )

    # person image
    person = np.empty((H, W, 3), dtype=np.float64)
    person[:] = rng.uniform(0.80, 0.92, size=3)[None, None, :]
    skin = np.clip(np.array([0.87, 0.70, 0.58]) + rng.uniform(-0.08, 0.06, size=3), 0, 1)
    hair_color = _random_color(rng, 0.05, 0.45)
    leg_color = _random_color(rng, 0.1, 0.6)
    hat_color = _random_color(rng, 0.2, 0.9)
    person[legs] = leg_color
    person[torso_rect] = 0.5  # overwritten below through the warp
    person[arms] = skin
    person[hair] = hair_color
    person[face] = skin
    person[hat] = hat_color

    torso_vis = labels == LABEL_IDS["torso-garment"]
    ys, xs = np.nonzero(torso_vis)
    coords = np.stack([ys, xs], axis=-1).astype(np.float64)
    person[torso_vis] = bilinear_sample_np(garment_canvas, warp.apply(coords))
    person = np.clip(person, 0.0, 1.0)

    # pose keypoints, rounded so heatmap peaks hit exactly 1.0
    def _xy(p):  # (y, x) -> rounded (x, y)
        return (float(round(p[1])), float(round(p[0])))

    keypoints = [
        _xy((head_cy, cx)),
        _xy((t_top, cx)),
        _xy(sh_l),
        _xy(sh_r),
        _xy(elbows[0]),
        _xy(elbows[1]),
        _xy(wrists[0]),
        _xy(wrists[1]),
    ]
    pose = make_gaussian_heatmap(keypoints, H, W, sigma=default_sigma(H))

    person_img = ImageTensor(person.astype(np.float32))
    return DatasetPair(
        person=person_img,
        garment=ImageTensor(garment_canvas.astype(np.float32)),
        garment_mask=BinaryMask(garment_mask.astype(np.uint8)),
        parsing_gt=SegmentationMap(labels),
        pose=pose,
        tryon_gt=person_img,
        pair_id=f"{int(seed):08d}",
        garment_warp=warp,
        texture_kind=kind,
        seed=int(seed),
    )


def generate_synthetic_dataset(
    seeds: Sequence[int], height: int, width: int
) -> List[DatasetPair]:
    return [generate_synthetic_pair(s, height, width) for s in seeds]
