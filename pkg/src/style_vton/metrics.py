"""Evaluation metrics: windowed SSIM and an Inception-style score.

Both are computed in float64 with explicitly pinned constants so results are
stable across runs and platforms. The label distribution for the score comes
from a small texture-kind classifier trained on the synthetic garments; its
weights hash into reports as `classifier_id` so numbers stay comparable.
"""

from __future__ import annotations

import hashlib
import io
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import xlogy

from .core import ImageTensor
from .data_synth import TEXTURE_KINDS, generate_synthetic_pair

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float64)

ArrayLike = Union[np.ndarray, ImageTensor]


def _as_gray(image: ArrayLike) -> np.ndarray:
    if isinstance(image, ImageTensor):
        image = image.data
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 3:
        if arr.shape[2] == 1:
            arr = arr[..., 0]
        elif arr.shape[2] == 3:
            arr = arr @ LUMA_WEIGHTS
        else:
            raise ValueError(f"expected 1 or 3 channels, got {arr.shape[2]}")
    elif arr.ndim != 2:
        raise ValueError("image must be HxW or HxWxC")
    if not np.isfinite(arr).all():
        raise ValueError("image contains non-finite values")
    return arr


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size, dtype=np.float64) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def _windowed_mean(arr: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    size = kernel.shape[0]
    windows = sliding_window_view(arr, (size, size))
    return np.einsum("ijab,ab->ij", windows, kernel)


def ssim(a: ArrayLike, b: ArrayLike, data_range: float = 1.0) -> float:
    """Mean structural similarity over valid 11x11 Gaussian windows.

    Inputs are converted to luma; both must share the same shape and be at
    least the window size on each side.
    """
    x = _as_gray(a)
    y = _as_gray(b)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    if min(x.shape) < SSIM_WINDOW:
        raise ValueError(f"image sides must be >= {SSIM_WINDOW}")
    if data_range <= 0:
        raise ValueError("data_range must be positive")

    kernel = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    mu_x = _windowed_mean(x, kernel)
    mu_y = _windowed_mean(y, kernel)
    xx = _windowed_mean(x * x, kernel)
    yy = _windowed_mean(y * y, kernel)
    xy = _windowed_mean(x * y, kernel)

    var_x = xx - mu_x * mu_x
    var_y = yy - mu_y * mu_y
    cov = xy - mu_x * mu_y

    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def inception_score(probs: np.ndarray, splits: int = 10) -> Tuple[float, float]:
    """exp(mean KL(p(y|x) || p(y))) over contiguous splits.

    Returns (mean, population std) across splits. Zero probabilities are
    handled through xlogy, so one-hot inputs are fine.
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 2:
        raise ValueError("probs must be (num_samples, num_classes)")
    if p.shape[0] < splits:
        raise ValueError("need at least one sample per split")
    if (p < 0).any() or not np.isfinite(p).all():
        raise ValueError("probabilities must be finite and non-negative")
    row_sums = p.sum(axis=1)
    if not np.allclose(row_sums, 1.0, atol=1e-6):
        raise ValueError("probability rows must sum to 1")

    n = p.shape[0]
    scores = []
    for k in range(splits):
        part = p[k * n // splits : (k + 1) * n // splits]
        marginal = part.mean(axis=0)
        kl = xlogy(part, part) - xlogy(part, marginal[None, :])
        scores.append(np.exp(kl.sum(axis=1).mean()))
    scores = np.asarray(scores)
    return float(scores.mean()), float(scores.std())


class TextureKindClassifier(nn.Module):
    """Tiny convnet labelling a garment crop with its texture kind."""

    def __init__(self, num_classes: int = len(TEXTURE_KINDS), base: int = 12):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(3, base, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(base, base * 2, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(base * 2, base * 2, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.AdaptiveAvgPool2d(2),
        )
        self.fc = nn.Linear(base * 2 * 4, num_classes)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        h = self.net(images).flatten(1)
        return self.fc(h)


def classifier_id(net: TextureKindClassifier) -> str:
    """Stable hex id of the classifier weights."""
    buf = io.BytesIO()
    for key in sorted(net.state_dict()):
        buf.write(key.encode("utf-8"))
        buf.write(net.state_dict()[key].detach().cpu().numpy().tobytes())
    return hashlib.sha256(buf.getvalue()).hexdigest()[:16]


def train_texture_classifier(
    seed: int = 7,
    steps: int = 120,
    batch: int = 16,
    size: Tuple[int, int] = (64, 48),
    lr: float = 1e-3,
) -> TextureKindClassifier:
    """Fit the texture-kind classifier on synthetic garments; deterministic."""
    torch.manual_seed(seed)
    net = TextureKindClassifier()
    opt = torch.optim.Adam(net.parameters(), lr=lr)
    rng = np.random.default_rng(seed)
    h, w = size
    kind_to_idx = {k: i for i, k in enumerate(TEXTURE_KINDS)}
    net.train()
    for _ in range(steps):
        imgs, labels = [], []
        for _ in range(batch):
            pair = generate_synthetic_pair(int(rng.integers(0, 2**31 - 1)), h, w)
            imgs.append(torch.from_numpy(pair.garment.data.transpose(2, 0, 1).copy()))
            labels.append(kind_to_idx[pair.texture_kind])
        x = torch.stack(imgs).float()
        y = torch.tensor(labels)
        opt.zero_grad()
        loss = F.cross_entropy(net(x), y)
        loss.backward()
        opt.step()
    net.eval()
    return net


def classify_texture_probs(
    net: TextureKindClassifier, images: Sequence[np.ndarray]
) -> np.ndarray:
    """Softmax texture-kind probabilities, one row per image."""
    net.eval()
    with torch.no_grad():
        x = torch.stack(
            [torch.from_numpy(np.array(im, dtype=np.float32).transpose(2, 0, 1)) for im in images]
        )
        return F.softmax(net(x), dim=1).double().numpy()


def ab_aggregate(votes: Sequence[Tuple[str, str, str, str]]) -> list:
    """Aggregate A/B study votes into per-comparison preference percentages.

    Each vote is (pair_id, method_a, method_b, vote); vote must name one of
    the row's two methods, anything else is rejected. Comparisons that show
    both orientations of the same method pair are merged. Percentages are
    rounded to two decimals and sum to 100 per row.
    """
    counts: Dict[Tuple[str, str], Dict[str, int]] = {}
    for pair_id, method_a, method_b, vote in votes:
        if method_a == method_b:
            raise ValueError(f"pair {pair_id!r}: methods must differ, got {method_a!r} twice")
        if vote not in (method_a, method_b):
            raise ValueError(
                f"pair {pair_id!r}: vote {vote!r} is not one of the compared methods "
                f"({method_a!r}, {method_b!r})"
            )
        key = (method_a, method_b) if method_a <= method_b else (method_b, method_a)
        bucket = counts.setdefault(key, {key[0]: 0, key[1]: 0})
        bucket[vote] += 1
    rows = []
    for key in sorted(counts):
        bucket = counts[key]
        n = bucket[key[0]] + bucket[key[1]]
        pct_a = round(100.0 * bucket[key[0]] / n, 2)
        rows.append(
            {
                "method_a": key[0],
                "method_b": key[1],
                "votes_a": bucket[key[0]],
                "votes_b": bucket[key[1]],
                "pct_a": pct_a,
                "pct_b": round(100.0 - pct_a, 2),
                "n": n,
            }
        )
    return rows


def format_ab_table(rows: Sequence[dict]) -> str:
    """Render aggregated A/B rows in the two-column percentage layout."""
    lines = ["Method          Preference   Method          Preference"]
    for r in rows:
        lines.append(
            f"{r['method_a']:<15s} {r['pct_a']:>8.2f}%   "
            f"{r['method_b']:<15s} {r['pct_b']:>8.2f}%"
        )
    return "\n".join(lines)


def load_votes_csv(path) -> list:
    """Read A/B votes from a csv with pair_id,method_a,method_b,vote columns."""
    import csv

    votes = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"pair_id", "method_a", "method_b", "vote"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ValueError(
                "votes csv needs 'pair_id', 'method_a', 'method_b', and 'vote' columns"
            )
        for row in reader:
            votes.append((row["pair_id"], row["method_a"], row["method_b"], row["vote"]))
    return votes
