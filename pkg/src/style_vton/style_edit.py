"""Stage 3: per-region style codes and minimal edits.

Shape lives in a VAE latent per region; texture is a region-pooled feature
vector. An update loop runs gradient ascent on a differentiable
fashionability score with respect to the editable region codes, accepting
only steps that strictly increase the score of the actually rendered image
and projecting the total code displacement onto an L2 budget ball.

The texture generator deliberately keeps every code-dependent computation at
1x1 receptive field: with shape latents frozen, editing one region's texture
feature cannot touch any pixel outside that region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .core import LABELS, ImageTensor, SegmentationMap
from .networks import PatchDiscriminator, init_weights
from .torch_utils import labels_to_tensor, onehot_from_labels

SHAPE_LATENT_DIM = 8
TEXTURE_FEATURE_DIM = 16


class ShapeEncoder(nn.Module):
    """Shared encoder: one binary region image -> diagonal Gaussian posterior."""

    def __init__(self, latent_dim: int = SHAPE_LATENT_DIM, base: int = 16):
        super().__init__()
        self.conv = nn.Sequential(
            nn.Conv2d(1, base, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(base, base * 2, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(base * 2, base * 2, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.AdaptiveAvgPool2d((2, 2)),
        )
        self.fc_mu = nn.Linear(base * 2 * 4, latent_dim)
        self.fc_logvar = nn.Linear(base * 2 * 4, latent_dim)
        init_weights(self)

    def forward(self, region_image: torch.Tensor):
        h = self.conv(region_image).flatten(1)
        return self.fc_mu(h), self.fc_logvar(h)


class ShapeDecoder(nn.Module):
    """Shape generator: stacked region latents -> parsing logits."""

    def __init__(
        self,
        height: int,
        width: int,
        num_labels: int = len(LABELS),
        latent_dim: int = SHAPE_LATENT_DIM,
        base: int = 32,
    ):
        super().__init__()
        self.height = height
        self.width = width
        self.h8 = math.ceil(height / 8)
        self.w8 = math.ceil(width / 8)
        self.fc = nn.Linear(num_labels * latent_dim, base * self.h8 * self.w8)
        self.base = base
        self.up = nn.Sequential(
            nn.Conv2d(base, base, 3, padding=1),
            nn.ReLU(inplace=True),
            nn.Upsample(scale_factor=2, mode="bilinear", align_corners=False),
            nn.Conv2d(base, base, 3, padding=1),
            nn.ReLU(inplace=True),
            nn.Upsample(scale_factor=2, mode="bilinear", align_corners=False),
            nn.Conv2d(base, base, 3, padding=1),
            nn.ReLU(inplace=True),
            nn.Upsample(scale_factor=2, mode="bilinear", align_corners=False),
            nn.Conv2d(base, num_labels, 3, padding=1),
        )
        init_weights(self)

    def forward(self, latents: torch.Tensor) -> torch.Tensor:
        """latents: (B, L*latent_dim) -> logits (B, num_labels, H, W)."""
        x = self.fc(latents).reshape(-1, self.base, self.h8, self.w8)
        x = self.up(x)
        return x[..., : self.height, : self.width]


@dataclass
class ShapeVAE:
    encoder: ShapeEncoder
    decoder: ShapeDecoder

    def train(self):
        self.encoder.train()
        self.decoder.train()

    def eval(self):
        self.encoder.eval()
        self.decoder.eval()

    @property
    def training(self) -> bool:
        return self.encoder.training


def encode_shape(vae: ShapeVAE, region_image: torch.Tensor):
    """Posterior (mu, logvar) and a latent z.

    Training mode draws z = mu + exp(logvar/2) * eps; eval mode returns
    z = mu, so repeated calls agree exactly.
    """
    if region_image.dim() == 2:
        region_image = region_image[None, None]
    elif region_image.dim() == 3:
        region_image = region_image[None]
    mu, logvar = vae.encoder(region_image.float())
    if vae.training:
        eps = torch.randn_like(mu)
        z = mu + torch.exp(0.5 * logvar) * eps
    else:
        z = mu
    return mu, logvar, z


class TextureEncoder(nn.Module):
    """Image -> dense feature map pooled per region into texture vectors."""

    def __init__(self, feature_dim: int = TEXTURE_FEATURE_DIM, base: int = 24):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(3, base, 3, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(base, base, 3, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(base, feature_dim, 3, padding=1),
        )
        init_weights(self)

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        return self.net(image)


def encode_texture(
    encoder: TextureEncoder, image: torch.Tensor, regions: SegmentationMap
) -> torch.Tensor:
    """Per-region average-pooled texture features, (L, feature_dim).

    Empty regions get a zero vector.
    """
    if image.dim() == 3:
        image = image[None]
    if tuple(image.shape[-2:]) != regions.shape:
        raise ValueError("image and region map shapes must agree")
    feats = encoder(image.float())[0]  # (D, H, W)
    num_labels = len(regions.label_vocabulary)
    onehot = onehot_from_labels(labels_to_tensor(regions), num_labels)  # (L, H, W)
    sums = torch.einsum("lhw,dhw->ld", onehot, feats)
    counts = onehot.sum(dim=(1, 2)).clamp_min(1e-12)[:, None]
    out = sums / counts
    empty = onehot.sum(dim=(1, 2)) == 0
    out[empty] = 0.0
    return out


class TextureGenerator(nn.Module):
    """Render an image from a region map and broadcast texture features.

    The spatial branch (3x3 convs over region probabilities + coordinates)
    sees no codes; the code branch and the head are strictly 1x1, keeping
    texture edits local to their region.
    """

    def __init__(
        self,
        num_labels: int = len(LABELS),
        feature_dim: int = TEXTURE_FEATURE_DIM,
        base: int = 32,
    ):
        super().__init__()
        self.spatial = nn.Sequential(
            nn.Conv2d(num_labels + 2, base, 3, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(base, base, 3, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
        )
        self.code = nn.Sequential(
            nn.Conv2d(feature_dim, base, 1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(base, base, 1),
            nn.LeakyReLU(0.2, inplace=True),
        )
        self.head = nn.Sequential(
            nn.Conv2d(base * 2, base, 1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(base, 3, 1),
        )
        init_weights(self)

    @staticmethod
    def _coord_channels(h: int, w: int, like: torch.Tensor) -> torch.Tensor:
        ys = torch.linspace(-1, 1, h, dtype=like.dtype)
        xs = torch.linspace(-1, 1, w, dtype=like.dtype)
        gy, gx = torch.meshgrid(ys, xs, indexing="ij")
        return torch.stack([gy, gx])

    def forward(self, region_probs: torch.Tensor, feature_map: torch.Tensor) -> torch.Tensor:
        """region_probs: (B, L, H, W); feature_map: (B, D, H, W) -> (B, 3, H, W)."""
        b, _, h, w = region_probs.shape
        coords = self._coord_channels(h, w, region_probs).expand(b, -1, -1, -1)
        f1 = self.spatial(torch.cat([region_probs, coords], dim=1))
        f2 = self.code(feature_map)
        return torch.sigmoid(self.head(torch.cat([f1, f2], dim=1)))


class TextureDiscriminator(PatchDiscriminator):
    """CGAN discriminator over (region map, image)."""

    def __init__(self, num_labels: int = len(LABELS), base: int = 16):
        super().__init__(in_ch=num_labels + 3, base=base)


@dataclass
class TextureEncoderGenerator:
    encoder: TextureEncoder
    generator: TextureGenerator


class FashionClassifier(nn.Module):
    """Learned scorer: (image, region map) -> fashionability in (0, 1)."""

    SCORE_EPS = 1e-6

    def __init__(self, num_labels: int = len(LABELS), base: int = 16):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(3 + num_labels, base, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(base, base * 2, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(base * 2, base * 2, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.AdaptiveAvgPool2d(1),
        )
        self.fc = nn.Linear(base * 2, 1)
        init_weights(self)

    def forward(self, image: torch.Tensor, region_probs: torch.Tensor) -> torch.Tensor:
        if image.dim() == 3:
            image = image[None]
        if region_probs.dim() == 3:
            region_probs = region_probs[None]
        h = self.net(torch.cat([image, region_probs], dim=1)).flatten(1)
        score = torch.sigmoid(self.fc(h)).squeeze(-1)
        return score.clamp(self.SCORE_EPS, 1 - self.SCORE_EPS).squeeze()


class ColorPreferenceClassifier(nn.Module):
    """Analytic scorer that prefers a target mean color in one region.

    Differentiable stand-in for a trained fashion classifier; used by tests
    and demos where a known optimum is handy.
    """

    def __init__(self, target_color, region_id: int, gain: float = 6.0):
        super().__init__()
        self.register_buffer("target", torch.as_tensor(target_color, dtype=torch.float32))
        self.region_id = region_id
        self.gain = gain

    def forward(self, image: torch.Tensor, region_probs: torch.Tensor) -> torch.Tensor:
        if image.dim() == 4:
            image = image[0]
        if region_probs.dim() == 4:
            region_probs = region_probs[0]
        w = region_probs[self.region_id]
        denom = w.sum().clamp_min(1e-12)
        mean_color = (image * w[None]).sum(dim=(1, 2)) / denom
        dist = torch.linalg.vector_norm(mean_color - self.target.to(image.dtype))
        return torch.sigmoid(self.gain * (0.5 - dist))


@dataclass
class StyleCode:
    """Per-region shape latents t_v and texture features s_v."""

    shape_latents: torch.Tensor  # (L, shape_dim)
    texture_features: torch.Tensor  # (L, feature_dim)
    vocabulary: Tuple[str, ...] = LABELS

    def __post_init__(self):
        if self.shape_latents.shape[0] != len(self.vocabulary):
            raise ValueError("one shape latent per vocabulary entry required")
        if self.texture_features.shape[0] != len(self.vocabulary):
            raise ValueError("one texture feature per vocabulary entry required")
        if not (
            torch.isfinite(self.shape_latents).all() and torch.isfinite(self.texture_features).all()
        ):
            raise ValueError("style code contains non-finite values")

    def clone(self) -> "StyleCode":
        return StyleCode(
            self.shape_latents.detach().clone(),
            self.texture_features.detach().clone(),
            self.vocabulary,
        )

    def delta_norm(self, other: "StyleCode") -> float:
        d2 = (self.shape_latents - other.shape_latents).pow(2).sum() + (
            self.texture_features - other.texture_features
        ).pow(2).sum()
        return float(d2.sqrt())


@dataclass
class StyleGenerators:
    """Frozen decoder pair used by the edit loop."""

    shape_decoder: ShapeDecoder
    texture_generator: TextureGenerator
    vocabulary: Tuple[str, ...] = LABELS


def encode_style(
    vae: ShapeVAE,
    tex: TextureEncoderGenerator,
    image: torch.Tensor,
    regions: SegmentationMap,
) -> StyleCode:
    """Build the style code of an (image, parsing) pair; eval-mode, deterministic."""
    vae.eval()
    tex.encoder.eval()
    num_labels = len(regions.label_vocabulary)
    onehot = onehot_from_labels(labels_to_tensor(regions), num_labels)
    with torch.no_grad():
        latents = []
        for i in range(num_labels):
            _, _, z = encode_shape(vae, onehot[i])
            latents.append(z[0])
        shape_latents = torch.stack(latents)
        texture_features = encode_texture(tex.encoder, image, regions)
    return StyleCode(shape_latents, texture_features, tuple(regions.label_vocabulary))


def render_style(
    gens: StyleGenerators,
    code: StyleCode,
    soft_tau: Optional[float] = None,
):
    """Decode a style code to (region logits, region probs, rendered image).

    With `soft_tau` the region map stays a softmax and the image is
    differentiable w.r.t. both code components; otherwise the hard argmax
    one-hot is used.
    """
    logits = gens.shape_decoder(code.shape_latents.reshape(1, -1))[0]
    if soft_tau is not None:
        probs = F.softmax(logits / soft_tau, dim=0)
    else:
        labels = logits.argmax(dim=0)
        probs = onehot_from_labels(labels, len(gens.vocabulary))
    feature_map = torch.einsum("lhw,ld->dhw", probs, code.texture_features)
    image = gens.texture_generator(probs[None], feature_map[None])[0]
    return logits, probs, image


def regions_from_logits(logits: torch.Tensor, vocabulary: Sequence[str]) -> SegmentationMap:
    return SegmentationMap(logits.argmax(dim=0).cpu().numpy(), tuple(vocabulary))


@dataclass
class EditResult:
    code: StyleCode
    regions: SegmentationMap  # updated segmentation I_t^u
    image: ImageTensor  # styled rendering I_t^s
    score_trace: List[float]
    code_delta_norm: float
    steps_accepted: int


def minimal_edit(
    code: StyleCode,
    classifier: nn.Module,
    generators: StyleGenerators,
    editable_regions: Sequence[str],
    steps: int,
    step_size: float,
    budget: float,
    components: Sequence[str] = ("shape", "texture"),
    soft_tau: float = 0.5,
    max_halvings: int = 5,
    origin: Optional[StyleCode] = None,
) -> EditResult:
    """Gradient-ascent style edit with a trust region and monotone acceptance.

    Each iteration takes an ascent step on the classifier score (computed
    through a softened render), projects the cumulative displacement onto the
    L2 ball of radius `budget` around `origin` (the starting code unless a
    session passes its own anchor), and accepts the step only if the score of
    the re-rendered image strictly increases; otherwise the step is halved,
    up to `max_halvings` times, before giving up.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    if origin is not None and origin.vocabulary != code.vocabulary:
        raise ValueError("origin and code must share a region vocabulary")
    if generators is None or generators.shape_decoder is None or generators.texture_generator is None:
        raise RuntimeError("minimal_edit requires frozen shape and texture generators")
    vocab = generators.vocabulary
    unknown = [r for r in editable_regions if r not in vocab]
    if unknown:
        raise ValueError(f"unknown editable regions: {unknown}")
    region_ids = [vocab.index(r) for r in editable_regions]
    edit_shape = "shape" in components
    edit_texture = "texture" in components
    if not (edit_shape or edit_texture):
        raise ValueError("components must include 'shape' and/or 'texture'")

    generators.shape_decoder.eval()
    generators.texture_generator.eval()
    if isinstance(classifier, nn.Module):
        classifier.eval()

    origin = origin.clone() if origin is not None else code.clone()
    current = code.clone()

    def hard_eval(c: StyleCode):
        with torch.no_grad():
            logits, probs, image = render_style(generators, c, soft_tau=None)
            score = classifier(image, probs)
        return logits, image, float(score)

    _, _, base_score = hard_eval(current)
    trace = [base_score]

    def project(c: StyleCode) -> StyleCode:
        ds = c.shape_latents - origin.shape_latents
        dt = c.texture_features - origin.texture_features
        norm = float((ds.pow(2).sum() + dt.pow(2).sum()).sqrt())
        if norm <= budget or norm == 0.0:
            return c
        scale = budget / norm
        return StyleCode(
            origin.shape_latents + ds * scale,
            origin.texture_features + dt * scale,
            c.vocabulary,
        )

    accepted = 0
    for _ in range(steps):
        t = current.shape_latents.detach().clone().requires_grad_(edit_shape)
        s = current.texture_features.detach().clone().requires_grad_(edit_texture)
        soft_code = StyleCode(t, s, current.vocabulary)
        _, probs, image = render_style(generators, soft_code, soft_tau=soft_tau)
        score = classifier(image, probs)
        grads = torch.autograd.grad(
            score, [p for p, on in ((t, edit_shape), (s, edit_texture)) if on], allow_unused=True
        )
        grad_map = {}
        gi = 0
        for p, on in ((t, edit_shape), (s, edit_texture)):
            grad_map[id(p)] = grads[gi] if on else None
            gi += on
        g_t = grad_map[id(t)]
        g_s = grad_map[id(s)]

        mask = torch.zeros(len(vocab), 1)
        mask[region_ids] = 1.0
        step = step_size
        improved = False
        for _ in range(max_halvings + 1):
            cand_t = current.shape_latents.detach().clone()
            cand_s = current.texture_features.detach().clone()
            if edit_shape and g_t is not None:
                cand_t = cand_t + step * g_t * mask
            if edit_texture and g_s is not None:
                cand_s = cand_s + step * g_s * mask
            candidate = project(StyleCode(cand_t, cand_s, current.vocabulary))
            _, _, cand_score = hard_eval(candidate)
            if cand_score > trace[-1]:
                current = candidate
                trace.append(cand_score)
                accepted += 1
                improved = True
                break
            step *= 0.5
        if not improved:
            break

    final_logits, final_image, _ = hard_eval(current)
    from .torch_utils import tensor_to_image

    return EditResult(
        code=current,
        regions=regions_from_logits(final_logits, vocab),
        image=tensor_to_image(final_image),
        score_trace=trace,
        code_delta_norm=current.delta_norm(origin),
        steps_accepted=accepted,
    )
