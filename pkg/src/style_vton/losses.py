"""Loss functions shared by the three training stages.

All functions take torch tensors and are differentiable. Discriminator
scores are probabilities in the open interval (0, 1); passing anything else
is an error rather than a silent clamp.
"""

from __future__ import annotations

from typing import NamedTuple

import torch
import torch.nn.functional as F


def _check_scores(*scores: torch.Tensor) -> None:
    for s in scores:
        if not torch.isfinite(s).all():
            raise ValueError("discriminator scores contain non-finite values")
        if (s <= 0).any() or (s >= 1).any():
            raise ValueError("discriminator scores must lie strictly inside (0, 1)")


def adv_loss(d_real: torch.Tensor, d_fake: torch.Tensor):
    """Two-term GAN loss in its non-saturating form.

    disc_loss = -mean[log d_real + log(1 - d_fake)]
    gen_loss  = -mean[log d_fake]

    Used for stage-1 parsing, the stage-2 contour and try-on discriminators
    and the stage-3 texture CGAN; only the conditioning differs.
    """
    _check_scores(d_real, d_fake)
    disc_loss = -(torch.log(d_real).mean() + torch.log(1 - d_fake).mean())
    gen_loss = -torch.log(d_fake).mean()
    return gen_loss, disc_loss


# alias: the parsing trainer refers to its adversarial term by stage
adv_loss_stage1 = adv_loss


def minimax_value(d_real: torch.Tensor, d_fake: torch.Tensor) -> torch.Tensor:
    """Literal value function V(G, D) = E[log D(real)] + E[log(1 - D(fake))].

    Logged for reference; optimization uses the non-saturating split above.
    """
    _check_scores(d_real, d_fake)
    return torch.log(d_real).mean() + torch.log(1 - d_fake).mean()


def parsing_pixel_loss(logits: torch.Tensor, target_labels: torch.Tensor) -> torch.Tensor:
    """Mean per-pixel cross-entropy between softmax(logits) and label targets.

    logits: (L, H, W) or (B, L, H, W); target_labels: matching (H, W)/(B, H, W).
    """
    if logits.dim() == 3:
        logits = logits.unsqueeze(0)
        target_labels = target_labels.unsqueeze(0)
    num_classes = logits.shape[1]
    if target_labels.min() < 0 or target_labels.max() >= num_classes:
        raise ValueError("target labels outside the vocabulary")
    return F.cross_entropy(logits, target_labels.long())


def l1_texture_loss(gt_texture: torch.Tensor, warped: torch.Tensor) -> torch.Tensor:
    """Mean absolute difference between a ground-truth cut and a warped texture."""
    if not (torch.isfinite(gt_texture).all() and torch.isfinite(warped).all()):
        raise ValueError("texture tensors contain non-finite values")
    if gt_texture.shape != warped.shape:
        raise ValueError(f"shape mismatch: {tuple(gt_texture.shape)} vs {tuple(warped.shape)}")
    return (gt_texture - warped).abs().mean()


def correspondence_recon_loss(
    pred_samples: torch.Tensor,
    target_samples: torch.Tensor,
    validity: torch.Tensor,
) -> torch.Tensor:
    """Texel-space reconstruction loss of the correspondence predictor.

    pred_samples/target_samples: (..., K, L, C) colors; validity: (..., K, L)
    in {0, 1}. Per valid texel the channel-wise L1 norm is taken, then the
    mean over valid texels (and samples).
    """
    if pred_samples.shape != target_samples.shape:
        raise ValueError("prediction/target texel shapes differ")
    if not (torch.isfinite(pred_samples).all() and torch.isfinite(target_samples).all()):
        raise ValueError("texel samples contain non-finite values")
    per_texel = (pred_samples - target_samples).abs().sum(dim=-1)
    weight = validity.to(per_texel.dtype)
    total = weight.sum()
    if total == 0:
        return per_texel.sum() * 0.0
    return (per_texel * weight).sum() / total


class Stage2Losses(NamedTuple):
    """Unpacks as (total, adv, l1, recon)."""

    total: torch.Tensor
    adv: torch.Tensor
    l1: torch.Tensor
    recon: torch.Tensor


def stage2_losses(
    d_real: torch.Tensor,
    d_fake: torch.Tensor,
    gt_texture: torch.Tensor,
    warped_texture: torch.Tensor,
    pred_samples: torch.Tensor,
    target_samples: torch.Tensor,
    validity: torch.Tensor,
    lambda_adv: float = 1.0,
    lambda_l1: float = 1.0,
    lambda_recon: float = 1.0,
) -> Stage2Losses:
    """Weighted stage-2 objective: total = l_adv*w1 + l_1*w2 + l_recon*w3."""
    gen_loss, _ = adv_loss(d_real, d_fake)
    l1 = l1_texture_loss(gt_texture, warped_texture)
    recon = correspondence_recon_loss(pred_samples, target_samples, validity)
    total = lambda_adv * gen_loss + lambda_l1 * l1 + lambda_recon * recon
    return Stage2Losses(total=total, adv=gen_loss, l1=l1, recon=recon)


def kl_loss(mu: torch.Tensor, logvar: torch.Tensor) -> torch.Tensor:
    """KL(N(mu, diag(exp(logvar))) || N(0, I)).

    Sums 0.5 * (mu^2 + sigma^2 - 1 - log sigma^2) over latent dims; batched
    inputs are averaged over the leading dimension.
    """
    if not (torch.isfinite(mu).all() and torch.isfinite(logvar).all()):
        raise ValueError("mu/logvar contain non-finite values")
    per_dim = 0.5 * (mu.pow(2) + logvar.exp() - 1.0 - logvar)
    if per_dim.dim() <= 1:
        return per_dim.sum()
    return per_dim.sum(dim=tuple(range(1, per_dim.dim()))).mean()


def texture_gan_loss(disc_scores_real: torch.Tensor, disc_scores_fake: torch.Tensor):
    """Stage-3 CGAN loss on (region map, image) pairs; same form as adv_loss."""
    return adv_loss(disc_scores_real, disc_scores_fake)
