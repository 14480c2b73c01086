"""Stage trainers and the sequential orchestrator.

Every stage is seeded independently, batches are drawn from a local
`numpy.random.Generator`, and loss curves land in per-stage CSVs with repr()
floats, so two runs of the same command produce byte-identical logs and
checkpoints.

Stage order and hand-offs:
  parsing        -> predicted full parsing (conditions the synthesizer)
  contour        -> garment contour warped onto the body
  correspondence -> texel coordinate field into the garment image
  synthesizer    -> final try-on image from the rendered warped texture
  vae / texture  -> per-region style codes for editing
  classifier     -> fashionability scorer used by the edit loop
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F

from .checkpoint import load_checkpoint, load_module_state, save_checkpoint, write_manifest
from .config import STAGE_NAMES, RunConfig, StageConfig, config_hash, resolve_stages
from .core import LABELS, DatasetPair
from .data_synth import generate_synthetic_dataset
from .dataset_io import list_pair_dirs, load_dataset, save_dataset
from .losses import (
    adv_loss,
    correspondence_recon_loss,
    kl_loss,
    l1_texture_loss,
    parsing_pixel_loss,
)
from .networks import CorrespondenceNet, PatchDiscriminator
from .parsing import ParsingDiscriminator, ParsingGenerator, stage1_input
from .person import build_person_representation
from .style_edit import (
    FashionClassifier,
    ShapeDecoder,
    ShapeEncoder,
    ShapeVAE,
    TextureDiscriminator,
    TextureEncoder,
    TextureGenerator,
    encode_texture,
)
from .texture_map import (
    ContourWarper,
    TryonSynthesizer,
    UVCorrespondence,
    bilinear_sample_torch,
    mask_bbox,
    sample_texture_torch,
)
from .torch_utils import (
    image_to_tensor,
    labels_to_tensor,
    mask_to_tensor,
    onehot_from_labels,
    pose_to_tensor,
)

# ELBO weighting: reconstruction term summed over pixels, beta * KL
VAE_BETA = 1.0


def lr_at_epoch(epoch: int, lr0: float, const_epochs: int, decay_epochs: int) -> float:
    """Piecewise schedule: flat for `const_epochs`, then linear decay to zero.

    The midpoint of the decay window sits at exactly lr0/2.
    """
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    if lr0 <= 0:
        raise ValueError("lr0 must be positive")
    if const_epochs < 0 or decay_epochs < 0:
        raise ValueError("schedule lengths must be non-negative")
    if epoch < const_epochs or decay_epochs == 0:
        return lr0
    frac = (epoch - const_epochs) / decay_epochs
    return lr0 * max(0.0, 1.0 - frac)


def halved_lr(lr0: float, step: int, milestones: Sequence[int]) -> float:
    """Step schedule: halve the rate at each milestone already passed."""
    if lr0 <= 0:
        raise ValueError("lr0 must be positive")
    k = sum(1 for m in milestones if step >= m)
    return lr0 * (0.5**k)


def stage_lr(cfg: StageConfig, epoch: int, step: int = 0) -> float:
    if cfg.halve_at:
        return halved_lr(cfg.lr, step, cfg.halve_at)
    const = cfg.const_epochs if cfg.const_epochs is not None else cfg.epochs
    return lr_at_epoch(epoch, cfg.lr, const, cfg.decay_epochs)


def epoch_batches(n: int, batch_size: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Shuffled index batches; singleton batches are dropped (they break BN)."""
    idx = rng.permutation(n)
    batches = [idx[i : i + batch_size] for i in range(0, n, batch_size)]
    return [b for b in batches if len(b) > 1 or batch_size == 1]



def _l1_weight(run: RunConfig, cfg: StageConfig) -> float:
    """Stage override of the supervised-term weight, else the run default."""
    return run.lambda_l1 if cfg.lambda_l1 is None else cfg.lambda_l1

def _set_lr(opt: torch.optim.Optimizer, lr: float) -> None:
    for group in opt.param_groups:
        group["lr"] = lr


def _f(x) -> float:
    return float(x.detach()) if isinstance(x, torch.Tensor) else float(x)


def write_loss_csv(path: Path, fieldnames: Sequence[str], rows: Sequence[dict]) -> None:
    """Write loss curves as long-format `step,loss_name,value` rows.

    Floats are serialized with repr() so equal runs produce equal bytes.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = [f for f in fieldnames if f != "epoch"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss_name", "value"])
        for row in rows:
            step = row["epoch"]
            for name in names:
                v = row[name]
                writer.writerow([step, name, repr(v) if isinstance(v, float) else v])


def read_loss_csv(path: Path) -> Dict[str, List[Tuple[int, float]]]:
    """Parse a long-format loss CSV back into {loss_name: [(step, value)]}."""
    curves: Dict[str, List[Tuple[int, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            curves.setdefault(row["loss_name"], []).append(
                (int(row["step"]), float(row["value"]))
            )
    return curves


@dataclass
class PairTensors:
    """Per-pair tensors shared by the stage trainers."""

    pair: DatasetPair
    person: torch.Tensor  # (3, H, W)
    garment: torch.Tensor  # (3, H, W)
    garment_mask: torch.Tensor  # (1, H, W)
    pose: torch.Tensor  # (K, H, W)
    labels: torch.Tensor  # (H, W) long
    parsing_onehot: torch.Tensor  # (L, H, W)
    fuzzy_onehot: torch.Tensor  # (L, H, W)
    identity: torch.Tensor  # (3, H, W)
    tryon: torch.Tensor  # (3, H, W)
    torso_mask: torch.Tensor  # (1, H, W) gt garment-on-body contour


def prepare_pair(pair: DatasetPair) -> PairTensors:
    rep = build_person_representation(pair.person, pair.parsing_gt, pair.pose)
    labels = labels_to_tensor(pair.parsing_gt)
    num_labels = len(pair.parsing_gt.label_vocabulary)
    torso_id = pair.parsing_gt.label_vocabulary.index("torso-garment")
    torso = (labels == torso_id).float()[None]
    return PairTensors(
        pair=pair,
        person=image_to_tensor(pair.person),
        garment=image_to_tensor(pair.garment),
        garment_mask=mask_to_tensor(pair.garment_mask),
        pose=pose_to_tensor(pair.pose),
        labels=labels,
        parsing_onehot=onehot_from_labels(labels, num_labels),
        fuzzy_onehot=onehot_from_labels(labels_to_tensor(rep.fuzzy_parsing), num_labels),
        identity=image_to_tensor(rep.identity_image),
        tryon=image_to_tensor(pair.tryon_gt),
        torso_mask=torso,
    )


def _stack(pairs: Sequence[PairTensors], attr: str, idx: np.ndarray) -> torch.Tensor:
    return torch.stack([getattr(pairs[i], attr) for i in idx])


def _stage_seed(run: RunConfig, stage: str) -> int:
    return run.seed * 10_000 + STAGE_NAMES.index(stage)


# ---------------------------------------------------------------------------
# stage trainers


def train_parsing(
    pairs: Sequence[PairTensors], run: RunConfig, cfg: StageConfig
) -> Tuple[ParsingGenerator, ParsingDiscriminator, List[dict]]:
    torch.manual_seed(_stage_seed(run, "parsing"))
    num_labels = len(LABELS)
    k = pairs[0].pose.shape[0]
    gen = ParsingGenerator(num_labels=num_labels, num_keypoints=k)
    disc = ParsingDiscriminator(num_labels=num_labels, num_keypoints=k)
    g_opt = torch.optim.Adam(gen.parameters(), lr=cfg.lr, betas=cfg.betas)
    d_opt = torch.optim.Adam(disc.parameters(), lr=cfg.lr, betas=cfg.betas)
    rng = np.random.default_rng(_stage_seed(run, "parsing"))
    rows = []
    gen.train()
    disc.train()
    for epoch in range(cfg.epochs):
        lr = stage_lr(cfg, epoch)
        _set_lr(g_opt, lr)
        _set_lr(d_opt, lr)
        sums = {"loss_gen_adv": 0.0, "loss_disc": 0.0, "loss_ce": 0.0, "loss_total": 0.0}
        batches = epoch_batches(len(pairs), cfg.batch_size, rng)
        for idx in batches:
            x = torch.cat(
                [
                    _stack(pairs, "fuzzy_onehot", idx),
                    _stack(pairs, "pose", idx),
                    _stack(pairs, "identity", idx),
                    _stack(pairs, "garment", idx),
                ],
                dim=1,
            )
            target = torch.stack([pairs[i].labels for i in idx])
            real = _stack(pairs, "parsing_onehot", idx)

            logits = gen(x)
            fake = F.softmax(logits, dim=1)

            d_real = disc(x, real)
            d_fake = disc(x, fake.detach())
            _, d_loss = adv_loss(d_real, d_fake)
            d_opt.zero_grad()
            d_loss.backward()
            d_opt.step()

            g_adv, _ = adv_loss(d_real.detach(), disc(x, fake))
            ce = parsing_pixel_loss(logits, target)
            total = g_adv + _l1_weight(run, cfg) * ce
            g_opt.zero_grad()
            total.backward()
            g_opt.step()

            sums["loss_gen_adv"] += _f(g_adv)
            sums["loss_disc"] += _f(d_loss)
            sums["loss_ce"] += _f(ce)
            sums["loss_total"] += _f(total)
        nb = max(len(batches), 1)
        rows.append({"epoch": epoch, "lr": lr, **{key: v / nb for key, v in sums.items()}})
    gen.eval()
    disc.eval()
    return gen, disc, rows


def train_contour(
    pairs: Sequence[PairTensors], run: RunConfig, cfg: StageConfig
) -> Tuple[ContourWarper, PatchDiscriminator, List[dict]]:
    torch.manual_seed(_stage_seed(run, "contour"))
    num_labels = len(LABELS)
    k = pairs[0].pose.shape[0]
    warper = ContourWarper(num_keypoints=k, num_labels=num_labels)
    disc = PatchDiscriminator(in_ch=1 + k + num_labels + 1)
    g_opt = torch.optim.Adam(warper.parameters(), lr=cfg.lr, betas=cfg.betas)
    d_opt = torch.optim.Adam(disc.parameters(), lr=cfg.lr, betas=cfg.betas)
    rng = np.random.default_rng(_stage_seed(run, "contour"))
    rows = []
    warper.train()
    disc.train()
    for epoch in range(cfg.epochs):
        lr = stage_lr(cfg, epoch)
        _set_lr(g_opt, lr)
        _set_lr(d_opt, lr)
        sums = {"loss_gen_adv": 0.0, "loss_disc": 0.0, "loss_l1": 0.0, "loss_total": 0.0}
        batches = epoch_batches(len(pairs), cfg.batch_size, rng)
        for idx in batches:
            cond = torch.cat(
                [
                    _stack(pairs, "garment_mask", idx),
                    _stack(pairs, "pose", idx),
                    _stack(pairs, "fuzzy_onehot", idx),
                ],
                dim=1,
            )
            target = _stack(pairs, "torso_mask", idx)
            pred = warper(cond)

            d_real = disc(cond, target)
            d_fake = disc(cond, pred.detach())
            _, d_loss = adv_loss(d_real, d_fake)
            d_opt.zero_grad()
            d_loss.backward()
            d_opt.step()

            g_adv, _ = adv_loss(d_real.detach(), disc(cond, pred))
            l1 = l1_texture_loss(pred, target)
            total = g_adv + _l1_weight(run, cfg) * l1
            g_opt.zero_grad()
            total.backward()
            g_opt.step()

            sums["loss_gen_adv"] += _f(g_adv)
            sums["loss_disc"] += _f(d_loss)
            sums["loss_l1"] += _f(l1)
            sums["loss_total"] += _f(total)
        nb = max(len(batches), 1)
        rows.append({"epoch": epoch, "lr": lr, **{key: v / nb for key, v in sums.items()}})
    warper.eval()
    disc.eval()
    return warper, disc, rows


def predicted_contours(
    pairs: Sequence[PairTensors], warper: ContourWarper
) -> List[torch.Tensor]:
    """Binarized contour predictions; falls back to the gt torso mask when a
    prediction comes out empty (an untrained warper must not stall later
    stages)."""
    warper.eval()
    out = []
    with torch.no_grad():
        for p in pairs:
            cond = torch.cat([p.garment_mask, p.pose, p.fuzzy_onehot])[None]
            pred = (warper(cond)[0] > 0.5).float()
            if pred.sum() < 4:
                pred = p.torso_mask
            out.append(pred)
    return out


def _texel_targets(
    p: PairTensors, contour: torch.Tensor, grid: int
) -> Optional[Tuple[Tuple[int, int, int, int], torch.Tensor, torch.Tensor, torch.Tensor]]:
    """bbox, texel positions (K,K,2), validity (K,K), target colors (3,K,K)."""
    mask_np = contour[0].numpy().astype(np.uint8)
    bbox = mask_bbox(mask_np)
    if bbox is None:
        return None
    y0, x0, y1, x1 = bbox
    ys = torch.linspace(float(y0), float(y1), grid)
    xs = torch.linspace(float(x0), float(x1), grid)
    gy, gx = torch.meshgrid(ys, xs, indexing="ij")
    positions = torch.stack([gy, gx], dim=-1)
    ry = positions[..., 0].round().long().clamp(0, mask_np.shape[0] - 1)
    rx = positions[..., 1].round().long().clamp(0, mask_np.shape[1] - 1)
    validity = contour[0][ry, rx]
    target = bilinear_sample_torch(p.tryon, positions)
    return bbox, positions, validity, target


def train_correspondence(
    pairs: Sequence[PairTensors],
    run: RunConfig,
    cfg: StageConfig,
    warper: ContourWarper,
) -> Tuple[CorrespondenceNet, List[dict]]:
    torch.manual_seed(_stage_seed(run, "correspondence"))
    h, w = run.image_height, run.image_width
    net = CorrespondenceNet(grid=run.grid, image_height=h, image_width=w)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.lr, betas=cfg.betas)
    rng = np.random.default_rng(_stage_seed(run, "correspondence"))
    contours = predicted_contours(pairs, warper)
    precomp = [_texel_targets(p, c, run.grid) for p, c in zip(pairs, contours)]
    rows = []
    net.train()
    for epoch in range(cfg.epochs):
        lr = stage_lr(cfg, epoch)
        _set_lr(opt, lr)
        total = 0.0
        batches = epoch_batches(len(pairs), cfg.batch_size, rng)
        for idx in batches:
            opt.zero_grad()
            losses = []
            for i in idx:
                if precomp[i] is None:
                    continue
                _, _, validity, target = precomp[i]
                coords = net(contours[i][None])[0]  # (2, K, K)
                coords_yx = coords.permute(1, 2, 0)
                sampled = bilinear_sample_torch(pairs[i].garment, coords_yx)
                losses.append(correspondence_recon_loss(sampled, target, validity))
            if not losses:
                continue
            loss = torch.stack(losses).mean()
            loss.backward()
            opt.step()
            total += _f(loss)
        nb = max(len(batches), 1)
        rows.append({"epoch": epoch, "lr": lr, "loss_recon": total / nb})
    net.eval()
    return net, rows


def rendered_textures(
    pairs: Sequence[PairTensors],
    contours: Sequence[torch.Tensor],
    net: CorrespondenceNet,
    grid: int,
) -> List[torch.Tensor]:
    """Warped garment texture per pair via the predicted coordinate field."""
    net.eval()
    out = []
    h, w = pairs[0].person.shape[-2:]
    with torch.no_grad():
        for p, contour in zip(pairs, contours):
            mask_np = contour[0].numpy().astype(np.uint8)
            bbox = mask_bbox(mask_np)
            if bbox is None:
                out.append(torch.zeros(3, h, w))
                continue
            coords = net(contour[None])[0]
            tex = sample_texture_torch(
                coords.permute(1, 2, 0), bbox, contour[0], p.garment, p.garment_mask[0], (h, w)
            )
            out.append(tex)
    return out


def train_synthesizer(
    pairs: Sequence[PairTensors],
    run: RunConfig,
    cfg: StageConfig,
    parsing_gen: ParsingGenerator,
    warper: ContourWarper,
    corr_net: CorrespondenceNet,
) -> Tuple[TryonSynthesizer, PatchDiscriminator, List[dict]]:
    torch.manual_seed(_stage_seed(run, "synthesizer"))
    num_labels = len(LABELS)
    k = pairs[0].pose.shape[0]
    synth = TryonSynthesizer(num_keypoints=k, num_labels=num_labels)
    disc = PatchDiscriminator(in_ch=k + num_labels + 3 + 3 + 3)
    g_opt = torch.optim.Adam(synth.parameters(), lr=cfg.lr, betas=cfg.betas)
    d_opt = torch.optim.Adam(disc.parameters(), lr=cfg.lr, betas=cfg.betas)
    rng = np.random.default_rng(_stage_seed(run, "synthesizer"))

    # conditioning comes from the trained earlier stages, not the ground truth
    parsing_gen.eval()
    contours = predicted_contours(pairs, warper)
    textures = rendered_textures(pairs, contours, corr_net, run.grid)
    with torch.no_grad():
        parse_onehots = []
        recon_vals = []
        for p, contour in zip(pairs, contours):
            x = torch.cat([p.fuzzy_onehot, p.pose, p.identity, p.garment])[None]
            pred = parsing_gen(x)[0].argmax(dim=0)
            parse_onehots.append(onehot_from_labels(pred, num_labels))
            t = _texel_targets(p, contour, run.grid)
            if t is None:
                recon_vals.append(torch.tensor(0.0))
            else:
                _, positions, validity, target = t
                coords = corr_net(contour[None])[0].permute(1, 2, 0)
                sampled = bilinear_sample_torch(p.garment, coords)
                recon_vals.append(correspondence_recon_loss(sampled, target, validity))
    recon_const = float(torch.stack(recon_vals).mean())

    rows = []
    synth.train()
    disc.train()
    for epoch in range(cfg.epochs):
        lr = stage_lr(cfg, epoch)
        _set_lr(g_opt, lr)
        _set_lr(d_opt, lr)
        sums = {
            "loss_gen_adv": 0.0,
            "loss_disc": 0.0,
            "loss_l1": 0.0,
            "loss_recon": 0.0,
            "loss_total": 0.0,
        }
        batches = epoch_batches(len(pairs), cfg.batch_size, rng)
        for idx in batches:
            cond = torch.cat(
                [
                    _stack(pairs, "pose", idx),
                    torch.stack([parse_onehots[i] for i in idx]),
                    torch.stack([textures[i] for i in idx]),
                    _stack(pairs, "identity", idx),
                ],
                dim=1,
            )
            target = _stack(pairs, "tryon", idx)
            out = synth(cond)

            d_real = disc(cond, target)
            d_fake = disc(cond, out.detach())
            _, d_loss = adv_loss(d_real, d_fake)
            d_opt.zero_grad()
            d_loss.backward()
            d_opt.step()

            g_adv, _ = adv_loss(d_real.detach(), disc(cond, out))
            l1 = l1_texture_loss(out, target)
            g_loss = run.lambda_adv * g_adv + _l1_weight(run, cfg) * l1
            g_opt.zero_grad()
            g_loss.backward()
            g_opt.step()

            sums["loss_gen_adv"] += _f(g_adv)
            sums["loss_disc"] += _f(d_loss)
            sums["loss_l1"] += _f(l1)
            sums["loss_recon"] += recon_const
            sums["loss_total"] += _f(g_loss) + run.lambda_recon * recon_const
        nb = max(len(batches), 1)
        rows.append({"epoch": epoch, "lr": lr, **{key: v / nb for key, v in sums.items()}})
    synth.eval()
    disc.eval()
    return synth, disc, rows


def train_vae(
    pairs: Sequence[PairTensors], run: RunConfig, cfg: StageConfig
) -> Tuple[ShapeVAE, List[dict]]:
    torch.manual_seed(_stage_seed(run, "vae"))
    num_labels = len(LABELS)
    vae = ShapeVAE(
        encoder=ShapeEncoder(),
        decoder=ShapeDecoder(run.image_height, run.image_width, num_labels=num_labels),
    )
    params = list(vae.encoder.parameters()) + list(vae.decoder.parameters())
    opt = torch.optim.Adam(params, lr=cfg.lr, betas=cfg.betas)
    rng = np.random.default_rng(_stage_seed(run, "vae"))
    rows = []
    vae.train()
    for epoch in range(cfg.epochs):
        lr = stage_lr(cfg, epoch)
        _set_lr(opt, lr)
        sums = {"loss_ce": 0.0, "loss_kl": 0.0, "loss_total": 0.0}
        batches = epoch_batches(len(pairs), cfg.batch_size, rng)
        for idx in batches:
            regions = _stack(pairs, "parsing_onehot", idx)  # (B, L, H, W)
            b = regions.shape[0]
            flat = regions.reshape(b * num_labels, 1, *regions.shape[-2:])
            mu, logvar = vae.encoder(flat)
            z = mu + torch.exp(0.5 * logvar) * torch.randn_like(mu)
            logits = vae.decoder(z.reshape(b, -1))
            target = torch.stack([pairs[i].labels for i in idx])
            ce = parsing_pixel_loss(logits, target)
            kl = kl_loss(mu, logvar)
            # recon term is the summed pixel likelihood, so beta=1 keeps the
            # KL small relative to it and the latents stay informative
            total = ce * (run.image_height * run.image_width) + VAE_BETA * kl
            opt.zero_grad()
            total.backward()
            opt.step()
            sums["loss_ce"] += _f(ce)
            sums["loss_kl"] += _f(kl)
            sums["loss_total"] += _f(total)
        nb = max(len(batches), 1)
        rows.append({"epoch": epoch, "lr": lr, **{key: v / nb for key, v in sums.items()}})
    vae.eval()
    return vae, rows


def train_texture(
    pairs: Sequence[PairTensors], run: RunConfig, cfg: StageConfig
) -> Tuple[TextureEncoder, TextureGenerator, TextureDiscriminator, List[dict]]:
    torch.manual_seed(_stage_seed(run, "texture"))
    num_labels = len(LABELS)
    enc = TextureEncoder()
    gen = TextureGenerator(num_labels=num_labels)
    disc = TextureDiscriminator(num_labels=num_labels)
    g_opt = torch.optim.Adam(
        list(enc.parameters()) + list(gen.parameters()), lr=cfg.lr, betas=cfg.betas
    )
    d_opt = torch.optim.Adam(disc.parameters(), lr=cfg.lr, betas=cfg.betas)
    rng = np.random.default_rng(_stage_seed(run, "texture"))
    rows = []
    enc.train()
    gen.train()
    disc.train()
    for epoch in range(cfg.epochs):
        lr = stage_lr(cfg, epoch)
        _set_lr(g_opt, lr)
        _set_lr(d_opt, lr)
        sums = {"loss_gen_adv": 0.0, "loss_disc": 0.0, "loss_l1": 0.0, "loss_total": 0.0}
        batches = epoch_batches(len(pairs), cfg.batch_size, rng)
        for idx in batches:
            regions = _stack(pairs, "parsing_onehot", idx)
            target = _stack(pairs, "tryon", idx)
            feats = enc(target)  # (B, D, H, W)
            sums_pool = torch.einsum("blhw,bdhw->bld", regions, feats)
            counts = regions.sum(dim=(2, 3)).clamp_min(1e-12)[..., None]
            codes = sums_pool / counts
            feature_map = torch.einsum("blhw,bld->bdhw", regions, codes)
            out = gen(regions, feature_map)

            d_real = disc(regions, target)
            d_fake = disc(regions, out.detach())
            _, d_loss = adv_loss(d_real, d_fake)
            d_opt.zero_grad()
            d_loss.backward()
            d_opt.step()

            g_adv, _ = adv_loss(d_real.detach(), disc(regions, out))
            l1 = l1_texture_loss(out, target)
            total = g_adv + _l1_weight(run, cfg) * l1
            g_opt.zero_grad()
            total.backward()
            g_opt.step()

            sums["loss_gen_adv"] += _f(g_adv)
            sums["loss_disc"] += _f(d_loss)
            sums["loss_l1"] += _f(l1)
            sums["loss_total"] += _f(total)
        nb = max(len(batches), 1)
        rows.append({"epoch": epoch, "lr": lr, **{key: v / nb for key, v in sums.items()}})
    enc.eval()
    gen.eval()
    disc.eval()
    return enc, gen, disc, rows


def train_classifier(
    pairs: Sequence[PairTensors], run: RunConfig, cfg: StageConfig
) -> Tuple[FashionClassifier, List[dict]]:
    """Binary scorer: real outfits score high, torso-noised ones score low."""
    torch.manual_seed(_stage_seed(run, "classifier"))
    num_labels = len(LABELS)
    net = FashionClassifier(num_labels=num_labels)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    rng = np.random.default_rng(_stage_seed(run, "classifier"))
    noise_gen = torch.Generator().manual_seed(_stage_seed(run, "classifier"))
    rows = []
    step = 0
    net.train()
    for epoch in range(cfg.epochs):
        sums = {"loss_bce": 0.0, "accuracy": 0.0}
        batches = epoch_batches(len(pairs), cfg.batch_size, rng)
        lr = stage_lr(cfg, epoch, step)
        for idx in batches:
            lr = stage_lr(cfg, epoch, step)
            _set_lr(opt, lr)
            regions = _stack(pairs, "parsing_onehot", idx)
            pos = _stack(pairs, "tryon", idx)
            torso = regions[:, LABELS.index("torso-garment")][:, None]
            noise = torch.rand(pos.shape, generator=noise_gen)
            neg = pos * (1 - torso) + noise * torso
            images = torch.cat([pos, neg])
            rmaps = torch.cat([regions, regions])
            labels = torch.cat([torch.ones(len(idx)), torch.zeros(len(idx))])
            scores = net(images, rmaps)
            loss = F.binary_cross_entropy(scores, labels)
            opt.zero_grad()
            loss.backward()
            opt.step()
            step += 1
            sums["loss_bce"] += _f(loss)
            sums["accuracy"] += float(((scores > 0.5).float() == labels).float().mean())
        nb = max(len(batches), 1)
        rows.append({"epoch": epoch, "lr": lr, **{key: v / nb for key, v in sums.items()}})
    net.eval()
    return net, rows


# ---------------------------------------------------------------------------
# orchestration

LOSS_FIELDS = {
    "parsing": ("epoch", "lr", "loss_gen_adv", "loss_disc", "loss_ce", "loss_total"),
    "contour": ("epoch", "lr", "loss_gen_adv", "loss_disc", "loss_l1", "loss_total"),
    "correspondence": ("epoch", "lr", "loss_recon"),
    "synthesizer": (
        "epoch",
        "lr",
        "loss_gen_adv",
        "loss_disc",
        "loss_l1",
        "loss_recon",
        "loss_total",
    ),
    "vae": ("epoch", "lr", "loss_ce", "loss_kl", "loss_total"),
    "texture": ("epoch", "lr", "loss_gen_adv", "loss_disc", "loss_l1", "loss_total"),
    "classifier": ("epoch", "lr", "loss_bce", "accuracy"),
}

STAGE_DEPS = {
    "parsing": (),
    "contour": (),
    "correspondence": ("contour",),
    "synthesizer": ("parsing", "contour", "correspondence"),
    "vae": (),
    "texture": (),
    "classifier": (),
}


def ensure_dataset(data_dir: Path, run: RunConfig) -> List[DatasetPair]:
    """Load pairs from disk, synthesizing and saving them first if absent."""
    data_dir = Path(data_dir)
    if (data_dir / "pairs").exists() and list_pair_dirs(data_dir):
        return load_dataset(data_dir)
    n = run.num_train_pairs + run.num_eval_pairs
    seeds = [run.seed * 100_000 + i for i in range(n)]
    dataset = generate_synthetic_dataset(seeds, run.image_height, run.image_width)
    save_dataset(data_dir, dataset)
    return load_dataset(data_dir)


def split_dataset(
    dataset: Sequence[DatasetPair], run: RunConfig
) -> Tuple[List[DatasetPair], List[DatasetPair]]:
    """Deterministic split: the trailing block is held out for evaluation."""
    n_eval = min(run.num_eval_pairs, max(len(dataset) - 1, 0))
    if n_eval == 0:
        return list(dataset), []
    return list(dataset[:-n_eval]), list(dataset[-n_eval:])


class MissingStageError(RuntimeError):
    """A requested stage needs checkpoints that have not been trained yet."""


def _load_stage_modules(out_dir: Path, stage: str, run: RunConfig) -> Dict[str, torch.nn.Module]:
    path = Path(out_dir) / f"{stage}.ckpt"
    if not path.exists():
        raise MissingStageError(
            f"stage '{stage}' requires checkpoint {path.name}; train it first"
        )
    _, tensors = load_checkpoint(path)
    return build_stage_modules(stage, run, tensors)


def build_stage_modules(
    stage: str, run: RunConfig, tensors: Optional[Dict[str, torch.Tensor]] = None
) -> Dict[str, torch.nn.Module]:
    """Construct (and optionally restore) the trainable modules of a stage."""
    num_labels = len(LABELS)
    k = 8
    h, w = run.image_height, run.image_width
    if stage == "parsing":
        mods = {
            "generator": ParsingGenerator(num_labels=num_labels, num_keypoints=k),
            "discriminator": ParsingDiscriminator(num_labels=num_labels, num_keypoints=k),
        }
    elif stage == "contour":
        mods = {
            "warper": ContourWarper(num_keypoints=k, num_labels=num_labels),
            "discriminator": PatchDiscriminator(in_ch=1 + k + num_labels + 1),
        }
    elif stage == "correspondence":
        mods = {"net": CorrespondenceNet(grid=run.grid, image_height=h, image_width=w)}
    elif stage == "synthesizer":
        mods = {
            "synthesizer": TryonSynthesizer(num_keypoints=k, num_labels=num_labels),
            "discriminator": PatchDiscriminator(in_ch=k + num_labels + 3 + 3 + 3),
        }
    elif stage == "vae":
        mods = {
            "encoder": ShapeEncoder(),
            "decoder": ShapeDecoder(h, w, num_labels=num_labels),
        }
    elif stage == "texture":
        mods = {
            "encoder": TextureEncoder(),
            "generator": TextureGenerator(num_labels=num_labels),
            "discriminator": TextureDiscriminator(num_labels=num_labels),
        }
    elif stage == "classifier":
        mods = {"classifier": FashionClassifier(num_labels=num_labels)}
    else:
        raise ValueError(f"unknown stage {stage!r}")
    if tensors is not None:
        for name, module in mods.items():
            load_module_state(tensors, module, name)
        for module in mods.values():
            module.eval()
    return mods


def train_stage(
    stage: str,
    run: RunConfig,
    train_pairs: Sequence[PairTensors],
    out_dir: Path,
    prior: Optional[Dict[str, Dict[str, torch.nn.Module]]] = None,
) -> Dict[str, torch.nn.Module]:
    """Train one stage, saving its checkpoint and loss CSV under out_dir.

    `prior` carries already-trained stage modules when running `--stage all`;
    missing dependencies are loaded from checkpoints and a MissingStageError
    is raised if they are absent.
    """
    out_dir = Path(out_dir)
    prior = prior or {}
    deps = {}
    for dep in STAGE_DEPS[stage]:
        deps[dep] = prior[dep] if dep in prior else _load_stage_modules(out_dir, dep, run)

    cfg = run.stages[stage]
    if stage == "parsing":
        gen, disc, rows = train_parsing(train_pairs, run, cfg)
        mods = {"generator": gen, "discriminator": disc}
    elif stage == "contour":
        warper, disc, rows = train_contour(train_pairs, run, cfg)
        mods = {"warper": warper, "discriminator": disc}
    elif stage == "correspondence":
        net, rows = train_correspondence(train_pairs, run, cfg, deps["contour"]["warper"])
        mods = {"net": net}
    elif stage == "synthesizer":
        synth, disc, rows = train_synthesizer(
            train_pairs,
            run,
            cfg,
            deps["parsing"]["generator"],
            deps["contour"]["warper"],
            deps["correspondence"]["net"],
        )
        mods = {"synthesizer": synth, "discriminator": disc}
    elif stage == "vae":
        vae, rows = train_vae(train_pairs, run, cfg)
        mods = {"encoder": vae.encoder, "decoder": vae.decoder}
    elif stage == "texture":
        enc, gen, disc, rows = train_texture(train_pairs, run, cfg)
        mods = {"encoder": enc, "generator": gen, "discriminator": disc}
    elif stage == "classifier":
        net, rows = train_classifier(train_pairs, run, cfg)
        mods = {"classifier": net}
    else:
        raise ValueError(f"unknown stage {stage!r}")

    write_loss_csv(out_dir / f"losses_{stage}.csv", LOSS_FIELDS[stage], rows)
    save_checkpoint(
        out_dir / f"{stage}.ckpt",
        stage,
        mods,
        config=run.to_dict(),
        meta={"num_train_pairs": len(train_pairs)},
    )
    return mods


def check_stage_preconditions(stages: Sequence[str], out_dir: Path) -> None:
    """Fail fast when a requested stage needs a checkpoint that is absent.

    Dependencies satisfied by an earlier entry of `stages` itself do not need
    a checkpoint on disk.
    """
    out_dir = Path(out_dir)
    planned = set()
    for s in stages:
        for dep in STAGE_DEPS[s]:
            path = out_dir / f"{dep}.ckpt"
            if dep not in planned and not path.exists():
                raise MissingStageError(
                    f"stage '{s}' requires checkpoint {path.name}; train it first"
                )
        planned.add(s)


def dump_intermediates(
    pairs: Sequence[PairTensors],
    modules: Dict[str, Dict[str, torch.nn.Module]],
    dump_dir: Path,
    limit: int = 8,
) -> None:
    """Write per-pair warped masks and sampled textures as PNGs for debugging."""
    from .dataset_io import save_image, save_mask
    from .torch_utils import tensor_to_image, tensor_to_mask

    dump_dir = Path(dump_dir)
    dump_dir.mkdir(parents=True, exist_ok=True)
    warper = modules["contour"]["warper"]
    net = modules["correspondence"]["net"]
    warper.eval()
    net.eval()
    subset = list(pairs)[:limit]
    contours = predicted_contours(subset, warper)
    textures = rendered_textures(subset, contours, net, net.grid)
    for p, contour, texture in zip(subset, contours, textures):
        pair_id = p.pair.pair_id or "pair"
        save_mask(dump_dir / f"{pair_id}_warped_mask.png", tensor_to_mask(contour))
        save_image(dump_dir / f"{pair_id}_warped_texture.png", tensor_to_image(texture))


def train(
    stage: str,
    run: RunConfig,
    data_dir: Path,
    out_dir: Path,
    dump_dir: Optional[Path] = None,
) -> Dict[str, Dict[str, torch.nn.Module]]:
    """Entry point behind `train --stage {1,2,3,all}`.

    Numbered stages map to blocks of the pipeline (1 = parsing, 2 = contour +
    correspondence + synthesizer, 3 = shape/texture/classifier); individual
    stage names are accepted too. Writes checkpoints, loss CSVs, and the run
    manifest under out_dir.
    """
    torch.set_num_threads(1)
    stages = resolve_stages(stage)
    check_stage_preconditions(stages, out_dir)
    dataset = ensure_dataset(data_dir, run)
    train_split, _ = split_dataset(dataset, run)
    pairs = [prepare_pair(p) for p in train_split]
    trained: Dict[str, Dict[str, torch.nn.Module]] = {}
    for s in stages:
        trained[s] = train_stage(s, run, pairs, out_dir, prior=trained)
    write_manifest(Path(out_dir), config_hash=config_hash(run), seed=run.seed)
    if dump_dir is not None:
        for dep in ("contour", "correspondence"):
            if dep not in trained:
                trained[dep] = _load_stage_modules(Path(out_dir), dep, run)
        dump_intermediates(pairs, trained, dump_dir)
    return trained
