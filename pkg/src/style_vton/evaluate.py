"""Evaluation entry points: directory metrics, batch inference, held-out scoring.

Reports are written with sorted keys so repeated runs of the same inputs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import warnings
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import torch

from .checkpoint import manifest_hash
from .core import DatasetPair
from .dataset_io import list_pair_dirs, load_image, load_pair, save_image
from .inference import TryOnPipeline
from .losses import correspondence_recon_loss
from .metrics import (
    ab_aggregate,
    classifier_id,
    classify_texture_probs,
    inception_score,
    load_votes_csv,
    ssim,
    train_texture_classifier,
)
from .networks import CorrespondenceNet
from .texture_map import bilinear_sample_torch
from .training import (
    PairTensors,
    _texel_targets,
    dump_intermediates,
    ensure_dataset,
    predicted_contours,
    prepare_pair,
    split_dataset,
)

EVAL_CLASSIFIER_SEED = 7


def _write_report(report: dict, report_path: Path, pair_rows: Sequence[dict]) -> None:
    report_path = Path(report_path)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    csv_path = report_path.with_name("metrics.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair_id", "ssim"])
        for row in pair_rows:
            writer.writerow([row["pair_id"], repr(row["ssim"])])


def _metric_report(
    names: Sequence[str],
    preds: Sequence[np.ndarray],
    gts: Sequence[np.ndarray],
    votes_path: Optional[Path] = None,
):
    pair_rows = []
    for name, pred, gt in zip(names, preds, gts):
        pair_rows.append({"pair_id": name, "ssim": ssim(pred, gt)})
    texture_clf = train_texture_classifier(seed=EVAL_CLASSIFIER_SEED)
    probs = classify_texture_probs(texture_clf, list(preds))
    is_mean, is_std = inception_score(probs, splits=min(10, len(preds)))
    report = {
        "ssim_mean": float(np.mean([r["ssim"] for r in pair_rows])),
        "is_mean": is_mean,
        "is_std": is_std,
        "n_images": len(pair_rows),
        "ssim_per_pair": {r["pair_id"]: r["ssim"] for r in pair_rows},
        "classifier_id": classifier_id(texture_clf),
    }
    if votes_path is not None:
        report["ab_table"] = ab_aggregate(load_votes_csv(votes_path))
    return report, pair_rows


def evaluate_dirs(
    pred_dir: Path,
    gt_dir: Path,
    report_path: Optional[Path] = None,
    votes_path: Optional[Path] = None,
) -> dict:
    """Score a directory of predictions against ground truth by filename.

    Computes per-image SSIM and the inception-style score of the predictions
    and writes the metric report (plus metrics.csv) when a path is given.
    """
    torch.set_num_threads(1)
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    pred_files = {p.name: p for p in sorted(pred_dir.glob("*.png"))}
    gt_files = {p.name: p for p in sorted(gt_dir.glob("*.png"))}
    common = sorted(set(pred_files) & set(gt_files))
    for name in sorted(set(pred_files) ^ set(gt_files)):
        warnings.warn(f"{name} present on only one side; skipped")
    if not common:
        raise ValueError(f"no matching .png pairs between {pred_dir} and {gt_dir}")
    preds = [load_image(pred_files[n]).data for n in common]
    gts = [load_image(gt_files[n]).data for n in common]
    report, pair_rows = _metric_report(common, preds, gts, votes_path)
    if report_path is not None:
        _write_report(report, report_path, pair_rows)
    return report


def batch_infer(
    ckpt_dir: Path,
    pairs_dir: Path,
    out_dir: Path,
    report_name: str = "report.json",
    dump_dir: Optional[Path] = None,
) -> dict:
    """Run try-on over every pair directory and score the results.

    Writes `<pair_id>_tryon.png` per readable pair into out_dir, skipping
    unreadable pairs with a warning; more than half skipped is an error, as is
    an empty input directory. The metric report lands at out_dir/report_name.
    """
    torch.set_num_threads(1)
    pairs_dir, out_dir = Path(pairs_dir), Path(out_dir)
    pipeline = TryOnPipeline.from_checkpoint_dir(ckpt_dir)
    pair_dirs = list_pair_dirs(pairs_dir)
    if not pair_dirs:
        raise RuntimeError(f"no pairs found under {pairs_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)

    names: List[str] = []
    preds: List[np.ndarray] = []
    gts: List[np.ndarray] = []
    loaded: List[DatasetPair] = []
    skipped = 0
    for pair_dir in pair_dirs:
        try:
            pair = load_pair(pair_dir)
        except Exception as exc:  # unreadable pair: report and move on
            warnings.warn(f"skipping unreadable pair {pair_dir.name}: {exc}")
            skipped += 1
            continue
        result = pipeline.tryon(
            pair.person, pair.parsing_gt, pair.pose, pair.garment, pair.garment_mask
        )
        save_image(out_dir / f"{pair.pair_id}_tryon.png", result.output)
        names.append(pair.pair_id)
        preds.append(result.output.data)
        gts.append(pair.tryon_gt.data)
        loaded.append(pair)
    if skipped * 2 > len(pair_dirs):
        raise RuntimeError(
            f"{skipped} of {len(pair_dirs)} pairs were unreadable; aborting"
        )

    report, pair_rows = _metric_report(names, preds, gts)
    report["n_skipped"] = skipped
    report["manifest_hash"] = manifest_hash(ckpt_dir)
    _write_report(report, out_dir / report_name, pair_rows)
    if dump_dir is not None:
        tensors = [prepare_pair(p) for p in loaded]
        dump_intermediates(tensors, pipeline.modules, dump_dir, limit=len(tensors))
    return report


def _recon_losses(
    pairs: Sequence[PairTensors], contours, net: CorrespondenceNet, grid: int
) -> List[float]:
    vals = []
    with torch.no_grad():
        for p, contour in zip(pairs, contours):
            t = _texel_targets(p, contour, grid)
            if t is None:
                continue
            _, _, validity, target = t
            coords = net(contour[None])[0].permute(1, 2, 0)
            sampled = bilinear_sample_torch(p.garment, coords)
            vals.append(float(correspondence_recon_loss(sampled, target, validity)))
    return vals


def evaluate_checkpoints(
    ckpt_dir: Path,
    data_dir: Path,
    report_path: Optional[Path] = None,
    votes_path: Optional[Path] = None,
) -> dict:
    """Score a trained pipeline on its held-out pairs and write the report.

    Adds the stage-2 correspondence reconstruction drop (trained net vs a
    freshly seeded one) on top of the directory metrics.
    """
    torch.set_num_threads(1)
    pipeline = TryOnPipeline.from_checkpoint_dir(ckpt_dir)
    run = pipeline.run
    dataset = ensure_dataset(Path(data_dir), run)
    _, eval_split = split_dataset(dataset, run)
    if not eval_split:
        raise ValueError("no held-out pairs; dataset too small for evaluation")

    names, preds, gts = [], [], []
    for pair in eval_split:
        result = pipeline.tryon(
            pair.person, pair.parsing_gt, pair.pose, pair.garment, pair.garment_mask
        )
        names.append(pair.pair_id)
        preds.append(result.output.data)
        gts.append(pair.tryon_gt.data)
    report, pair_rows = _metric_report(names, preds, gts, votes_path)

    # correspondence gain: trained net vs a freshly initialized one on the
    # same held-out masks
    pairs_t = [prepare_pair(p) for p in eval_split]
    contours = predicted_contours(pairs_t, pipeline.modules["contour"]["warper"])
    trained_net = pipeline.modules["correspondence"]["net"]
    torch.manual_seed(run.seed * 10_000 + 2)
    fresh_net = CorrespondenceNet(
        grid=run.grid, image_height=run.image_height, image_width=run.image_width
    )
    fresh_net.eval()
    recon_trained = _recon_losses(pairs_t, contours, trained_net, run.grid)
    recon_init = _recon_losses(pairs_t, contours, fresh_net, run.grid)
    mean_trained = float(np.mean(recon_trained)) if recon_trained else 0.0
    mean_init = float(np.mean(recon_init)) if recon_init else 0.0

    report.update(
        {
            "checkpoint_dir": str(ckpt_dir),
            "recon_loss_trained": mean_trained,
            "recon_loss_init": mean_init,
            "recon_drop": 1.0 - mean_trained / mean_init if mean_init > 0 else 0.0,
            "profile": run.profile,
            "seed": run.seed,
            "manifest_hash": manifest_hash(ckpt_dir),
        }
    )
    if report_path is not None:
        _write_report(report, report_path, pair_rows)
    return report
