"""Walk one style-editing session: encode, nudge toward a color, re-render.

Needs the artifacts produced by quick_pipeline.py (same --out directory). The
session encodes a held-out outfit into per-region shape/texture codes, then
runs gradient ascent on a color-preference score for the torso garment only,
accepting steps that strictly improve the re-rendered image and staying
inside an L2 displacement budget.

    python3 demos/quick_pipeline.py --out demo_run
    python3 demos/edit_session.py --out demo_run --color 0.8 0.2 0.2
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from style_vton.core import LABELS
from style_vton.dataset_io import save_image
from style_vton.inference import TryOnPipeline
from style_vton.style_edit import ColorPreferenceClassifier
from style_vton.training import ensure_dataset, split_dataset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_run", help="directory written by quick_pipeline.py")
    ap.add_argument(
        "--color", nargs=3, type=float, default=(0.85, 0.15, 0.15), metavar=("R", "G", "B")
    )
    ap.add_argument("--region", default="torso-garment", choices=LABELS)
    ap.add_argument("--steps", type=int, default=30)
    ap.add_argument("--step-size", type=float, default=1.0)
    ap.add_argument("--budget", type=float, default=2.0)
    args = ap.parse_args()

    root = Path(args.out)
    pipeline = TryOnPipeline.from_checkpoint_dir(root / "ckpt")
    dataset = ensure_dataset(root / "data", pipeline.run)
    _, eval_split = split_dataset(dataset, pipeline.run)
    pair = eval_split[0]

    print(f"[1/3] encoding pair {pair.pair_id} into per-region style codes")
    code = pipeline.encode_style(pair.tryon_gt, pair.parsing_gt)
    before, before_regions, _ = pipeline.render_code(code)
    save_image(root / "edit_before.png", before)

    target = np.asarray(args.color, dtype=np.float64)
    region_id = LABELS.index(args.region)
    classifier = ColorPreferenceClassifier(target_color=target, region_id=region_id)
    rgb = "({:.2f}, {:.2f}, {:.2f})".format(*target)
    print(f"[2/3] pushing {args.region!r} toward color {rgb} "
          f"(budget {args.budget}, up to {args.steps} steps)")
    result = pipeline.edit_style(
        code,
        (args.region,),
        steps=args.steps,
        step_size=args.step_size,
        budget=args.budget,
        classifier=classifier,
    )
    trace = result.score_trace
    print(f"      accepted {result.steps_accepted} steps, "
          f"score {trace[0]:.4f} -> {trace[-1]:.4f} (strictly increasing)")
    print(f"      code displacement {result.code_delta_norm:.4f} (budget {args.budget})")

    save_image(root / "edit_after.png", result.image)
    before_mask = before_regions.labels == region_id
    after_mask = result.regions.labels == region_id
    if before_mask.any() and after_mask.any():
        d0 = np.linalg.norm(before.data[before_mask].mean(axis=0) - target)
        d1 = np.linalg.norm(result.image.data[after_mask].mean(axis=0) - target)
        print(f"      region mean color distance to target: {d0:.4f} -> {d1:.4f}")
    inside = before_mask | after_mask
    delta = np.abs(result.image.data.astype(np.float64) - before.data.astype(np.float64))
    visible_outside = int((delta.max(axis=2) > 2.0 / 255.0)[~inside].sum())
    print(f"[3/3] mean abs pixel change inside the editable region: {delta[inside].mean():.6f}; "
          f"visibly changed pixels outside it: {visible_outside}")
    print(f"      wrote {root / 'edit_before.png'} and {root / 'edit_after.png'}")


if __name__ == "__main__":
    main()
