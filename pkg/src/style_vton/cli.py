"""Command line entry point: train / infer / eval / serve.

Exit codes: 0 success, 2 invalid argument or config, 3 failed precondition
(a required artifact is missing), 1 other runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import (
    STAGE_NAMES,
    config_from_json,
    get_profile,
    resolve_data_dir,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INVALID = 2
EXIT_PRECONDITION = 3

STAGE_CHOICES = ("1", "2", "3", "all") + STAGE_NAMES


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="style-vton",
        description="Three-stage virtual try-on: train stages, run inference, evaluate, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a pipeline stage (1, 2, 3, or all)")
    t.add_argument(
        "--stage",
        default="all",
        choices=STAGE_CHOICES,
        help="1=parsing, 2=garment warp block, 3=style block; fine-grained names also accepted",
    )
    t.add_argument("--config", default=None, help="JSON run configuration (profile + overrides)")
    t.add_argument("--profile", default="toy", choices=("toy", "paper"))
    t.add_argument("--seed", type=int, default=None, help="override the config seed")
    t.add_argument(
        "--dump-intermediates",
        default=None,
        metavar="DIR",
        help="write warped masks/textures for the first train pairs as PNGs",
    )
    t.add_argument(
        "--data", default=None, help="dataset directory (else $STYLE_VTON_DATA, else ./data)"
    )
    t.add_argument("--out", default=None, help="artifact directory (default runs/<profile>-s<seed>)")

    i = sub.add_parser("infer", help="batch try-on over a directory of pairs")
    i.add_argument("--checkpoints", required=True)
    i.add_argument("--data", default=None, help="pairs directory (else $STYLE_VTON_DATA, else ./data)")
    i.add_argument("--out", required=True, help="output directory for try-on images + report")
    i.add_argument("--dump-intermediates", default=None, metavar="DIR")

    e = sub.add_parser("eval", help="score predicted images against ground truth")
    e.add_argument("--pred", required=True, help="directory of predicted .png images")
    e.add_argument("--gt", required=True, help="directory of ground-truth .png images")
    e.add_argument("--report", required=True, help="report json path (metrics.csv lands beside it)")
    e.add_argument("--votes", default=None, help="optional A/B vote csv to aggregate into the report")

    s = sub.add_parser("serve", help="run the HTTP service")
    s.add_argument("--checkpoints", required=True)
    s.add_argument("--data", default=None)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    return parser


def _train(args) -> int:
    from .training import MissingStageError, train

    try:
        if args.config is not None:
            run = config_from_json(Path(args.config))
        else:
            run = get_profile(args.profile, seed=args.seed or 0)
        if args.seed is not None and run.seed != args.seed:
            run = dataclasses.replace(run, seed=args.seed)
    except FileNotFoundError as exc:
        print(f"error: config file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID

    data_dir = resolve_data_dir(args.data)
    out_dir = Path(args.out) if args.out else Path("runs") / f"{run.profile}-s{run.seed}"
    dump = Path(args.dump_intermediates) if args.dump_intermediates else None
    try:
        train(args.stage, run, data_dir, out_dir, dump_dir=dump)
    except MissingStageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"trained stage={args.stage} profile={run.profile} seed={run.seed} -> {out_dir}")
    return EXIT_OK


def _infer(args) -> int:
    from .evaluate import batch_infer

    try:
        report = batch_infer(
            Path(args.checkpoints),
            resolve_data_dir(args.data),
            Path(args.out),
            dump_dir=Path(args.dump_intermediates) if args.dump_intermediates else None,
        )
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(
        "infer n_images={n_images} n_skipped={n_skipped} ssim_mean={ssim_mean}".format(**report)
    )
    return EXIT_OK


def _eval(args) -> int:
    from .evaluate import evaluate_dirs

    try:
        report = evaluate_dirs(
            Path(args.pred),
            Path(args.gt),
            report_path=Path(args.report),
            votes_path=Path(args.votes) if args.votes else None,
        )
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print("eval n_images={n_images} ssim_mean={ssim_mean} is_mean={is_mean}".format(**report))
    return EXIT_OK


def _serve(args) -> int:
    import uvicorn

    from .service import create_app

    try:
        app = create_app(Path(args.checkpoints), resolve_data_dir(args.data))
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"train": _train, "infer": _infer, "eval": _eval, "serve": _serve}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
