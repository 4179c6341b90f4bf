"""Command-line interface.

Usage::

    renalmorph phantom --count 20 --seed 7 -o data/
    renalmorph assemble data/exam_000/gt.manifest.json -o gt.bvol
    renalmorph postprocess pred.bvol --pipeline steps.json -o post.bvol
    renalmorph evaluate --pred post.bvol --gt gt.bvol
    renalmorph crossval --dataset data/ --folds 5 --val 10 --seed 17 -o results/
    renalmorph histogram results/report.csv --bin-width 0.1 -o hist.csv

Exit status is 0 on success, 1 on I/O or validation errors and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import evaluation, formats
from .metrics import score_exam
from .morphology import DEFAULT_PIPELINE, PipelineSpec, run_pipeline
from .phantom import PerturbationSpec, generate_ground_truth, perturb, random_phantom_spec

__all__ = ["main", "build_parser"]


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError(f"seed must fit in an unsigned 64-bit integer: {text}")
    return value


def _load_pipeline(path) -> PipelineSpec:
    if path is None:
        return DEFAULT_PIPELINE
    return PipelineSpec.from_json(Path(path).read_text(encoding="utf-8"))


def cmd_assemble(args) -> None:
    formats.write_volume(formats.load_manifest_volume(args.manifest), args.out)


def cmd_postprocess(args) -> None:
    spec = _load_pipeline(args.pipeline)
    formats.write_volume(run_pipeline(formats.read_volume(args.volume), spec), args.out)


def cmd_evaluate(args) -> None:
    gt = formats.read_volume(args.gt)
    pred = formats.read_volume(args.pred)
    s = score_exam(gt, pred, pred, args.match_iou)
    rows = [["dice", "iou", "tp", "fp", "fn"], [repr(s.dice_post), repr(s.iou_post), str(s.tp), str(s.fp), str(s.fn)]]
    text = formats.write_csv(rows, args.out)
    if args.out is None:
        sys.stdout.write(text)


def cmd_crossval(args) -> None:
    spec = _load_pipeline(args.pipeline)
    scores = []
    for exam_dir in formats.discover_exams(args.dataset):
        gt = formats.load_manifest_volume(exam_dir / formats.GT_MANIFEST)
        raw = formats.load_manifest_volume(exam_dir / formats.PRED_MANIFEST)
        post = run_pipeline(raw, spec)
        scores.append(score_exam(gt, raw, post, args.match_iou, exam_id=exam_dir.name))
    if not scores:
        raise ValueError(f"no exams found under {args.dataset}")
    assignment = evaluation.split_folds([s.exam_id for s in scores], args.folds, args.val, args.seed)
    report = evaluation.aggregate(scores, assignment, min_fold_size=1)
    out = Path(args.out)
    formats.write_csv(evaluation.fold_rows(assignment), out / "folds.csv")
    formats.write_csv(evaluation.report_rows(scores, assignment), out / "report.csv")
    formats.write_csv(evaluation.summary_rows(report), out / "summary.csv")
    print(
        f"{len(scores)} exams, {args.folds} folds: dice {report.average_row.raw.mean_dice:.3f} -> "
        f"{report.average_row.post.mean_dice:.3f} ({report.delta_dice_pp:+.2f} pp), iou "
        f"{report.average_row.raw.mean_iou:.3f} -> {report.average_row.post.mean_iou:.3f} "
        f"({report.delta_iou_pp:+.2f} pp)"
    )


def cmd_histogram(args) -> None:
    rows = formats.read_csv(args.report)
    with open(args.report, newline="", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if header != list(evaluation.REPORT_COLUMNS):
        raise formats.FormatError(f"{args.report}: not a report CSV (header {header})")
    try:
        dice = [float(r[f"dice_{args.variant}"]) for r in rows]
        iou = [float(r[f"iou_{args.variant}"]) for r in rows]
    except (KeyError, ValueError) as exc:
        raise formats.FormatError(f"{args.report}: not a report CSV ({exc})") from None
    text = formats.write_csv(evaluation.histogram_rows(dice, iou, args.bin_width), args.out)
    if args.out is None:
        sys.stdout.write(text)
    if args.threshold is not None:
        n = evaluation.count_at_or_above(dice, args.threshold)
        print(f"dice >= {args.threshold}: {n} of {len(dice)} exams", file=sys.stderr if args.out is None else sys.stdout)


def cmd_phantom(args) -> None:
    if args.count < 1:
        raise ValueError(f"--count must be positive, got {args.count}")
    out = Path(args.out)
    children = np.random.SeedSequence(args.seed).spawn(args.count)
    width = len(str(max(args.count - 1, 0)))
    for i, child in enumerate(children):
        phantom_seed, perturb_seed = (int(x) for x in child.generate_state(2, dtype=np.uint64))
        spec = random_phantom_spec(phantom_seed, args.width, args.height)
        gt = generate_ground_truth(spec)
        pred = perturb(
            gt,
            PerturbationSpec(
                speckle_count=args.speckle,
                speckle_max_size=args.speckle_size,
                hole_count=args.holes,
                hole_max_radius=args.hole_radius,
                flip_probability=args.flip_prob,
                dropped_slices=args.drop,
                seed=perturb_seed,
            ),
        )
        formats.write_exam(out, f"exam_{i:0{max(width, 3)}d}", gt, pred)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="renalmorph", description="3D kidney mask post-processing and evaluation")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("assemble", help="stack a manifest's slice masks into a BVOL volume")
    p.add_argument("manifest", help="exam manifest JSON")
    p.add_argument("-o", "--out", required=True, help="output .bvol path")
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("postprocess", help="run a morphology pipeline on a BVOL volume")
    p.add_argument("volume", help="input .bvol path")
    p.add_argument("--pipeline", help="pipeline JSON (default: built-in pipeline)")
    p.add_argument("-o", "--out", required=True, help="output .bvol path")
    p.set_defaults(func=cmd_postprocess)

    p = sub.add_parser("evaluate", help="score a predicted volume against ground truth")
    p.add_argument("--pred", required=True, help="predicted .bvol")
    p.add_argument("--gt", required=True, help="ground-truth .bvol")
    p.add_argument("--match-iou", type=float, default=0.5, help="slice instance match threshold (default 0.5)")
    p.add_argument("-o", "--out", help="output CSV (default: stdout)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("crossval", help="post-process and score a dataset under k-fold cross-validation")
    p.add_argument("--dataset", required=True, help="dataset root with <exam>/gt.manifest.json and pred.manifest.json")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--val", type=int, default=10, help="validation exams per fold")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--pipeline", help="pipeline JSON (default: built-in pipeline)")
    p.add_argument("--match-iou", type=float, default=0.5)
    p.add_argument("-o", "--out", required=True, help="output directory for folds.csv, report.csv, summary.csv")
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("histogram", help="bin report scores into a histogram CSV")
    p.add_argument("report", help="report.csv written by crossval")
    p.add_argument("--bin-width", type=float, default=0.1)
    p.add_argument("--variant", choices=("raw", "post"), default="post")
    p.add_argument("--threshold", type=float, help="also print how many exams reach this dice")
    p.add_argument("-o", "--out", help="output CSV (default: stdout)")
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("phantom", help="write a synthetic dataset of ground-truth and perturbed masks")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--speckle", type=int, default=4, help="speckle blobs per exam")
    p.add_argument("--speckle-size", type=int, default=33, help="max voxels per speckle blob")
    p.add_argument("--holes", type=int, default=2)
    p.add_argument("--hole-radius", type=int, default=3)
    p.add_argument("--flip-prob", type=float, default=0.05, help="surface voxel flip probability")
    p.add_argument("--drop", type=int, default=0, help="kidney slices to blank out")
    p.add_argument("-o", "--out", required=True, help="dataset directory")
    p.set_defaults(func=cmd_phantom)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (OSError, ValueError) as exc:
        print(f"renalmorph {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
