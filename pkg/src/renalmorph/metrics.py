"""Overlap metrics and per-slice instance matching."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .morphology._ccl import label_array
from .voxel import BinaryVolume, SliceMask

__all__ = ["ExamScore", "dice", "iou", "slice_instances", "score_exam"]


@dataclass(frozen=True)
class ExamScore:
    exam_id: str
    dice_raw: float
    iou_raw: float
    dice_post: float
    iou_post: float
    tp: int
    fp: int
    fn: int


def _overlap_counts(a: BinaryVolume, b: BinaryVolume):
    if a.dims != b.dims:
        raise ValueError(f"dimension mismatch: {a.dims} vs {b.dims}")
    inter = int(np.count_nonzero(a.voxels & b.voxels))
    return int(np.count_nonzero(a.voxels)), int(np.count_nonzero(b.voxels)), inter


def dice(a: BinaryVolume, b: BinaryVolume) -> float:
    """``2|A&B| / (|A| + |B|)``; two empty volumes score 1.0."""
    na, nb, inter = _overlap_counts(a, b)
    if na + nb == 0:
        return 1.0
    return 2 * inter / (na + nb)


def iou(a: BinaryVolume, b: BinaryVolume) -> float:
    """Jaccard index ``|A&B| / |A|B|``; two empty volumes score 1.0."""
    na, nb, inter = _overlap_counts(a, b)
    union = na + nb - inter
    if union == 0:
        return 1.0
    return inter / union


def _label_2d(bits: np.ndarray):
    # one z-plane under 26-connectivity is exactly 8-connectivity in 2D
    labels, count = label_array(bits[np.newaxis], 26)
    return labels[0], count


def _match(gt_bits: np.ndarray, pred_bits: np.ndarray, match_iou: float):
    gl, ng = _label_2d(gt_bits)
    pl, np_ = _label_2d(pred_bits)
    if ng == 0 or np_ == 0:
        return 0, np_, ng
    gsize = np.bincount(gl.ravel(), minlength=ng + 1)
    psize = np.bincount(pl.ravel(), minlength=np_ + 1)
    both = (gl > 0) & (pl > 0)
    pair = np.bincount(gl[both].astype(np.int64) * (np_ + 1) + pl[both], minlength=(ng + 1) * (np_ + 1))
    candidates = []
    for key in np.flatnonzero(pair):
        g, p = divmod(int(key), np_ + 1)
        inter = int(pair[key])
        score = inter / (int(gsize[g]) + int(psize[p]) - inter)
        if score >= match_iou:
            candidates.append((-score, g, p))
    candidates.sort()
    used_g, used_p = set(), set()
    for _, g, p in candidates:
        if g not in used_g and p not in used_p:
            used_g.add(g)
            used_p.add(p)
    tp = len(used_g)
    return tp, np_ - tp, ng - tp


def slice_instances(gt: SliceMask, pred: SliceMask, match_iou: float = 0.5) -> tuple[int, int, int]:
    """Count ``(tp, fp, fn)`` between 8-connected regions of two slice masks.

    Region pairs are matched greedily in descending IoU (ties go to the
    smaller gt label, then pred label). A pair counts only if its IoU is at
    least ``match_iou``, and each region is matched at most once.
    """
    if not 0 < match_iou <= 1:
        raise ValueError(f"match_iou must be in (0, 1], got {match_iou}")
    if gt.bits.shape != pred.bits.shape:
        raise ValueError(f"dimension mismatch: {gt.width}x{gt.height} vs {pred.width}x{pred.height}")
    return _match(gt.bits, pred.bits, match_iou)


def score_exam(
    gt: BinaryVolume,
    pred_raw: BinaryVolume,
    pred_post: BinaryVolume,
    match_iou: float = 0.5,
    exam_id: str = "",
) -> ExamScore:
    """Volume Dice/IoU before and after post-processing, plus slice-level TP/FP/FN after."""
    if not 0 < match_iou <= 1:
        raise ValueError(f"match_iou must be in (0, 1], got {match_iou}")
    if not gt.dims == pred_raw.dims == pred_post.dims:
        raise ValueError(f"dimension mismatch: {gt.dims}, {pred_raw.dims}, {pred_post.dims}")
    tp = fp = fn = 0
    for z in range(gt.nz):
        g, p = gt.voxels[z], pred_post.voxels[z]
        if not (g.any() or p.any()):
            continue
        t, f_pos, f_neg = _match(g, p, match_iou)
        tp += t
        fp += f_pos
        fn += f_neg
    return ExamScore(
        exam_id=exam_id,
        dice_raw=dice(gt, pred_raw),
        iou_raw=iou(gt, pred_raw),
        dice_post=dice(gt, pred_post),
        iou_post=iou(gt, pred_post),
        tp=tp,
        fp=fp,
        fn=fn,
    )
