"""Cross-validation folds, per-fold aggregation and score histograms.

Fold shuffling is a Fisher-Yates shuffle driven by numpy's PCG64 bit
generator (raw 64-bit outputs, which are stable across numpy releases),
with bounded draws by rejection sampling. Only ``random_raw`` is used, so
the assignment does not depend on numpy's higher-level sampling code.
"""

from __future__ import annotations

import bisect
import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .metrics import ExamScore

__all__ = [
    "TRAIN",
    "VAL",
    "TEST",
    "FoldAssignment",
    "MetricSummary",
    "FoldStats",
    "FoldReport",
    "seeded_shuffle",
    "split_folds",
    "aggregate",
    "histogram",
    "count_at_or_above",
    "REPORT_COLUMNS",
    "report_rows",
    "summary_rows",
    "fold_rows",
    "histogram_rows",
]

TRAIN, VAL, TEST = "train", "val", "test"
_U64 = 1 << 64


def _check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < _U64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def seeded_shuffle(items: Sequence, seed: int) -> list:
    """Deterministic Fisher-Yates shuffle (PCG64 raw stream, rejection-bounded draws)."""
    bits = np.random.PCG64(_check_seed(seed))
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        bound = i + 1
        limit = _U64 - (_U64 % bound)
        while True:
            r = int(bits.random_raw())
            if r < limit:
                break
        j = r % bound
        out[i], out[j] = out[j], out[i]
    return out


@dataclass(frozen=True)
class FoldAssignment:
    """Role of every exam in every fold; ``roles[exam_id][f]`` is train, val or test."""

    fold_count: int
    seed: int
    exam_ids: tuple
    roles: dict

    def ids(self, fold: int, role: str) -> list:
        return [e for e in self.exam_ids if self.roles[e][fold] == role]

    def test_fold(self, exam_id: str) -> int:
        return self.roles[exam_id].index(TEST)

    def sizes(self, fold: int) -> dict:
        return {role: len(self.ids(fold, role)) for role in (TRAIN, VAL, TEST)}


def split_folds(exam_ids: Iterable[str], fold_count: int = 5, val_size: int = 10, seed: int = 0) -> FoldAssignment:
    """Split exams into ``fold_count`` disjoint test partitions.

    The shuffled order is cut into contiguous test blocks whose sizes differ
    by at most one (earlier folds take the remainder). Each fold's
    validation set is the ``val_size`` exams that follow its test block in
    the shuffled order, wrapping around; everything else is training.
    """
    ids = list(exam_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("exam ids must be unique")
    if isinstance(fold_count, bool) or not isinstance(fold_count, int) or fold_count < 2:
        raise ValueError(f"fold_count must be an integer >= 2, got {fold_count!r}")
    if isinstance(val_size, bool) or not isinstance(val_size, int) or val_size < 0:
        raise ValueError(f"val_size must be a non-negative integer, got {val_size!r}")
    n = len(ids)
    if n < fold_count:
        raise ValueError(f"need at least {fold_count} exams for {fold_count} folds, got {n}")
    largest_test = -(-n // fold_count)
    if largest_test + val_size > n:
        raise ValueError(f"val size {val_size} does not fit beside a test fold of {largest_test} in {n} exams")

    order = seeded_shuffle(ids, seed)
    base, rem = divmod(n, fold_count)
    roles = {e: [TRAIN] * fold_count for e in ids}
    start = 0
    for f in range(fold_count):
        end = start + base + (1 if f < rem else 0)
        for e in order[start:end]:
            roles[e][f] = TEST
        for k in range(val_size):
            roles[order[(end + k) % n]][f] = VAL
        start = end
    return FoldAssignment(fold_count, int(seed), tuple(ids), {e: tuple(r) for e, r in roles.items()})


@dataclass(frozen=True)
class MetricSummary:
    mean_dice: float
    sd_dice: float
    mean_iou: float
    sd_iou: float


@dataclass(frozen=True)
class FoldStats:
    """Statistics over one group of test exams. ``fold_index`` is None for the pooled row."""

    fold_index: int | None
    n: int
    raw: MetricSummary
    post: MetricSummary

    @property
    def delta_dice_pp(self) -> float:
        return (self.post.mean_dice - self.raw.mean_dice) * 100

    @property
    def delta_iou_pp(self) -> float:
        return (self.post.mean_iou - self.raw.mean_iou) * 100


@dataclass(frozen=True)
class FoldReport:
    """Per-fold rows, the pooled average row, and the mean of the fold rows.

    ``average_row`` pools every test exam (so it is the mean over exams, not
    over folds). ``mean_of_folds`` averages the per-fold means and the
    per-fold SDs.
    """

    per_fold: tuple
    average_row: FoldStats
    mean_of_folds: tuple

    @property
    def delta_dice_pp(self) -> float:
        return self.average_row.delta_dice_pp

    @property
    def delta_iou_pp(self) -> float:
        return self.average_row.delta_iou_pp


def _sd(values: list) -> float:
    return statistics.stdev(values) if len(values) > 1 else math.nan


def _summary(scores: list, dice_attr: str, iou_attr: str) -> MetricSummary:
    d = [getattr(s, dice_attr) for s in scores]
    j = [getattr(s, iou_attr) for s in scores]
    return MetricSummary(statistics.mean(d), _sd(d), statistics.mean(j), _sd(j))


def _stats(fold_index, scores) -> FoldStats:
    return FoldStats(
        fold_index,
        len(scores),
        _summary(scores, "dice_raw", "iou_raw"),
        _summary(scores, "dice_post", "iou_post"),
    )


def aggregate(scores: Iterable[ExamScore], assignment: FoldAssignment, min_fold_size: int = 2) -> FoldReport:
    """Mean and sample SD (n - 1) of each metric per fold and pooled over all exams.

    A fold with fewer than ``min_fold_size`` scored test exams is an error.
    Passing ``min_fold_size=1`` accepts single-exam folds and reports their
    SD as NaN.
    """
    if min_fold_size < 1:
        raise ValueError(f"min_fold_size must be at least 1, got {min_fold_size}")
    by_id = {}
    for s in scores:
        if s.exam_id not in assignment.roles:
            raise ValueError(f"exam {s.exam_id!r} is scored but not in the fold assignment")
        by_id[s.exam_id] = s
    per_fold = []
    for f in range(assignment.fold_count):
        group = [by_id[e] for e in assignment.ids(f, TEST) if e in by_id]
        if len(group) < min_fold_size:
            raise ValueError(f"fold {f} has {len(group)} scored test exam(s), need at least {min_fold_size}")
        per_fold.append(_stats(f, group))
    pooled = _stats(None, [by_id[e] for e in assignment.exam_ids if e in by_id])

    def mean_of(attr, field):
        return statistics.mean(getattr(getattr(fs, attr), field) for fs in per_fold)

    mean_of_folds = tuple(
        MetricSummary(*(mean_of(variant, f) for f in ("mean_dice", "sd_dice", "mean_iou", "sd_iou")))
        for variant in ("raw", "post")
    )
    return FoldReport(tuple(per_fold), pooled, mean_of_folds)


def _bin_edges(bin_width: float) -> list:
    if not 0 < bin_width <= 1:
        raise ValueError(f"bin_width must be in (0, 1], got {bin_width}")
    # rounding keeps decimal widths such as 0.1 on their intended edges
    n_bins = math.ceil(round(1 / bin_width, 9))
    return [round(k * bin_width, 12) for k in range(n_bins)] + [1.0]


def histogram(values: Iterable[float], bin_width: float = 0.1) -> list:
    """Count values into ``[k*w, (k+1)*w)`` bins over [0, 1]; the last bin is closed at 1.0."""
    edges = _bin_edges(bin_width)
    counts = [0] * (len(edges) - 1)
    for i, v in enumerate(values):
        if not 0 <= v <= 1:
            raise ValueError(f"value at index {i} is outside [0, 1]: {v!r}")
        k = min(bisect.bisect_right(edges, v) - 1, len(counts) - 1)
        counts[k] += 1
    return [(edges[k], edges[k + 1], counts[k]) for k in range(len(counts))]


def count_at_or_above(values: Iterable[float], threshold: float) -> int:
    return sum(1 for v in values if v >= threshold)


REPORT_COLUMNS = ("exam_id", "fold", "role", "dice_raw", "iou_raw", "dice_post", "iou_post", "tp", "fp", "fn")


def _num(x) -> str:
    # shortest round-trip repr: exact and locale independent
    return repr(float(x))


def report_rows(scores: Iterable[ExamScore], assignment: FoldAssignment) -> list:
    """One row per exam for the fold in which it is tested; folds are numbered from 1."""
    rows = [list(REPORT_COLUMNS)]
    by_id = {s.exam_id: s for s in scores}
    for e in assignment.exam_ids:
        if e not in by_id:
            continue
        s = by_id[e]
        rows.append([
            e, str(assignment.test_fold(e) + 1), TEST,
            _num(s.dice_raw), _num(s.iou_raw), _num(s.dice_post), _num(s.iou_post),
            str(s.tp), str(s.fp), str(s.fn),
        ])
    return rows


def fold_rows(assignment: FoldAssignment) -> list:
    """Every (exam, fold) role, folds numbered from 1."""
    rows = [["exam_id", "fold", "role"]]
    for f in range(assignment.fold_count):
        for e in assignment.exam_ids:
            rows.append([e, str(f + 1), assignment.roles[e][f]])
    return rows


def summary_rows(report: FoldReport) -> list:
    """Table of method x metric rows with per-fold and pooled mean/SD columns.

    Two extra ``delta_pp`` rows carry post-minus-raw mean differences in
    percentage points (SD cells empty).
    """
    k = len(report.per_fold)
    header = ["method", "metric"]
    for f in range(k):
        header += [f"fold_{f + 1}_mean", f"fold_{f + 1}_sd"]
    header += ["average_mean", "average_sd", "mean_of_fold_means", "mean_of_fold_sds"]
    rows = [header]
    mof = dict(zip(("raw", "post"), report.mean_of_folds))
    for variant in ("raw", "post"):
        for metric in ("dice", "iou"):
            row = [variant, metric]
            for fs in (*report.per_fold, report.average_row):
                m = getattr(fs, variant)
                row += [_num(getattr(m, f"mean_{metric}")), _num(getattr(m, f"sd_{metric}"))]
            row += [_num(getattr(mof[variant], f"mean_{metric}")), _num(getattr(mof[variant], f"sd_{metric}"))]
            rows.append(row)
    for metric in ("dice", "iou"):
        row = ["delta_pp", metric]
        for fs in (*report.per_fold, report.average_row):
            row += [_num(getattr(fs, f"delta_{metric}_pp")), ""]
        gap = (getattr(mof["post"], f"mean_{metric}") - getattr(mof["raw"], f"mean_{metric}")) * 100
        row += [_num(gap), ""]
        rows.append(row)
    return rows


def histogram_rows(dice_values: Sequence[float], iou_values: Sequence[float], bin_width: float = 0.1) -> list:
    rows = [["bin_lo", "bin_hi", "count_dice", "count_iou"]]
    for (lo, hi, cd), (_, _, ci) in zip(histogram(dice_values, bin_width), histogram(iou_values, bin_width)):
        rows.append([_num(lo), _num(hi), str(cd), str(ci)])
    return rows
