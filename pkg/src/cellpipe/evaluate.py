"""Detection-to-ground-truth matching, per-class metrics, fold aggregation.

"Accuracy" here is correct-class recall over ground-truth objects at an
IoU threshold (default 0.5): a ground-truth object counts as correct
when some detection overlaps it at or above the threshold AND carries
its class. Matching itself is class-agnostic so misclassifications land
in an informative confusion matrix instead of disappearing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .geometry import ScoredBox, iou_matrix
from .model import Annotation, CellClass, label_map

#: confusion-matrix axis order: the five classes then background.
CLASS_ORDER: tuple[CellClass, ...] = tuple(label_map())
BACKGROUND_INDEX = len(CLASS_ORDER)


@dataclass(frozen=True)
class MatchResult:
    """Greedy assignment of detections to ground-truth boxes."""

    pairs: tuple[tuple[int, int, float], ...]  # (gt index, det index, iou)
    unmatched_gt: tuple[int, ...]
    unmatched_det: tuple[int, ...]
    iou_threshold: float


def match(
    gt: Sequence[Annotation],
    det: Sequence[ScoredBox],
    iou_threshold: float = 0.5,
    class_aware: bool = False,
) -> MatchResult:
    """Greedily pair detections with ground truth, class-agnostically.

    Detections are visited in canonical order (score desc, then ymin,
    xmin, input index); each takes the unmatched ground-truth box of
    highest IoU >= threshold, ties broken by (ymin, xmin, index). The
    resulting pair set does not depend on the detections' input order.

    ``class_aware`` restricts every detection to ground truth of its own
    class (the comparison mode; unlabeled detections then match nothing).
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError("iou_threshold must be in (0, 1]")
    det_order = sorted(
        range(len(det)),
        key=lambda i: (-det[i].score, det[i].box.ymin, det[i].box.xmin, i),
    )
    overlaps = iou_matrix([a.box for a in gt], [d.box for d in det])

    gt_taken = [False] * len(gt)
    pairs: list[tuple[int, int, float]] = []
    unmatched_det: list[int] = []
    for d_idx in det_order:
        best: int | None = None
        for g_idx in range(len(gt)):
            if gt_taken[g_idx]:
                continue
            if class_aware and det[d_idx].label is not gt[g_idx].label:
                continue
            ov = overlaps[g_idx, d_idx]
            if ov < iou_threshold:
                continue
            if best is None:
                best = g_idx
                continue
            current = overlaps[best, d_idx]
            if ov > current or (
                ov == current
                and (gt[g_idx].box.ymin, gt[g_idx].box.xmin, g_idx)
                < (gt[best].box.ymin, gt[best].box.xmin, best)
            ):
                best = g_idx
        if best is None:
            unmatched_det.append(d_idx)
        else:
            gt_taken[best] = True
            pairs.append((best, d_idx, float(overlaps[best, d_idx])))

    pairs.sort()
    return MatchResult(
        pairs=tuple(pairs),
        unmatched_gt=tuple(i for i, taken in enumerate(gt_taken) if not taken),
        unmatched_det=tuple(sorted(unmatched_det)),
        iou_threshold=iou_threshold,
    )


@dataclass(frozen=True)
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    class_confusions: int = 0  # matched but wrong predicted class (gt side)


@dataclass(frozen=True)
class EvaluationReport:
    """Per-class counts, 6x6 confusion matrix and overall accuracy.

    Confusion rows are ground-truth classes, columns predicted classes;
    the sixth row/column is background: unmatched ground truth lands in
    the background column (missed), unmatched detections in the
    background row (false alarms).
    """

    per_class: Mapping[CellClass, ClassCounts]
    confusion: tuple[tuple[int, ...], ...]
    accuracy: float
    precision: Mapping[CellClass, float]
    recall: Mapping[CellClass, float]
    n_gt: int
    n_det: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "n_gt": self.n_gt,
            "n_det": self.n_det,
            "confusion": [list(row) for row in self.confusion],
            "per_class": {
                cls.token: {
                    "tp": c.tp,
                    "fp": c.fp,
                    "fn": c.fn,
                    "class_confusions": c.class_confusions,
                    "precision": self.precision[cls],
                    "recall": self.recall[cls],
                }
                for cls, c in self.per_class.items()
            },
        }


def _report_from_confusion(confusion: np.ndarray) -> EvaluationReport:
    n = len(CLASS_ORDER)
    n_gt = int(confusion[:n, :].sum())
    n_det = int(confusion[:, :n].sum())
    correct = int(np.trace(confusion[:n, :n]))
    accuracy = correct / n_gt if n_gt else 1.0

    per_class: dict[CellClass, ClassCounts] = {}
    precision: dict[CellClass, float] = {}
    recall: dict[CellClass, float] = {}
    for idx, cls in enumerate(CLASS_ORDER):
        tp = int(confusion[idx, idx])
        fn = int(confusion[idx, :].sum()) - tp
        fp = int(confusion[:, idx].sum()) - tp
        confused = int(confusion[idx, :n].sum()) - tp
        per_class[cls] = ClassCounts(tp=tp, fp=fp, fn=fn, class_confusions=confused)
        precision[cls] = tp / (tp + fp) if tp + fp else 1.0
        recall[cls] = tp / (tp + fn) if tp + fn else 1.0

    return EvaluationReport(
        per_class=per_class,
        confusion=tuple(tuple(int(v) for v in row) for row in confusion),
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        n_gt=n_gt,
        n_det=n_det,
    )


def score(
    match_result: MatchResult, gt: Sequence[Annotation], det: Sequence[ScoredBox]
) -> EvaluationReport:
    """Turn one image's match result into a report."""
    confusion = confusion_increment(match_result, gt, det)
    return _report_from_confusion(confusion)


def confusion_increment(
    match_result: MatchResult, gt: Sequence[Annotation], det: Sequence[ScoredBox]
) -> np.ndarray:
    """6x6 confusion contribution of one image."""
    idx = {cls: i for i, cls in enumerate(CLASS_ORDER)}
    confusion = np.zeros((6, 6), dtype=np.int64)
    for g_idx, d_idx, _ in match_result.pairs:
        d_label = det[d_idx].label
        col = idx[d_label] if d_label is not None else BACKGROUND_INDEX
        confusion[idx[gt[g_idx].label], col] += 1
    for g_idx in match_result.unmatched_gt:
        confusion[idx[gt[g_idx].label], BACKGROUND_INDEX] += 1
    for d_idx in match_result.unmatched_det:
        d_label = det[d_idx].label
        col = idx[d_label] if d_label is not None else BACKGROUND_INDEX
        confusion[BACKGROUND_INDEX, col] += 1
    return confusion


def evaluate_images(
    gt_by_image: Mapping[str, Sequence[Annotation]],
    det_by_image: Mapping[str, Sequence[ScoredBox]],
    iou_threshold: float = 0.5,
    class_aware: bool = False,
) -> EvaluationReport:
    """Evaluate a whole image set: per-image matching, pooled counts."""
    confusion = np.zeros((6, 6), dtype=np.int64)
    for image_id in sorted(gt_by_image):
        gt = list(gt_by_image[image_id])
        det = list(det_by_image.get(image_id, ()))
        m = match(gt, det, iou_threshold, class_aware)
        confusion += confusion_increment(m, gt, det)
    for image_id in sorted(set(det_by_image) - set(gt_by_image)):
        det = list(det_by_image[image_id])
        m = match([], det, iou_threshold, class_aware)
        confusion += confusion_increment(m, [], det)
    return _report_from_confusion(confusion)


@dataclass(frozen=True)
class FoldAggregate:
    """Cross-validation summary: per-fold accuracies, mean and sample std."""

    per_fold_accuracy: tuple[float, ...]
    mean: float
    std: float
    std_undefined: bool = field(default=False)

    def formatted(self) -> str:
        return f"{self.mean:.3f} ± {self.std:.3f}"


def aggregate(reports: Sequence[EvaluationReport] | Sequence[float]) -> FoldAggregate:
    """Mean and sample (n-1) standard deviation of per-fold accuracies.

    A single report yields std 0 with the std_undefined flag set.
    """
    if len(reports) == 0:
        raise ValueError("nothing to aggregate")
    accuracies = tuple(
        float(r.accuracy) if isinstance(r, EvaluationReport) else float(r) for r in reports
    )
    mean = float(np.mean(accuracies))
    if len(accuracies) == 1:
        return FoldAggregate(per_fold_accuracy=accuracies, mean=mean, std=0.0, std_undefined=True)
    std = float(np.std(accuracies, ddof=1))
    return FoldAggregate(per_fold_accuracy=accuracies, mean=mean, std=std)
