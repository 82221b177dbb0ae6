"""Detection and event evaluation: confusion counts, precision/recall/F1,
PR curves, average precision and mAP.

Division-by-zero cases (no predictions, no truths) yield ``None`` rather
than 0 or NaN so reports can render them as a honest blank.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .geometry import BoundingBox, Detection, iou


@dataclass(frozen=True, slots=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if self.tp < 0 or self.fp < 0 or self.fn < 0:
            raise ValueError(f"counts must be >= 0, got {self}")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def precision(c: ConfusionCounts) -> Optional[float]:
    """tp / (tp + fp); None when no predictions were made."""
    denom = c.tp + c.fp
    if denom == 0:
        return None
    return c.tp / denom


def recall(c: ConfusionCounts) -> Optional[float]:
    """tp / (tp + fn); None when there are no ground truths."""
    denom = c.tp + c.fn
    if denom == 0:
        return None
    return c.tp / denom


def f1(p: Optional[float], r: Optional[float]) -> Optional[float]:
    """Harmonic mean of precision and recall; None propagates."""
    if p is None or r is None or p + r == 0:
        return None
    return 2.0 * p * r / (p + r)


@dataclass(frozen=True, slots=True)
class MatchResult:
    counts: ConfusionCounts
    matches: tuple  # (prediction index, truth index) pairs, in match order


def match_detections(
    predictions: Sequence[Detection],
    truths: Sequence[BoundingBox],
    iou_threshold: float = 0.5,
) -> MatchResult:
    """Greedy confidence-ordered matching of predictions to ground truths.

    Predictions are processed in descending confidence (stable on ties);
    each claims the unmatched truth of highest IoU if that IoU reaches the
    threshold, else counts as a false positive. Unmatched truths are false
    negatives. Frame separation is the caller's job: pass one frame's
    predictions and truths per call (counts add across frames).
    """
    if not (0.0 < iou_threshold <= 1.0) or math.isnan(iou_threshold):
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold!r}")
    order = sorted(range(len(predictions)), key=lambda i: -predictions[i].confidence)
    unmatched = set(range(len(truths)))
    matches = []
    fp = 0
    for pi in order:
        box = predictions[pi].bbox
        best_iou = 0.0
        best_ti = None
        for ti in sorted(unmatched):
            v = iou(box, truths[ti])
            if v > best_iou:
                best_iou = v
                best_ti = ti
        if best_ti is not None and best_iou >= iou_threshold:
            matches.append((pi, best_ti))
            unmatched.discard(best_ti)
        else:
            fp += 1
    counts = ConfusionCounts(tp=len(matches), fp=fp, fn=len(unmatched))
    return MatchResult(counts=counts, matches=tuple(matches))


@dataclass(frozen=True, slots=True)
class PRCurve:
    """(recall, precision) points swept over descending confidence thresholds."""

    points: tuple  # of (recall, precision)

    def __post_init__(self):
        if not isinstance(self.points, tuple):
            object.__setattr__(self, "points", tuple(self.points))
        recalls = [r for r, _p in self.points]
        if any(b < a for a, b in zip(recalls, recalls[1:])):
            raise ValueError("recall must be non-decreasing along the curve")


def pr_curve(
    predictions: Sequence[Detection],
    truths: Sequence[tuple[int, BoundingBox]],
    iou_threshold: float = 0.5,
) -> PRCurve:
    """PR points at every distinct confidence, matching per frame.

    Equivalent to re-running :func:`match_detections` on the predictions at
    or above each distinct score (greedy matching is prefix-stable in
    confidence order), computed in a single sweep.
    """
    if not truths:
        raise ValueError("pr_curve requires at least one ground truth")
    n_truth = len(truths)
    truth_by_frame: dict[int, list[BoundingBox]] = {}
    for fidx, box in truths:
        truth_by_frame.setdefault(fidx, []).append(box)

    order = sorted(range(len(predictions)), key=lambda i: -predictions[i].confidence)
    unmatched = {fidx: set(range(len(bs))) for fidx, bs in truth_by_frame.items()}
    points = []
    tp = 0
    fp = 0
    for rank, pi in enumerate(order):
        pred = predictions[pi]
        pool = truth_by_frame.get(pred.frame_index, ())
        free = unmatched.get(pred.frame_index, set())
        best_iou = 0.0
        best_ti = None
        for ti in sorted(free):
            v = iou(pred.bbox, pool[ti])
            if v > best_iou:
                best_iou = v
                best_ti = ti
        if best_ti is not None and best_iou >= iou_threshold:
            tp += 1
            free.discard(best_ti)
        else:
            fp += 1
        is_last_of_score = (
            rank + 1 == len(order)
            or predictions[order[rank + 1]].confidence != pred.confidence
        )
        if is_last_of_score:
            points.append((tp / n_truth, tp / (tp + fp)))
    return PRCurve(points=tuple(points))


def average_precision(curve: PRCurve) -> float:
    """Area under the monotone precision envelope, integrated exactly over
    recall (each precision replaced by the max at any recall >= its own)."""
    if not curve.points:
        raise ValueError("cannot integrate an empty PR curve")
    envelope = []
    best = 0.0
    for r, p in reversed(curve.points):
        best = max(best, p)
        envelope.append((r, best))
    envelope.reverse()
    ap = 0.0
    prev_r = 0.0
    for r, p in envelope:
        ap += (r - prev_r) * p
        prev_r = r
    return ap


def mean_ap(per_class_ap: Sequence[float]) -> float:
    if not per_class_ap:
        raise ValueError("mean_ap requires at least one class AP")
    return sum(per_class_ap) / len(per_class_ap)


@dataclass(frozen=True, slots=True)
class EvalRow:
    """One report row; derived metrics are computed from counts on access."""

    category: str
    total: int
    counts: ConfusionCounts
    ap: Optional[float] = None

    @property
    def precision(self) -> Optional[float]:
        return precision(self.counts)

    @property
    def recall(self) -> Optional[float]:
        return recall(self.counts)

    @property
    def f1(self) -> Optional[float]:
        return f1(self.precision, self.recall)


@dataclass(frozen=True, slots=True)
class EvalReport:
    rows: tuple  # of EvalRow

    def __post_init__(self):
        if not isinstance(self.rows, tuple):
            object.__setattr__(self, "rows", tuple(self.rows))

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "category": row.category,
                    "total": row.total,
                    "tp": row.counts.tp,
                    "fp": row.counts.fp,
                    "fn": row.counts.fn,
                    "precision": row.precision,
                    "recall": row.recall,
                    "f1": row.f1,
                    "map": row.ap,
                }
                for row in self.rows
            ]
        }

    def render_text(self) -> str:
        header = ("category", "total", "tp", "fp", "fn",
                  "precision", "recall", "f1", "map")
        table = [header]
        for row in self.rows:
            table.append((
                row.category,
                str(row.total),
                str(row.counts.tp),
                str(row.counts.fp),
                str(row.counts.fn),
                _fmt(row.precision),
                _fmt(row.recall),
                _fmt(row.f1),
                _fmt(row.ap),
            ))
        widths = [max(len(r[i]) for r in table) for i in range(len(header))]
        lines = []
        for r in table:
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines)


def _fmt(v: Optional[float]) -> str:
    return "-" if v is None else f"{v:.4f}"
