"""The streaming analysis pipeline: track, classify huddling, flag inactivity,
emit coalesced anomaly events; plus the evaluation drivers behind the CLI.

Frame processing is strictly sequential (the tracker owns the frame order);
memory stays bounded by active tracks times the activity window regardless of
stream length, so million-frame streams are fine.
"""

import math
from dataclasses import dataclass, field

from typing import Iterable, Optional, Sequence

from .activity import ActivityConfig, ActivityMonitor
from .geometry import BoundingBox, Detection, FrameDetections
from .huddling import HuddleConfig, classify_frame
from .metrics import (
    ConfusionCounts,
    EvalReport,
    EvalRow,
    average_precision,
    match_detections,
    mean_ap,
    pr_curve,
)
from .tracker import CentroidTracker, TrackerConfig

HUDDLING = "huddling"
INACTIVITY = "inactivity"


@dataclass(frozen=True, slots=True)
class AnomalyEvent:
    """A huddling or inactivity finding over a frame span.

    ``value`` is the maximum neighbor count for huddling and the (minimum)
    activity level for inactivity; inactivity events carry exactly one
    track id, huddling events the union of involved tracks (possibly empty).
    """

    kind: str
    frame_start: int
    frame_end: int
    track_ids: frozenset
    value: float

    def __post_init__(self):
        if self.kind not in (HUDDLING, INACTIVITY):
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.frame_start > self.frame_end:
            raise ValueError(
                f"frame_start {self.frame_start} > frame_end {self.frame_end}"
            )
        if not isinstance(self.track_ids, frozenset):
            object.__setattr__(self, "track_ids", frozenset(self.track_ids))
        if self.kind == INACTIVITY and len(self.track_ids) != 1:
            raise ValueError("inactivity events carry exactly one track id")
        if not math.isfinite(self.value):
            raise ValueError(f"event value must be finite, got {self.value!r}")


@dataclass(frozen=True, slots=True)
class PipelineConfig:
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    huddle: HuddleConfig = field(default_factory=HuddleConfig)
    activity: ActivityConfig = field(default_factory=ActivityConfig)
    iou_threshold: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.iou_threshold <= 1.0) or math.isnan(self.iou_threshold):
            raise ValueError(
                f"iou_threshold must be in (0, 1], got {self.iou_threshold!r}"
            )


def analyze_stream(
    frames: Iterable[FrameDetections], config: PipelineConfig | None = None
) -> list[AnomalyEvent]:
    """Run the full pipeline over an ordered detection stream.

    Per frame: update the tracker, classify huddling over the centroids of
    tracks observed in this frame, and update the inactivity monitor.
    Consecutive huddling frames merge into one event; inactivity windows
    coalesce per track. Events come back sorted by frame start, then kind,
    then track ids.
    """
    if config is None:
        config = PipelineConfig()
    tracker = CentroidTracker(
        config.tracker, history_limit=config.activity.window_frames + 1
    )
    monitor = ActivityMonitor(config.activity)
    events: list[AnomalyEvent] = []

    hud_run = None  # [start_frame, end_frame, max_value, involved ids]

    for frame in frames:
        assignment = tracker.update(frame)
        fidx = frame.frame_index

        observed = []
        for tid in assignment.matched:
            observed.append((tid, tracker.track(tid).last.centroid))
        for tid in assignment.new_tracks:
            observed.append((tid, tracker.track(tid).last.centroid))

        verdict = classify_frame(
            [(point, tid) for tid, point in observed], config.huddle, fidx
        )
        if verdict.is_huddling:
            peak = max(verdict.per_bird_counts.values())
            if hud_run is not None and fidx == hud_run[1] + 1:
                hud_run[1] = fidx
                hud_run[2] = max(hud_run[2], peak)
                hud_run[3] |= verdict.involved
            else:
                if hud_run is not None:
                    events.append(_huddle_event(hud_run))
                hud_run = [fidx, fidx, peak, set(verdict.involved)]
        elif hud_run is not None:
            events.append(_huddle_event(hud_run))
            hud_run = None

        events.extend(
            AnomalyEvent(INACTIVITY, e.window_start_frame, e.window_end_frame,
                         frozenset((e.track_id,)), e.activity_level)
            for e in monitor.observe(fidx, observed)
        )
        for tid in assignment.removed:
            events.extend(
                AnomalyEvent(INACTIVITY, e.window_start_frame, e.window_end_frame,
                             frozenset((e.track_id,)), e.activity_level)
                for e in monitor.close_track(tid)
            )

    if hud_run is not None:
        events.append(_huddle_event(hud_run))
    events.extend(
        AnomalyEvent(INACTIVITY, e.window_start_frame, e.window_end_frame,
                     frozenset((e.track_id,)), e.activity_level)
        for e in monitor.finish()
    )
    events.sort(key=lambda e: (e.frame_start, e.kind, sorted(e.track_ids)))
    return events


def _huddle_event(run) -> AnomalyEvent:
    start, end, peak, involved = run
    return AnomalyEvent(HUDDLING, start, end, frozenset(involved), float(peak))


def evaluate_events(
    predicted: Sequence[AnomalyEvent], truth: Sequence[AnomalyEvent]
) -> EvalReport:
    """Score predicted events against ground-truth events.

    Huddling is frame-level binary classification (events expand back to
    frame labels); inactivity is track-level binary classification (a track
    is either flagged or not, spans are not compared).
    """
    pred_frames = _huddle_frames(predicted)
    true_frames = _huddle_frames(truth)
    hud_counts = ConfusionCounts(
        tp=len(pred_frames & true_frames),
        fp=len(pred_frames - true_frames),
        fn=len(true_frames - pred_frames),
    )
    pred_ids = _inactive_ids(predicted)
    true_ids = _inactive_ids(truth)
    inact_counts = ConfusionCounts(
        tp=len(pred_ids & true_ids),
        fp=len(pred_ids - true_ids),
        fn=len(true_ids - pred_ids),
    )
    return EvalReport(rows=(
        EvalRow(category=HUDDLING, total=len(true_frames), counts=hud_counts),
        EvalRow(category=INACTIVITY, total=len(true_ids), counts=inact_counts),
    ))


def _huddle_frames(events) -> set:
    frames = set()
    for e in events:
        if e.kind == HUDDLING:
            frames.update(range(e.frame_start, e.frame_end + 1))
    return frames


def _inactive_ids(events) -> set:
    ids = set()
    for e in events:
        if e.kind == INACTIVITY:
            ids.update(e.track_ids)
    return ids


def evaluate_detections(
    predictions: Sequence[Detection],
    truths: Sequence[tuple[int, str, BoundingBox]],
    iou_threshold: float = 0.5,
) -> EvalReport:
    """Score a detection stream against labeled ground-truth boxes.

    ``truths`` holds (frame_index, label, box). Counts come from per-frame
    greedy IoU matching over all predictions; AP per class from the PR curve
    over descending confidence. The total column is the number of ground
    truths in the class.
    """
    labels = sorted({lab for _f, lab, _b in truths} | {p.class_label for p in predictions})
    rows = []
    for label in labels:
        preds = [p for p in predictions if p.class_label == label]
        class_truths = [(f, b) for f, lab, b in truths if lab == label]
        by_frame: dict[int, list[BoundingBox]] = {}
        for f, b in class_truths:
            by_frame.setdefault(f, []).append(b)
        preds_by_frame: dict[int, list[Detection]] = {}
        for p in preds:
            preds_by_frame.setdefault(p.frame_index, []).append(p)
        counts = ConfusionCounts()
        for f in sorted(set(preds_by_frame) | set(by_frame)):
            counts = counts + match_detections(
                preds_by_frame.get(f, []), by_frame.get(f, []), iou_threshold
            ).counts
        ap = None
        if class_truths:
            ap = average_precision(pr_curve(preds, class_truths, iou_threshold)) if preds else 0.0
        rows.append(EvalRow(
            category=f"detection:{label}",
            total=len(class_truths),
            counts=counts,
            ap=ap,
        ))
    return EvalReport(rows=tuple(rows))


def detection_map(report: EvalReport) -> Optional[float]:
    """Mean AP over the detection rows of a report; None if no class has AP."""
    aps = [row.ap for row in report.rows if row.ap is not None]
    if not aps:
        return None
    return mean_ap(aps)
