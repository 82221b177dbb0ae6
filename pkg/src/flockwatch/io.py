"""Parsers and serializers for every file the pipeline touches.

Wire formats are UTF-8 newline-delimited JSON records (one detection or one
event per line) with a fixed field set; unknown fields are rejected so typos
fail loudly. Ground-truth annotations are the LabelImg XML subset (object
name plus corner-pair bndbox). Configuration is a flat ``key = value``
document with ``#`` comments.

Every parser either returns a value or raises a positioned error; nothing is
silently skipped.
"""

import json
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO, Union

from .activity import ActivityConfig
from .geometry import BoundingBox, Detection, FrameDetections
from .huddling import HuddleConfig
from .pipeline import AnomalyEvent, PipelineConfig
from .tracker import TrackerConfig


class ParseError(ValueError):
    """Malformed input; the message carries line number and field context."""


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


DETECTION_FIELDS = ("frame", "x_min", "y_min", "width", "height", "score", "label")
EVENT_FIELDS = ("kind", "frame_start", "frame_end", "track_ids", "value")


def _lines(stream: Union[str, TextIO, Iterable[str]]) -> Iterable[str]:
    if isinstance(stream, str):
        return stream.splitlines()
    return stream


def parse_detection_stream(stream: Union[str, TextIO, Iterable[str]]) -> list[FrameDetections]:
    """Parse newline-delimited detection records into per-frame groups.

    Frames come back in ascending order; frames missing from the input but
    inside the observed range are emitted empty. Duplicate records are kept.
    """
    by_frame: dict[int, list[Detection]] = {}
    for lineno, raw in enumerate(_lines(stream), start=1):
        line = raw.strip()
        if not line:
            continue
        record = _load_record(line, lineno)
        _check_fields(record, DETECTION_FIELDS, lineno)
        frame = _int_field(record, "frame", lineno, minimum=0)
        x_min = _num_field(record, "x_min", lineno)
        y_min = _num_field(record, "y_min", lineno)
        width = _num_field(record, "width", lineno)
        height = _num_field(record, "height", lineno)
        if width <= 0 or height <= 0:
            raise ParseError(
                f"line {lineno}: field 'width'/'height' must be > 0, "
                f"got {width!r} x {height!r}"
            )
        score = _num_field(record, "score", lineno)
        if not 0.0 <= score <= 1.0:
            raise ParseError(f"line {lineno}: field 'score' must be in [0, 1], got {score!r}")
        label = record["label"]
        if not isinstance(label, str):
            raise ParseError(f"line {lineno}: field 'label' must be a string, got {label!r}")
        det = Detection(
            frame_index=frame,
            bbox=BoundingBox(x_min, y_min, width, height),
            confidence=score,
            class_label=label,
        )
        by_frame.setdefault(frame, []).append(det)
    if not by_frame:
        return []
    lo, hi = min(by_frame), max(by_frame)
    return [
        FrameDetections(f, tuple(by_frame.get(f, ()))) for f in range(lo, hi + 1)
    ]


def serialize_detections(frames: Iterable[FrameDetections]) -> str:
    """Inverse of :func:`parse_detection_stream` (empty frames produce no lines)."""
    out = []
    for frame in frames:
        for d in frame.detections:
            out.append(json.dumps({
                "frame": d.frame_index,
                "x_min": d.bbox.x_min,
                "y_min": d.bbox.y_min,
                "width": d.bbox.width,
                "height": d.bbox.height,
                "score": d.confidence,
                "label": d.class_label,
            }))
    return "".join(line + "\n" for line in out)


def parse_events(stream: Union[str, TextIO, Iterable[str]]) -> list[AnomalyEvent]:
    events = []
    for lineno, raw in enumerate(_lines(stream), start=1):
        line = raw.strip()
        if not line:
            continue
        record = _load_record(line, lineno)
        _check_fields(record, EVENT_FIELDS, lineno)
        kind = record["kind"]
        if kind not in ("huddling", "inactivity"):
            raise ParseError(f"line {lineno}: field 'kind' must be 'huddling' or "
                             f"'inactivity', got {kind!r}")
        start = _int_field(record, "frame_start", lineno, minimum=0)
        end = _int_field(record, "frame_end", lineno, minimum=0)
        ids = record["track_ids"]
        if not isinstance(ids, list) or not all(
            isinstance(t, int) and not isinstance(t, bool) and t >= 0 for t in ids
        ):
            raise ParseError(
                f"line {lineno}: field 'track_ids' must be a list of "
                f"non-negative integers, got {ids!r}"
            )
        value = _num_field(record, "value", lineno)
        try:
            events.append(AnomalyEvent(kind, start, end, frozenset(ids), value))
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    return events


def serialize_events(events: Sequence[AnomalyEvent]) -> str:
    """Newline-delimited event records; round-trips losslessly with
    :func:`parse_events`."""
    out = []
    for e in events:
        out.append(json.dumps({
            "kind": e.kind,
            "frame_start": e.frame_start,
            "frame_end": e.frame_end,
            "track_ids": sorted(e.track_ids),
            "value": e.value,
        }))
    return "".join(line + "\n" for line in out)


@dataclass(frozen=True, slots=True)
class GroundTruthFrame:
    """One annotated frame: an identifier plus (label, box) pairs in
    document order."""

    identifier: str
    boxes: tuple  # of (label, BoundingBox)


def parse_voc_annotation(text: str) -> GroundTruthFrame:
    """Parse one LabelImg-style XML document.

    Corner pairs convert to corner + extent; pose/truncated/difficult
    fields are ignored when present.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ParseError(f"not well-formed XML: {exc}") from exc
    identifier = root.findtext("filename", default="").strip()
    boxes = []
    for i, obj in enumerate(root.iter("object")):
        name = obj.findtext("name")
        if name is None:
            raise ParseError(f"object {i}: missing required element 'name'")
        bndbox = obj.find("bndbox")
        if bndbox is None:
            raise ParseError(f"object {i}: missing required element 'bndbox'")
        corners = {}
        for tag in ("xmin", "ymin", "xmax", "ymax"):
            raw = bndbox.findtext(tag)
            if raw is None:
                raise ParseError(f"object {i}: missing required element '{tag}'")
            try:
                corners[tag] = float(raw)
            except ValueError as exc:
                raise ParseError(f"object {i}: element '{tag}' is not a number: "
                                 f"{raw!r}") from exc
        width = corners["xmax"] - corners["xmin"]
        height = corners["ymax"] - corners["ymin"]
        if width <= 0 or height <= 0:
            raise ParseError(
                f"object {i}: degenerate box (xmax <= xmin or ymax <= ymin)"
            )
        boxes.append((name.strip(), BoundingBox(corners["xmin"], corners["ymin"],
                                                width, height)))
    return GroundTruthFrame(identifier=identifier, boxes=tuple(boxes))


def parse_flat_config(text: str) -> dict[str, str]:
    """Parse a flat ``key = value`` document with ``#`` comments into raw
    string values."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        values[key] = value
    return values


_CONFIG_KEYS = {
    "max_disappeared": int,
    "max_distance": float,
    "radius": float,
    "count_threshold": int,
    "window_frames": int,
    "activity_threshold": float,
    "iou_threshold": float,
}


def load_config(text: str) -> PipelineConfig:
    """Build a pipeline configuration; unspecified keys keep their defaults."""
    raw = parse_flat_config(text)
    parsed = {}
    for key, value in raw.items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key '{key}'")
        try:
            parsed[key] = _CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"config key '{key}': not a valid "
                              f"{_CONFIG_KEYS[key].__name__}: {value!r}") from exc
    try:
        tracker = TrackerConfig(
            max_disappeared=parsed.get("max_disappeared", 50),
            max_distance=parsed.get("max_distance"),
        )
        huddle = HuddleConfig(
            radius=parsed.get("radius", 100.0),
            count_threshold=parsed.get("count_threshold", 10),
        )
        activity = ActivityConfig(
            window_frames=parsed.get("window_frames", 50),
            activity_threshold=parsed.get("activity_threshold", 20.0),
        )
        return PipelineConfig(
            tracker=tracker,
            huddle=huddle,
            activity=activity,
            iou_threshold=parsed.get("iou_threshold", 0.5),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _load_record(line: str, lineno: int) -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {lineno}: not a valid record: {exc.msg}") from exc
    if not isinstance(record, dict):
        raise ParseError(f"line {lineno}: expected an object record")
    return record


def _check_fields(record: dict, fields: tuple, lineno: int) -> None:
    missing = [f for f in fields if f not in record]
    if missing:
        raise ParseError(f"line {lineno}: missing field '{missing[0]}'")
    unknown = [k for k in record if k not in fields]
    if unknown:
        raise ParseError(f"line {lineno}: unknown field '{unknown[0]}'")


def _num_field(record: dict, name: str, lineno: int) -> float:
    v = record[name]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ParseError(f"line {lineno}: field '{name}' must be a finite number, "
                         f"got {v!r}")
    return float(v)


def _int_field(record: dict, name: str, lineno: int, minimum: int | None = None) -> int:
    v = record[name]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"line {lineno}: field '{name}' must be an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ParseError(f"line {lineno}: field '{name}' must be >= {minimum}, got {v}")
    return v
