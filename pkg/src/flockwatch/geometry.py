"""Shared geometric types and the primitive formulas everything else builds on."""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

TrackId = int


class Point2D(NamedTuple):
    """A 2-D pixel coordinate. Lightweight on purpose: validation happens at
    ingestion boundaries, not per instance."""

    x: float
    y: float

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


@dataclass(frozen=True, slots=True)
class BoundingBox:
    """Axis-aligned pixel rectangle stored as corner + extent."""

    x_min: float
    y_min: float
    width: float
    height: float

    def __post_init__(self):
        for name in ("x_min", "y_min", "width", "height"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"bounding box {name} must be finite, got {v!r}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(
                f"degenerate box: width and height must be > 0, "
                f"got width={self.width}, height={self.height}"
            )

    @property
    def x_max(self) -> float:
        return self.x_min + self.width

    @property
    def y_max(self) -> float:
        return self.y_min + self.height

    @property
    def area(self) -> float:
        return self.width * self.height

    def shifted(self, dx: float, dy: float) -> "BoundingBox":
        return BoundingBox(self.x_min + dx, self.y_min + dy, self.width, self.height)


@dataclass(frozen=True, slots=True)
class Detection:
    """One detector output in one frame: a box plus a confidence score."""

    frame_index: int
    bbox: BoundingBox
    confidence: float
    class_label: str = "chicken"

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")
        if not (math.isfinite(self.confidence) and 0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence!r}")


@dataclass(frozen=True, slots=True)
class FrameDetections:
    """All detections of a single frame, in detector output order."""

    frame_index: int
    detections: tuple[Detection, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")
        if not isinstance(self.detections, tuple):
            object.__setattr__(self, "detections", tuple(self.detections))
        for d in self.detections:
            if d.frame_index != self.frame_index:
                raise ValueError(
                    f"detection frame_index {d.frame_index} does not match "
                    f"frame {self.frame_index}"
                )

    def __len__(self) -> int:
        return len(self.detections)


def centroid(bbox: BoundingBox) -> Point2D:
    """Geometric center of a box: (x_min + 0.5*width, y_min + 0.5*height)."""
    return Point2D(bbox.x_min + 0.5 * bbox.width, bbox.y_min + 0.5 * bbox.height)


def euclidean_distance(p: Point2D, q: Point2D) -> float:
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    return math.sqrt(dx * dx + dy * dy)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0.0 when disjoint.

    Areas are derived from the same corner arithmetic as the intersection so
    identical boxes land exactly on 1.0 (width*height would disagree with
    the corner differences by rounding).
    """
    ax_max, ay_max = a.x_max, a.y_max
    bx_max, by_max = b.x_max, b.y_max
    ix = min(ax_max, bx_max) - max(a.x_min, b.x_min)
    if ix <= 0:
        return 0.0
    iy = min(ay_max, by_max) - max(a.y_min, b.y_min)
    if iy <= 0:
        return 0.0
    inter = ix * iy
    area_a = (ax_max - a.x_min) * (ay_max - a.y_min)
    area_b = (bx_max - b.x_min) * (by_max - b.y_min)
    return min(1.0, inter / (area_a + area_b - inter))
