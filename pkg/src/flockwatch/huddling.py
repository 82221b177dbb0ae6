"""Per-frame huddling rule: a frame is huddling when some bird has more than
``count_threshold`` birds (itself included) within ``radius`` pixels."""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import Point2D
from .spatial import SpatialIndex


@dataclass(frozen=True, slots=True)
class HuddleConfig:
    radius: float = 100.0
    count_threshold: int = 10

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"radius must be positive and finite, got {self.radius!r}")
        if self.count_threshold < 1:
            raise ValueError(
                f"count_threshold must be >= 1, got {self.count_threshold}"
            )


@dataclass(frozen=True, slots=True)
class HuddleVerdict:
    frame_index: int
    is_huddling: bool
    per_bird_counts: dict  # tag -> neighbor count, query bird included
    involved: frozenset  # tags whose count strictly exceeds the threshold


def classify_frame(
    centroids: Sequence[tuple[Point2D, object]],
    config: HuddleConfig | None = None,
    frame_index: int = 0,
) -> HuddleVerdict:
    """Classify one frame from its tagged bird centroids.

    The count for each bird includes the bird itself, and the frame is
    huddling only when some count strictly exceeds the threshold. Tags must
    be unique (track ids or detection indices).
    """
    if config is None:
        config = HuddleConfig()
    if not centroids:
        return HuddleVerdict(frame_index, False, {}, frozenset())
    index = SpatialIndex(centroids)
    pts = np.array([(p[0], p[1]) for p, _tag in centroids], dtype=np.float64)
    counts = index.count_within_radius_many(pts, config.radius)
    per_bird = {tag: int(c) for (_p, tag), c in zip(centroids, counts)}
    threshold = config.count_threshold
    involved = frozenset(tag for tag, c in per_bird.items() if c > threshold)
    return HuddleVerdict(frame_index, bool(involved), per_bird, involved)
