"""Centroid tracker: greedy minimum-distance assignment of detections to tracks.

Matching is globally greedy over all (track, detection) pairs sorted by
centroid distance, ties broken by lower track id then lower detection index,
so identical input streams always produce identical assignments. There is no
motion prediction and no appearance model; the tracker is deliberately cheap.
"""

import math
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .geometry import BoundingBox, Detection, FrameDetections, Point2D, centroid

ACTIVE = "active"
REMOVED = "removed"

# below this many pairs, plain Python matching beats numpy dispatch overhead
_SMALL_PAIRS = 64


@dataclass(frozen=True, slots=True)
class TrackerConfig:
    max_disappeared: int = 50
    max_distance: Optional[float] = None  # None = no gate

    def __post_init__(self):
        if self.max_disappeared < 1:
            raise ValueError(
                f"max_disappeared must be >= 1, got {self.max_disappeared}"
            )
        if self.max_distance is not None and not (
            math.isfinite(self.max_distance) and self.max_distance > 0
        ):
            raise ValueError(
                f"max_distance must be positive and finite (or None), "
                f"got {self.max_distance!r}"
            )


class Observation(NamedTuple):
    frame_index: int
    centroid: Point2D
    bbox: BoundingBox


@dataclass(slots=True)
class Track:
    """One persistent identity: centroid history plus disappearance state."""

    id: int
    history: deque  # of Observation, frame_index strictly increasing
    disappeared_count: int = 0
    state: str = ACTIVE

    @property
    def last(self) -> Observation:
        return self.history[-1]


@dataclass(frozen=True, slots=True)
class FrameAssignment:
    """What one tracker update did: matches, registrations, and retirements.

    ``disappeared`` lists tracks that went unmatched this frame but stayed
    active; tracks retired this frame appear only in ``removed``.
    """

    frame_index: int
    matched: dict  # track id -> detection index
    new_tracks: tuple
    disappeared: tuple
    removed: tuple


class CentroidTracker:
    """Sequential, single-owner tracker state. Apply frames in order via
    :meth:`update`; snapshot between updates via :meth:`active_tracks`.

    ``history_limit`` bounds each track's retained history (oldest entries
    are dropped), which keeps long streams in constant memory.
    """

    def __init__(self, config: TrackerConfig | None = None,
                 history_limit: int | None = None):
        self.config = config if config is not None else TrackerConfig()
        if history_limit is not None and history_limit < 1:
            raise ValueError(f"history_limit must be >= 1, got {history_limit}")
        self._history_limit = history_limit
        self._tracks: dict[int, Track] = {}
        self._next_id = 0
        self._last_frame: int | None = None

    def active_tracks(self) -> list[Track]:
        """Active tracks ordered by track id."""
        return list(self._tracks.values())

    def track(self, track_id: int) -> Track:
        """The active track with the given id (KeyError once removed)."""
        return self._tracks[track_id]

    def update(self, frame: FrameDetections) -> FrameAssignment:
        if self._last_frame is not None and frame.frame_index <= self._last_frame:
            raise ValueError(
                f"frame_index must increase: got {frame.frame_index} after "
                f"{self._last_frame}"
            )
        self._last_frame = frame.frame_index

        dets = frame.detections
        det_centroids = [centroid(d.bbox) for d in dets]
        tracks = list(self._tracks.values())  # insertion order == id order

        matches = self._match(tracks, det_centroids)

        matched_dets = set(matches.values())
        fidx = frame.frame_index
        for tid, di in matches.items():
            track = self._tracks[tid]
            track.history.append(Observation(fidx, det_centroids[di], dets[di].bbox))
            track.disappeared_count = 0

        new_ids = []
        for di in range(len(dets)):
            if di in matched_dets:
                continue
            tid = self._next_id
            self._next_id += 1
            self._tracks[tid] = Track(
                id=tid,
                history=deque(
                    [Observation(fidx, det_centroids[di], dets[di].bbox)],
                    maxlen=self._history_limit,
                ),
            )
            new_ids.append(tid)

        disappeared = []
        removed = []
        for track in tracks:
            if track.id in matches:
                continue
            track.disappeared_count += 1
            if track.disappeared_count > self.config.max_disappeared:
                track.state = REMOVED
                del self._tracks[track.id]
                removed.append(track.id)
            else:
                disappeared.append(track.id)

        return FrameAssignment(
            frame_index=fidx,
            matched=matches,
            new_tracks=tuple(new_ids),
            disappeared=tuple(disappeared),
            removed=tuple(removed),
        )

    def _match(self, tracks: list[Track], det_centroids: list[Point2D]) -> dict:
        n_t = len(tracks)
        n_d = len(det_centroids)
        if n_t == 0 or n_d == 0:
            return {}
        gate = self.config.max_distance
        if n_t * n_d <= _SMALL_PAIRS:
            return self._match_small(tracks, det_centroids, gate)
        tc = np.empty((n_t, 2), dtype=np.float64)
        for i, t in enumerate(tracks):
            c = t.last.centroid
            tc[i, 0] = c[0]
            tc[i, 1] = c[1]
        dc = np.asarray(det_centroids, dtype=np.float64).reshape(n_d, 2)
        dx = tc[:, 0, None] - dc[None, :, 0]
        dy = tc[:, 1, None] - dc[None, :, 1]
        dist = np.sqrt(dx * dx + dy * dy).ravel()
        # stable sort on the row-major flat array realizes the documented
        # tie-break: equal distances fall back to (track id, detection index)
        order = np.argsort(dist, kind="stable")

        matches: dict[int, int] = {}
        taken_d = np.zeros(n_d, dtype=bool)
        remaining = min(n_t, n_d)
        for k in order:
            d = dist[k]
            if gate is not None and d > gate:
                break
            ti, di = divmod(int(k), n_d)
            if taken_d[di] or tracks[ti].id in matches:
                continue
            matches[tracks[ti].id] = di
            taken_d[di] = True
            remaining -= 1
            if remaining == 0:
                break
        return matches

    @staticmethod
    def _match_small(tracks, det_centroids, gate):
        pairs = []
        for ti, t in enumerate(tracks):
            cx, cy = t.last.centroid
            for di, c in enumerate(det_centroids):
                ddx = cx - c[0]
                ddy = cy - c[1]
                d = math.sqrt(ddx * ddx + ddy * ddy)
                if gate is None or d <= gate:
                    pairs.append((d, ti, di))
        pairs.sort()
        matches: dict[int, int] = {}
        taken_t = set()
        taken_d = set()
        for d, ti, di in pairs:
            if ti in taken_t or di in taken_d:
                continue
            matches[tracks[ti].id] = di
            taken_t.add(ti)
            taken_d.add(di)
        return matches
