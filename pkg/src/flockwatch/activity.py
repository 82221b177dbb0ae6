"""Per-track displacement and windowed activity level, plus the inactivity rule.

A track is flagged inactive over a window of ``window_frames`` consecutive
displacement steps (``window_frames + 1`` observations) when the summed
displacement falls strictly below ``activity_threshold``. Windows are
positional over a track's observations: a track that briefly dropped out of
detection contributes a single displacement across the gap, and the gap does
not reset the window, so a coalesced span can cover more frames than the
window size.
"""

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .geometry import Point2D, euclidean_distance
from .tracker import Track


@dataclass(frozen=True, slots=True)
class ActivityConfig:
    window_frames: int = 50
    activity_threshold: float = 20.0

    def __post_init__(self):
        if self.window_frames < 1:
            raise ValueError(f"window_frames must be >= 1, got {self.window_frames}")
        if not (math.isfinite(self.activity_threshold) and self.activity_threshold > 0):
            raise ValueError(
                f"activity_threshold must be positive and finite, "
                f"got {self.activity_threshold!r}"
            )


@dataclass(frozen=True, slots=True)
class InactivityEvent:
    track_id: int
    window_start_frame: int
    window_end_frame: int
    activity_level: float


def displacement(track: Track, i: int) -> float:
    """Distance between the track's centroids at history positions i-1 and i."""
    n = len(track.history)
    if not 1 <= i < n:
        raise ValueError(f"position {i} out of range for history of length {n}")
    return euclidean_distance(track.history[i].centroid, track.history[i - 1].centroid)


def activity_level(track: Track, start: int, window_frames: int) -> float:
    """Sum of the ``window_frames`` displacements over the history entries
    ``start .. start + window_frames``."""
    if window_frames < 1:
        raise ValueError(f"window_frames must be >= 1, got {window_frames}")
    entries = list(track.history)
    end = start + window_frames
    if start < 0 or end >= len(entries):
        raise ValueError(
            f"window [{start}, {end}] not covered by history of length {len(entries)}"
        )
    total = 0.0
    prev = entries[start].centroid
    for k in range(start + 1, end + 1):
        cur = entries[k].centroid
        total += euclidean_distance(cur, prev)
        prev = cur
    return total


def evaluate_inactivity(
    tracks: Iterable[Track], upto_frame: int, config: ActivityConfig | None = None
) -> list[InactivityEvent]:
    """Flag every full window with activity strictly below the threshold,
    coalescing runs of consecutive flagged windows per track into one event
    spanning their union and carrying the minimum observed activity.

    Tracks whose history does not yet cover a full window are skipped.
    """
    if config is None:
        config = ActivityConfig()
    T = config.window_frames
    threshold = config.activity_threshold
    events = []
    for track in tracks:
        entries = [o for o in track.history if o.frame_index <= upto_frame]
        if len(entries) < T + 1:
            continue
        prefix = [0.0]
        acc = 0.0
        prev = entries[0].centroid
        for o in entries[1:]:
            acc += euclidean_distance(o.centroid, prev)
            prev = o.centroid
            prefix.append(acc)
        run_start = None  # first window index of the open run
        run_end = None
        run_min = math.inf
        for s in range(len(entries) - T):
            act = prefix[s + T] - prefix[s]
            if act < threshold:
                if run_start is None:
                    run_start = s
                run_end = s
                run_min = min(run_min, act)
            elif run_start is not None:
                events.append(_close_run(track.id, entries, run_start, run_end, run_min, T))
                run_start, run_min = None, math.inf
        if run_start is not None:
            events.append(_close_run(track.id, entries, run_start, run_end, run_min, T))
    return events


def _close_run(track_id, entries, first, last, level, T):
    return InactivityEvent(
        track_id=track_id,
        window_start_frame=entries[first].frame_index,
        window_end_frame=entries[last + T].frame_index,
        activity_level=level,
    )


class _TrackState:
    __slots__ = ("last", "frames", "steps", "step_sum",
                 "run_start", "run_end_frame", "run_min")

    def __init__(self, frame_index, point, window):
        self.last = point
        self.frames = deque([frame_index], maxlen=window + 1)
        self.steps = deque()
        self.step_sum = 0.0
        self.run_start = None
        self.run_end_frame = None
        self.run_min = math.inf


class ActivityMonitor:
    """Streaming twin of :func:`evaluate_inactivity`.

    Feed one frame at a time via :meth:`observe`; closed events are returned
    as soon as a flagged run ends. Call :meth:`close_track` when the tracker
    retires an identity and :meth:`finish` at end of stream. Keeps
    O(window) state per live track.
    """

    def __init__(self, config: ActivityConfig | None = None):
        self.config = config if config is not None else ActivityConfig()
        self._states: dict[int, _TrackState] = {}

    def observe(
        self, frame_index: int, observations: Iterable[tuple[int, Point2D]]
    ) -> list[InactivityEvent]:
        T = self.config.window_frames
        threshold = self.config.activity_threshold
        states = self._states
        closed = []
        for tid, point in observations:
            st = states.get(tid)
            if st is None:
                states[tid] = _TrackState(frame_index, point, T)
                continue
            step = euclidean_distance(point, st.last)
            st.last = point
            st.steps.append(step)
            st.step_sum += step
            if len(st.steps) > T:
                st.step_sum -= st.steps.popleft()
            st.frames.append(frame_index)
            if len(st.steps) < T:
                continue
            # frames now holds exactly the window's T+1 observation frames
            act = st.step_sum
            if act < threshold:
                if st.run_start is None:
                    st.run_start = st.frames[0]
                st.run_min = min(st.run_min, act)
                st.run_end_frame = frame_index
            elif st.run_start is not None:
                closed.append(self._close(tid, st))
        return closed

    def close_track(self, track_id: int) -> list[InactivityEvent]:
        st = self._states.pop(track_id, None)
        if st is not None and st.run_start is not None:
            return [self._close(track_id, st)]
        return []

    def finish(self) -> list[InactivityEvent]:
        closed = []
        for tid, st in self._states.items():
            if st.run_start is not None:
                closed.append(self._close(tid, st))
        self._states.clear()
        return closed

    def _close(self, tid, st):
        event = InactivityEvent(
            track_id=tid,
            window_start_frame=st.run_start,
            window_end_frame=st.run_end_frame,
            activity_level=st.run_min,
        )
        st.run_start = None
        st.run_min = math.inf
        return event
