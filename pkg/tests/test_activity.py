import math
import random
from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flockwatch import (
    ActivityConfig,
    ActivityMonitor,
    BoundingBox,
    Point2D,
    Track,
    activity_level,
    displacement,
    evaluate_inactivity,
)
from flockwatch.tracker import Observation

from conftest import box_at


def track_from_path(path, track_id=0, frame_indexes=None):
    """Build a track whose centroid history follows the given points."""
    if frame_indexes is None:
        frame_indexes = range(len(path))
    history = deque(
        Observation(f, Point2D(x, y), box_at(x, y))
        for f, (x, y) in zip(frame_indexes, path)
    )
    return Track(id=track_id, history=history)


def stationary_track(n, at=(5.0, 5.0), track_id=0):
    return track_from_path([at] * n, track_id=track_id)


def walk_track(n, step=1.0, track_id=0):
    return track_from_path([(i * step, 0.0) for i in range(n)], track_id=track_id)


class TestConfig:
    def test_defaults(self):
        config = ActivityConfig()
        assert config.window_frames == 50
        assert config.activity_threshold == 20.0

    def test_invalid_rejected(self):
        with pytest.raises(ValueError, match="window_frames"):
            ActivityConfig(window_frames=0)
        with pytest.raises(ValueError, match="activity_threshold"):
            ActivityConfig(activity_threshold=0)


class TestDisplacement:
    def test_3_4_5(self):
        t = track_from_path([(0, 0), (3, 4)])
        assert displacement(t, 1) == 5.0

    def test_stationary(self):
        t = stationary_track(3)
        assert displacement(t, 1) == 0.0
        assert displacement(t, 2) == 0.0

    def test_from_boxes(self):
        history = deque([
            Observation(0, Point2D(12, 23), BoundingBox(10, 20, 4, 6)),
            Observation(1, Point2D(15, 27), BoundingBox(13, 24, 4, 6)),
        ])
        t = Track(id=0, history=history)
        assert displacement(t, 1) == 5.0

    def test_out_of_range(self):
        t = track_from_path([(0, 0), (1, 1)])
        with pytest.raises(ValueError, match="position"):
            displacement(t, 0)
        with pytest.raises(ValueError, match="position"):
            displacement(t, 2)


class TestActivityLevel:
    def test_stationary_zero(self):
        t = stationary_track(60)
        for T in (1, 10, 50):
            assert activity_level(t, 0, T) == 0.0

    def test_unit_steps(self):
        t = walk_track(51)
        assert activity_level(t, 0, 50) == 50.0

    def test_random_walk_matches_independent_summation(self):
        rng = random.Random(99)
        path = [(0.0, 0.0)]
        for _ in range(80):
            x, y = path[-1]
            path.append((x + rng.uniform(-2, 2), y + rng.uniform(-2, 2)))
        t = track_from_path(path)
        for start, T in [(0, 80), (10, 50), (29, 51), (0, 1)]:
            expected = math.fsum(
                math.dist(path[i], path[i - 1]) for i in range(start + 1, start + T + 1)
            )
            assert activity_level(t, start, T) == pytest.approx(expected, abs=1e-9)

    def test_insufficient_history(self):
        t = stationary_track(10)
        with pytest.raises(ValueError, match="window"):
            activity_level(t, 0, 10)
        with pytest.raises(ValueError, match="window"):
            activity_level(t, -1, 5)


class TestEvaluateInactivity:
    def test_stationary_51_frames_flagged(self):
        t = stationary_track(51)
        events = evaluate_inactivity([t], upto_frame=50)
        assert len(events) == 1
        e = events[0]
        assert e.track_id == 0
        assert e.activity_level == 0.0
        assert (e.window_start_frame, e.window_end_frame) == (0, 50)

    def test_moving_track_not_flagged(self):
        t = walk_track(51)
        assert evaluate_inactivity([t], upto_frame=50) == []

    def test_insufficient_history_skipped(self):
        t = stationary_track(30)
        assert evaluate_inactivity([t], upto_frame=29) == []

    def test_slow_track_flagged(self):
        t = walk_track(51, step=0.3)  # 50 steps of 0.3 -> activity 15 < 20
        events = evaluate_inactivity([t], upto_frame=50)
        assert len(events) == 1
        assert events[0].activity_level == pytest.approx(15.0)

    def test_coalescing_one_event_per_run(self):
        t = stationary_track(100)
        events = evaluate_inactivity([t], upto_frame=99)
        assert len(events) == 1
        assert (events[0].window_start_frame, events[0].window_end_frame) == (0, 99)

    def test_min_level_reported(self):
        # slow for a while, one bigger hop, slow again: runs break and the
        # reported levels are the per-run minima
        path = [(0.0, 0.0)] * 60 + [(100.0, 0.0)] + [(100.0, 0.0)] * 60
        t = track_from_path(path)
        events = evaluate_inactivity([t], upto_frame=len(path) - 1)
        assert len(events) == 2
        assert all(e.activity_level == 0.0 for e in events)

    def test_strict_threshold_boundary(self):
        config = ActivityConfig(window_frames=50, activity_threshold=20.0)
        # one step of exactly 19.9 then stillness: activity == 19.9 < 20
        below = track_from_path([(0.0, 0.0)] + [(19.9, 0.0)] * 50)
        # one step of exactly 20.0: activity == 20.0, not strictly below
        at = track_from_path([(0.0, 0.0)] + [(20.0, 0.0)] * 50)
        assert len(evaluate_inactivity([below], 50, config)) == 1
        assert evaluate_inactivity([at], 50, config) == []

    def test_upto_frame_truncates(self):
        t = stationary_track(100)
        events = evaluate_inactivity([t], upto_frame=50)
        assert len(events) == 1
        assert events[0].window_end_frame == 50

    def test_gap_does_not_reset_window(self):
        # observations missing frames 40-49: window positions bridge the gap
        frames = list(range(40)) + list(range(50, 61))
        t = track_from_path([(0.0, 0.0)] * len(frames), frame_indexes=frames)
        events = evaluate_inactivity([t], upto_frame=60)
        assert len(events) == 1
        assert (events[0].window_start_frame, events[0].window_end_frame) == (0, 60)


class TestProperties:
    @given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)),
                    min_size=12, max_size=40),
           st.integers(1, 5), st.integers(1, 5))
    @settings(max_examples=100)
    def test_additivity(self, path, t1, t2):
        track = track_from_path(path)
        if t1 + t2 >= len(path):
            return
        whole = activity_level(track, 0, t1 + t2)
        parts = activity_level(track, 0, t1) + activity_level(track, t1, t2)
        assert whole == pytest.approx(parts, rel=1e-12, abs=1e-9)

    @given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)),
                    min_size=2, max_size=30))
    def test_non_negative(self, path):
        track = track_from_path(path)
        for i in range(1, len(path)):
            assert displacement(track, i) >= 0.0
        assert activity_level(track, 0, len(path) - 1) >= 0.0

    @given(st.lists(st.tuples(st.integers(-1000, 1000), st.integers(-1000, 1000)),
                    min_size=6, max_size=30),
           st.tuples(st.integers(-10000, 10000), st.integers(-10000, 10000)))
    def test_translation_invariance_exact(self, path, shift):
        base = track_from_path(path)
        moved = track_from_path([(x + shift[0], y + shift[1]) for x, y in path])
        T = len(path) - 1
        assert activity_level(base, 0, T) == activity_level(moved, 0, T)

    @given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)),
                    min_size=6, max_size=30),
           st.sampled_from([0.25, 0.5, 2.0, 4.0, 8.0]))
    def test_scale_covariance_power_of_two_exact(self, path, s):
        base = track_from_path(path)
        scaled = track_from_path([(x * s, y * s) for x, y in path])
        T = len(path) - 1
        assert activity_level(scaled, 0, T) == s * activity_level(base, 0, T)

    @given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)),
                    min_size=6, max_size=30),
           st.floats(0.1, 10, allow_nan=False))
    def test_scale_covariance_general(self, path, s):
        base = track_from_path(path)
        scaled = track_from_path([(x * s, y * s) for x, y in path])
        T = len(path) - 1
        assert activity_level(scaled, 0, T) == pytest.approx(
            s * activity_level(base, 0, T), rel=1e-12, abs=1e-9
        )

    def test_window_coverage(self):
        config = ActivityConfig(window_frames=10, activity_threshold=5.0)
        t = stationary_track(40)
        for e in evaluate_inactivity([t], 39, config):
            covered = [
                o for o in t.history
                if e.window_start_frame <= o.frame_index <= e.window_end_frame
            ]
            assert len(covered) >= config.window_frames + 1


class TestMonitorEquivalence:
    def _random_tracks(self, seed, n_tracks=4, n_frames=160):
        rng = random.Random(seed)
        tracks = []
        for tid in range(n_tracks):
            pos = (rng.uniform(0, 50), rng.uniform(0, 50))
            path = []
            frames = []
            for f in range(n_frames):
                if rng.random() < 0.1:  # missed observation
                    continue
                sigma = rng.choice([0.05, 0.3])
                pos = (pos[0] + rng.gauss(0, sigma), pos[1] + rng.gauss(0, sigma))
                path.append(pos)
                frames.append(f)
            if len(path) >= 2:
                tracks.append(track_from_path(path, track_id=tid, frame_indexes=frames))
        return tracks, n_frames

    @pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
    def test_streaming_equals_batch(self, seed):
        config = ActivityConfig(window_frames=12, activity_threshold=3.0)
        tracks, n_frames = self._random_tracks(seed)
        batch = evaluate_inactivity(tracks, n_frames, config)

        monitor = ActivityMonitor(config)
        streamed = []
        for f in range(n_frames):
            obs = [
                (t.id, o.centroid)
                for t in tracks
                for o in t.history
                if o.frame_index == f
            ]
            streamed.extend(monitor.observe(f, obs))
        streamed.extend(monitor.finish())

        key = lambda e: (e.track_id, e.window_start_frame)
        batch.sort(key=key)
        streamed.sort(key=key)
        assert len(batch) == len(streamed)
        for b, s in zip(batch, streamed):
            assert (b.track_id, b.window_start_frame, b.window_end_frame) == (
                s.track_id, s.window_start_frame, s.window_end_frame
            )
            assert s.activity_level == pytest.approx(b.activity_level, abs=1e-9)
