import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flockwatch import HuddleConfig, Point2D, brute_force_count, classify_frame


def birds(points):
    return [(Point2D(x, y), i) for i, (x, y) in enumerate(points)]


def oracle_verdict(points, config):
    """Independent re-derivation of the frame verdict via linear scans."""
    pts = [Point2D(x, y) for x, y in points]
    counts = [brute_force_count(pts, p, config.radius) for p in pts]
    return any(c > config.count_threshold for c in counts)


class TestConfig:
    def test_defaults(self):
        config = HuddleConfig()
        assert config.radius == 100.0
        assert config.count_threshold == 10

    def test_invalid_rejected(self):
        with pytest.raises(ValueError, match="radius"):
            HuddleConfig(radius=0)
        with pytest.raises(ValueError, match="count_threshold"):
            HuddleConfig(count_threshold=0)


class TestClassifyFrame:
    def test_eleven_coincident_is_huddling(self):
        v = classify_frame(birds([(50, 50)] * 11))
        assert v.is_huddling
        assert v.per_bird_counts == {i: 11 for i in range(11)}
        assert v.involved == frozenset(range(11))

    def test_ten_coincident_is_not_huddling(self):
        # count 10 is not strictly greater than the threshold of 10
        v = classify_frame(birds([(50, 50)] * 10))
        assert not v.is_huddling
        assert v.involved == frozenset()

    def test_eleven_spread_on_a_line(self):
        v = classify_frame(birds([(150.0 * i, 0.0) for i in range(11)]))
        assert not v.is_huddling
        assert all(c == 1 for c in v.per_bird_counts.values())

    def test_empty_frame(self):
        v = classify_frame([])
        assert not v.is_huddling
        assert v.per_bird_counts == {}

    def test_verdict_matches_involved(self):
        v = classify_frame(birds([(0, 0)] * 12 + [(500, 500)]))
        assert v.is_huddling == bool(v.involved)
        assert v.involved == frozenset(range(12))

    def test_frame_index_carried(self):
        v = classify_frame(birds([(0, 0)]), frame_index=17)
        assert v.frame_index == 17


scene = st.lists(
    st.tuples(st.floats(0, 1000, allow_nan=False), st.floats(0, 1000, allow_nan=False)),
    max_size=40,
)


class TestProperties:
    @given(points=scene, radius=st.floats(1, 400), threshold=st.integers(1, 15))
    @settings(max_examples=150)
    def test_agreement_with_brute_force(self, points, radius, threshold):
        config = HuddleConfig(radius=radius, count_threshold=threshold)
        v = classify_frame(birds(points), config)
        assert v.is_huddling == oracle_verdict(points, config)

    @given(
        points=st.lists(st.tuples(st.integers(0, 1000), st.integers(0, 1000)), max_size=40),
        shift=st.tuples(st.integers(-100000, 100000), st.integers(-100000, 100000)),
    )
    @settings(max_examples=100)
    def test_translation_invariance(self, points, shift):
        # integer lattice keeps every distance computation exact, so the
        # verdict must be bit-for-bit identical after the shift
        config = HuddleConfig(radius=120, count_threshold=3)
        base = classify_frame(birds(points), config)
        moved = classify_frame(
            birds([(x + shift[0], y + shift[1]) for x, y in points]), config
        )
        assert base.is_huddling == moved.is_huddling
        assert base.involved == moved.involved
        assert base.per_bird_counts == moved.per_bird_counts

    @given(points=scene)
    @settings(max_examples=100)
    def test_monotone_in_radius(self, points):
        small = classify_frame(birds(points), HuddleConfig(radius=50, count_threshold=3))
        large = classify_frame(birds(points), HuddleConfig(radius=200, count_threshold=3))
        if small.is_huddling:
            assert large.is_huddling
        for tag, c in small.per_bird_counts.items():
            assert large.per_bird_counts[tag] >= c

    @given(points=st.lists(
        st.tuples(st.floats(0, 300, allow_nan=False), st.floats(0, 300, allow_nan=False)),
        min_size=1, max_size=25,
    ), extra=st.tuples(st.floats(0, 300), st.floats(0, 300)))
    @settings(max_examples=100)
    def test_adding_a_bird_never_decreases_counts(self, points, extra):
        config = HuddleConfig(radius=80, count_threshold=5)
        before = classify_frame(birds(points), config)
        after = classify_frame(birds(points + [extra]), config)
        for tag, c in before.per_bird_counts.items():
            assert after.per_bird_counts[tag] >= c


class TestTranslationExactness:
    def test_integer_shift_preserves_counts(self):
        rng = random.Random(11)
        pts = [(rng.uniform(0, 200), rng.uniform(0, 200)) for _ in range(30)]
        config = HuddleConfig(radius=60, count_threshold=4)
        a = classify_frame(birds(pts), config)
        b = classify_frame(birds([(x + 1024, y + 2048) for x, y in pts]), config)
        assert a.per_bird_counts == b.per_bird_counts
