import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from flockwatch import BoundingBox, Point2D, centroid, euclidean_distance, iou

coord = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
extent = st.floats(1e-3, 1e4, allow_nan=False, allow_infinity=False)


def boxes():
    return st.builds(BoundingBox, x_min=coord, y_min=coord, width=extent, height=extent)


def points():
    return st.builds(Point2D, x=coord, y=coord)


class TestCentroid:
    def test_direct_arithmetic(self):
        assert centroid(BoundingBox(10, 20, 4, 6)) == Point2D(12, 23)

    def test_symmetric_unit_case(self):
        assert centroid(BoundingBox(0, 0, 2, 2)) == Point2D(1, 1)

    def test_degenerate_box_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            BoundingBox(5, 5, 0, 3)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            BoundingBox(math.nan, 0, 1, 1)
        with pytest.raises(ValueError):
            BoundingBox(0, 0, math.inf, 1)

    @given(boxes(), coord, coord)
    def test_translation_equivariance(self, b, dx, dy):
        shifted = centroid(b.shifted(dx, dy))
        base = centroid(b)
        assert shifted.x == pytest.approx(base.x + dx, rel=1e-9, abs=1e-6)
        assert shifted.y == pytest.approx(base.y + dy, rel=1e-9, abs=1e-6)


class TestEuclideanDistance:
    def test_3_4_5_triangle(self):
        assert euclidean_distance(Point2D(0, 0), Point2D(3, 4)) == 5.0

    def test_identity_case(self):
        assert euclidean_distance(Point2D(7, -2), Point2D(7, -2)) == 0.0

    def test_translated_3_4_5(self):
        assert euclidean_distance(Point2D(1, 1), Point2D(4, 5)) == 5.0

    @given(points(), points(), points())
    def test_metric_axioms(self, p, q, r):
        dpq = euclidean_distance(p, q)
        assert dpq >= 0
        assert euclidean_distance(p, p) == 0
        assert dpq == euclidean_distance(q, p)
        assert dpq <= euclidean_distance(p, r) + euclidean_distance(r, q) + 1e-7


class TestIou:
    def test_identical_boxes(self):
        b = BoundingBox(3, 4, 5, 6)
        assert iou(b, b) == 1.0

    def test_disjoint(self):
        assert iou(BoundingBox(0, 0, 2, 2), BoundingBox(10, 10, 2, 2)) == 0.0

    def test_rectangle_arithmetic(self):
        # intersection 1x2=2, union 4+4-2=6
        assert iou(BoundingBox(0, 0, 2, 2), BoundingBox(1, 0, 2, 2)) == pytest.approx(1 / 3)

    @given(boxes(), boxes())
    def test_symmetric_and_bounded(self, a, b):
        v = iou(a, b)
        assert v == iou(b, a)
        assert 0.0 <= v <= 1.0 + 1e-12

    @given(boxes())
    def test_self_iou_is_one(self, b):
        assert iou(b, b) == pytest.approx(1.0)
