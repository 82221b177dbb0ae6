import pytest

from flockwatch import BoundingBox, Detection, FrameDetections


def box_at(cx, cy, w=10.0, h=10.0):
    """Box whose centroid lands exactly on (cx, cy)."""
    return BoundingBox(cx - w / 2.0, cy - h / 2.0, w, h)


def frame_at(frame_index, centers, score=1.0, w=10.0, h=10.0):
    dets = tuple(
        Detection(frame_index, box_at(cx, cy, w, h), score) for cx, cy in centers
    )
    return FrameDetections(frame_index, dets)


@pytest.fixture
def make_frame():
    return frame_at
