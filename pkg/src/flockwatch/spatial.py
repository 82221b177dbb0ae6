"""Immutable 2-D kd-tree over frame centroids with exact radius-count queries.

The tree is built once per frame and queried many times. Counts must agree
exactly with a linear scan, so every route evaluates the same inclusion
predicate ``dx*dx + dy*dy <= r*r`` in the same float64 arithmetic; pruning
only ever skips subtrees whose every point provably fails that predicate
(squared plane distance already exceeds r*r, and appending the second
squared term cannot round the sum below it).
"""

import math
from typing import Iterable, Sequence

import numpy as np

from .geometry import Point2D

_LEAF_SIZE = 32
# below this many center*point pairs a vectorized all-pairs scan beats
# walking the tree from Python
_ALL_PAIRS_LIMIT = 4096


class _Node:
    __slots__ = ("axis", "split", "left", "right", "start", "end")

    def __init__(self, axis=-1, split=0.0, left=None, right=None, start=0, end=0):
        self.axis = axis
        self.split = split
        self.left = left
        self.right = right
        self.start = start
        self.end = end

    @property
    def is_leaf(self):
        return self.axis < 0


class SpatialIndex:
    """Balanced kd-tree (median split on alternating axes, bucketed leaves).

    Immutable after construction; concurrent reads are safe.
    """

    def __init__(self, points: Iterable[tuple[Point2D, object]], leaf_size: int = _LEAF_SIZE):
        if leaf_size < 1:
            raise ValueError(f"leaf_size must be >= 1, got {leaf_size}")
        self._points = list(points)
        n = len(self._points)
        coords = np.empty((n, 2), dtype=np.float64)
        for i, (p, _tag) in enumerate(self._points):
            coords[i, 0] = p[0]
            coords[i, 1] = p[1]
        if n and not np.isfinite(coords).all():
            raise ValueError("index points must have finite coordinates")
        self._leaf_size = leaf_size
        order = np.arange(n)
        self._root = self._build(coords, order, 0, n, axis=0) if n else None
        # permuted copies give leaves contiguous slices
        self._xs = coords[order, 0]
        self._ys = coords[order, 1]

    def _build(self, coords, order, lo, hi, axis):
        if hi - lo <= self._leaf_size:
            return _Node(start=lo, end=hi)
        mid = (lo + hi) // 2
        seg = order[lo:hi]
        part = np.argpartition(coords[seg, axis], mid - lo)
        order[lo:hi] = seg[part]
        split = coords[order[mid], axis]
        node = _Node(axis=axis, split=split)
        node.left = self._build(coords, order, lo, mid, 1 - axis)
        node.right = self._build(coords, order, mid, hi, 1 - axis)
        return node

    def __len__(self) -> int:
        return len(self._points)

    @property
    def points(self) -> list[tuple[Point2D, object]]:
        """The indexed (point, tag) pairs in construction order."""
        return list(self._points)

    def count_within_radius(self, center: Point2D, radius: float) -> int:
        """Number of indexed points within ``radius`` of ``center``, boundary
        inclusive (a point exactly at distance ``radius`` counts)."""
        _check_query(center, radius)
        return self._count(center[0], center[1], radius * radius)

    def count_within_radius_many(self, centers, radius: float) -> np.ndarray:
        """Vectorized equivalent of ``count_within_radius`` per center.

        ``centers`` is a sequence of points or an ``(m, 2)`` array.
        """
        if not math.isfinite(radius) or radius < 0:
            raise ValueError(f"radius must be finite and >= 0, got {radius!r}")
        cs = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
        m = cs.shape[0]
        if m and not np.isfinite(cs).all():
            raise ValueError("query centers must be finite")
        r2 = radius * radius
        if m == 0:
            return np.zeros(0, dtype=np.intp)
        if m * len(self._points) <= _ALL_PAIRS_LIMIT:
            dx = self._xs[None, :] - cs[:, 0, None]
            dy = self._ys[None, :] - cs[:, 1, None]
            return np.count_nonzero(dx * dx + dy * dy <= r2, axis=1)
        return np.array([self._count(cs[i, 0], cs[i, 1], r2) for i in range(m)], dtype=np.intp)

    def _count(self, cx, cy, r2):
        if self._root is None:
            return 0
        total = 0
        stack = [self._root]
        xs, ys = self._xs, self._ys
        while stack:
            node = stack.pop()
            if node.is_leaf:
                dx = xs[node.start:node.end] - cx
                dy = ys[node.start:node.end] - cy
                total += int(np.count_nonzero(dx * dx + dy * dy <= r2))
                continue
            c = cx if node.axis == 0 else cy
            d = c - node.split
            if d <= 0 or d * d <= r2:
                stack.append(node.left)
            if d >= 0 or d * d <= r2:
                stack.append(node.right)
        return total


def index_build(points: Iterable[tuple[Point2D, object]], leaf_size: int = _LEAF_SIZE) -> SpatialIndex:
    return SpatialIndex(points, leaf_size=leaf_size)


def brute_force_count(points: Iterable[Point2D], center: Point2D, radius: float) -> int:
    """Linear-scan oracle with the same inclusive boundary rule as the tree."""
    _check_query(center, radius)
    cx, cy = center[0], center[1]
    r2 = radius * radius
    total = 0
    for p in points:
        dx = p[0] - cx
        dy = p[1] - cy
        if dx * dx + dy * dy <= r2:
            total += 1
    return total


def _check_query(center, radius) -> None:
    if not (math.isfinite(center[0]) and math.isfinite(center[1])):
        raise ValueError(f"query center must be finite, got {center!r}")
    if not math.isfinite(radius) or radius < 0:
        raise ValueError(f"radius must be finite and >= 0, got {radius!r}")
