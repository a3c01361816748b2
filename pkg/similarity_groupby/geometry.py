"""
Planar geometry for similarity grouping.

Points, axis-aligned rectangles, the two supported Minkowski metrics, the inclusive similarity
predicate and convex hulls (monotone chain). Every test here is boundary inclusive.
"""

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

__all__ = [
    "Metric",
    "Point",
    "Rect",
    "Hull",
    "cross",
    "distance",
    "similar",
    "convex_hull",
    "point_in_hull",
    "farthest_vertex",
    "rect_contains",
    "rect_intersects",
    "widen",
    "search_window",
]


class Metric(str, Enum):
    """Distance functions accepted by the grouping engines."""

    L2 = "L2"
    LINF = "LINF"


class Point(NamedTuple):
    """A 2-D coordinate. Tuple ordering gives the lexicographic (x, then y) order used for tie-breaks."""

    x: float
    y: float

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


class Rect(NamedTuple):
    """Closed axis-aligned rectangle [min_x, max_x] x [min_y, max_y]."""

    min_x: float
    min_y: float
    max_x: float
    max_y: float

    @classmethod
    def from_corners(cls, lo: Point, hi: Point) -> "Rect":
        """
        Build a rectangle from its min and max corners.

        Raises
        ------
            ValueError: If lo is not below-left of hi.

        """
        if lo.x > hi.x or lo.y > hi.y:
            raise ValueError(f"Rectangle corners out of order: lo={lo}, hi={hi}")
        return cls(lo.x, lo.y, hi.x, hi.y)

    @classmethod
    def of_point(cls, p: Point) -> "Rect":
        return cls(p.x, p.y, p.x, p.y)

    @classmethod
    def square(cls, center: Point, half_side: float) -> "Rect":
        """The 2*half_side square centered at ``center``."""
        return cls(center.x - half_side, center.y - half_side, center.x + half_side, center.y + half_side)

    @property
    def lo(self) -> Point:
        return Point(self.min_x, self.min_y)

    @property
    def hi(self) -> Point:
        return Point(self.max_x, self.max_y)

    @property
    def width(self) -> float:
        return self.max_x - self.min_x

    @property
    def height(self) -> float:
        return self.max_y - self.min_y

    def area(self) -> float:
        return (self.max_x - self.min_x) * (self.max_y - self.min_y)

    def is_valid(self) -> bool:
        return self.min_x <= self.max_x and self.min_y <= self.max_y

    def union(self, other: "Rect") -> "Rect":
        """Smallest rectangle covering both."""
        return Rect(
            min(self.min_x, other.min_x),
            min(self.min_y, other.min_y),
            max(self.max_x, other.max_x),
            max(self.max_y, other.max_y),
        )

    def intersection(self, other: "Rect") -> "Rect | None":
        """Common part of both rectangles, or None when they are disjoint."""
        result = Rect(
            max(self.min_x, other.min_x),
            max(self.min_y, other.min_y),
            min(self.max_x, other.max_x),
            min(self.max_y, other.max_y),
        )
        return result if result.is_valid() else None

    def contains_rect(self, other: "Rect") -> bool:
        return self.min_x <= other.min_x and self.min_y <= other.min_y and other.max_x <= self.max_x and other.max_y <= self.max_y

    def enlargement(self, other: "Rect") -> float:
        """Area growth needed for this rectangle to also cover ``other``."""
        return self.union(other).area() - self.area()

    @staticmethod
    def bounding(rects: Iterable["Rect"]) -> "Rect":
        """Minimum bounding rectangle of a non-empty collection."""
        iterator = iter(rects)
        try:
            min_x, min_y, max_x, max_y = next(iterator)
        except StopIteration:
            raise ValueError("Cannot bound an empty collection of rectangles") from None
        for r in iterator:
            if r.min_x < min_x:
                min_x = r.min_x
            if r.min_y < min_y:
                min_y = r.min_y
            if r.max_x > max_x:
                max_x = r.max_x
            if r.max_y > max_y:
                max_y = r.max_y
        return Rect(min_x, min_y, max_x, max_y)


@dataclass(frozen=True)
class Hull:
    """
    Convex hull as counter-clockwise vertices starting at the lexicographically least point.

    One vertex means all inputs coincide; two vertices describe a segment.
    """

    vertices: tuple[Point, ...]

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)


def cross(o: Point, a: Point, b: Point) -> float:
    """Z component of (a - o) x (b - o); positive when o -> a -> b turns left."""
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


def distance(a: Point, b: Point, metric: Metric) -> float:
    """
    Distance between two points.

    Args:
    ----
        a: First point.
        b: Second point.
        metric: L2 (Euclidean) or LINF (maximum coordinate difference).

    Returns:
    -------
        The non-negative distance.

    """
    dx = abs(a.x - b.x)
    dy = abs(a.y - b.y)
    if metric is Metric.LINF:
        return dx if dx >= dy else dy
    return math.hypot(dx, dy)


def similar(a: Point, b: Point, metric: Metric, eps: float) -> bool:
    """Similarity predicate: distance(a, b) <= eps."""
    dx = abs(a.x - b.x)
    dy = abs(a.y - b.y)
    if metric is Metric.LINF:
        return dx <= eps and dy <= eps
    if dx > eps or dy > eps:
        return False
    return math.hypot(dx, dy) <= eps


def convex_hull(points: Iterable[Point]) -> Hull:
    """
    Monotone chain convex hull.

    Collinear points on an edge are dropped. Vertices come out counter-clockwise starting at
    the lexicographically least point.

    Raises
    ------
        ValueError: If ``points`` is empty.

    """
    pts = sorted(set(points))
    if not pts:
        raise ValueError("Convex hull of an empty point set is undefined")
    if len(pts) <= 2:
        return Hull(tuple(pts))

    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return Hull(tuple(lower[:-1] + upper[:-1]))


def _on_segment(p: Point, a: Point, b: Point) -> bool:
    return (
        cross(a, b, p) == 0
        and min(a.x, b.x) <= p.x <= max(a.x, b.x)
        and min(a.y, b.y) <= p.y <= max(a.y, b.y)
    )


def point_in_hull(p: Point, hull: Hull) -> bool:
    """True if ``p`` lies inside the hull or on its boundary."""
    vertices = hull.vertices
    n = len(vertices)
    if n == 1:
        return p == vertices[0]
    if n == 2:
        return _on_segment(p, vertices[0], vertices[1])
    for i in range(n):
        if cross(vertices[i], vertices[(i + 1) % n], p) < 0:
            return False
    return True


def farthest_vertex(vertices: Sequence[Point], p: Point) -> Point:
    """
    Vertex with the largest Euclidean distance from ``p``.

    Ties go to the lexicographically smallest vertex.
    """
    if not vertices:
        raise ValueError("No vertices to search")
    best = vertices[0]
    best_d2 = (best.x - p.x) ** 2 + (best.y - p.y) ** 2
    for v in vertices[1:]:
        d2 = (v.x - p.x) ** 2 + (v.y - p.y) ** 2
        if d2 > best_d2 or (d2 == best_d2 and v < best):
            best, best_d2 = v, d2
    return best


def rect_contains(r: Rect, p: Point) -> bool:
    """Inclusive point-in-rectangle test."""
    return r.min_x <= p.x <= r.max_x and r.min_y <= p.y <= r.max_y


def rect_intersects(r1: Rect, r2: Rect) -> bool:
    """Inclusive overlap test; touching edges or corners count."""
    return r1.min_x <= r2.max_x and r2.min_x <= r1.max_x and r1.min_y <= r2.max_y and r2.min_y <= r1.max_y


# Units in the last place a computed bound may sit inside the set it should cover.
ROUNDING_SLACK_ULPS = 8


def _slack(value: float, eps: float) -> float:
    return ROUNDING_SLACK_ULPS * math.ulp(max(abs(value), eps))


def widen(r: Rect, eps: float) -> Rect:
    """
    ``r`` pushed outward by a few ulps on every side.

    A bound computed as ``m - eps`` can round past a point whose ``abs(m - p)`` still compares
    ``<= eps``. The widened rectangle covers every such point, so a window or key built from it
    never drops a true neighbor; hits must then be confirmed with ``similar``.
    """
    return Rect(
        r.min_x - _slack(r.min_x, eps),
        r.min_y - _slack(r.min_y, eps),
        r.max_x + _slack(r.max_x, eps),
        r.max_y + _slack(r.max_y, eps),
    )


def search_window(p: Point, eps: float) -> Rect:
    """Window holding every point ``similar`` to ``p`` under either metric."""
    return widen(Rect.square(p, eps), eps)
