"""Unit tests for points, rectangles, metrics and convex hulls."""

import math

import numpy as np
import pytest

from similarity_groupby.geometry import (
    Hull,
    Metric,
    Point,
    Rect,
    convex_hull,
    cross,
    distance,
    farthest_vertex,
    point_in_hull,
    rect_contains,
    rect_intersects,
    search_window,
    similar,
    widen,
)


class TestMetrics:
    @pytest.mark.parametrize(
        "a,b,metric,expected",
        [
            (Point(0, 0), Point(3, 4), Metric.L2, 5.0),
            (Point(0, 0), Point(3, 4), Metric.LINF, 4.0),
            (Point(1, 1), Point(1, 1), Metric.L2, 0.0),
            (Point(-2, 5), Point(1, 1), Metric.LINF, 4.0),
        ],
    )
    def test_distance(self, a: Point, b: Point, metric: Metric, expected: float) -> None:
        assert distance(a, b, metric) == pytest.approx(expected)

    def test_similarity_is_boundary_inclusive(self) -> None:
        assert similar(Point(0, 0), Point(3, 0), Metric.LINF, 3)
        assert similar(Point(0, 0), Point(3, 4), Metric.L2, 5)
        assert not similar(Point(0, 0), Point(3.0001, 0), Metric.LINF, 3)

    def test_l2_rejects_square_corner(self) -> None:
        # Inside the LINF ball, outside the L2 ball.
        assert similar(Point(0, 0), Point(0.9, 0.9), Metric.LINF, 1)
        assert not similar(Point(0, 0), Point(0.9, 0.9), Metric.L2, 1)

    def test_similar_agrees_with_distance(self) -> None:
        rng = np.random.default_rng(3)
        for _ in range(500):
            a, b = Point(*rng.random(2)), Point(*rng.random(2))
            eps = float(rng.random())
            for metric in Metric:
                assert similar(a, b, metric, eps) == (distance(a, b, metric) <= eps)

    def test_point_is_finite(self) -> None:
        assert Point(1.0, 2.0).is_finite()
        assert not Point(math.nan, 0.0).is_finite()
        assert not Point(0.0, math.inf).is_finite()

    @pytest.mark.parametrize("metric", list(Metric))
    @pytest.mark.parametrize("seed", range(3))
    def test_metric_axioms(self, metric: Metric, seed: int) -> None:
        rng = np.random.default_rng(seed)
        for _ in range(300):
            a, b, c = (Point(*xy) for xy in (rng.random((3, 2)) - 0.5) * 20)
            ab = distance(a, b, metric)
            assert ab >= 0
            assert distance(a, a, metric) == 0
            assert ab == distance(b, a, metric)
            assert distance(a, c, metric) <= ab + distance(b, c, metric) + 1e-9

    @pytest.mark.parametrize("seed", range(3))
    def test_linf_bounds_l2(self, seed: int) -> None:
        rng = np.random.default_rng(seed)
        for _ in range(300):
            a, b = (Point(*xy) for xy in (rng.random((2, 2)) - 0.5) * 20)
            linf, l2 = distance(a, b, Metric.LINF), distance(a, b, Metric.L2)
            assert linf <= l2 + 1e-9
            assert l2 <= math.sqrt(2) * linf + 1e-9


class TestRect:
    def test_square(self) -> None:
        assert Rect.square(Point(1, 2), 0.5) == Rect(0.5, 1.5, 1.5, 2.5)

    def test_of_point_is_degenerate(self) -> None:
        r = Rect.of_point(Point(2, 3))
        assert r.area() == 0
        assert r.is_valid()
        assert r.lo == r.hi == Point(2, 3)

    def test_from_corners_rejects_inverted(self) -> None:
        with pytest.raises(ValueError, match="out of order"):
            Rect.from_corners(Point(1, 1), Point(0, 2))

    def test_union_and_enlargement(self) -> None:
        a = Rect(0, 0, 1, 1)
        b = Rect(2, 0, 3, 1)
        assert a.union(b) == Rect(0, 0, 3, 1)
        assert a.enlargement(b) == pytest.approx(2.0)
        assert a.enlargement(Rect(0.2, 0.2, 0.5, 0.5)) == 0

    def test_intersection(self) -> None:
        assert Rect(0, 0, 2, 2).intersection(Rect(1, 1, 3, 3)) == Rect(1, 1, 2, 2)
        assert Rect(0, 0, 1, 1).intersection(Rect(1, 0, 2, 1)) == Rect(1, 0, 1, 1)
        assert Rect(0, 0, 1, 1).intersection(Rect(1.5, 0, 2, 1)) is None

    def test_contains_and_intersects_are_inclusive(self) -> None:
        r = Rect(0, 0, 1, 1)
        assert rect_contains(r, Point(1, 1))
        assert not rect_contains(r, Point(1.01, 1))
        assert rect_intersects(r, Rect(1, 1, 2, 2))
        assert not rect_intersects(r, Rect(1.01, 0, 2, 1))
        assert r.contains_rect(Rect(0, 0, 1, 0.5))
        assert not r.contains_rect(Rect(0, 0, 1.5, 0.5))

    def test_bounding(self) -> None:
        assert Rect.bounding([Rect(0, 1, 2, 3), Rect(-1, 2, 1, 5)]) == Rect(-1, 1, 2, 5)
        with pytest.raises(ValueError):
            Rect.bounding([])

    def test_width_height(self) -> None:
        r = Rect(1, 2, 4, 7)
        assert (r.width, r.height, r.area()) == (3, 5, 15)

    def test_widen_covers_original(self) -> None:
        r = Rect(0.1, -0.3, 0.30000000000000004, 1e6)
        wide = widen(r, 0.2)
        assert wide.contains_rect(r)
        assert wide != r
        assert wide.max_y - r.max_y < 1e-6

    @pytest.mark.parametrize("metric", list(Metric))
    @pytest.mark.parametrize("seed", range(3))
    def test_search_window_holds_every_similar_point(self, metric: Metric, seed: int) -> None:
        rng = np.random.default_rng(seed)
        for _ in range(200):
            p = Point(*(rng.random(2) * 10 ** float(rng.integers(-2, 4))))
            eps = float(rng.random()) * 10 ** float(rng.integers(-3, 2))
            window = search_window(p, eps)
            for sx, sy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                q = Point(p.x + sx * eps, p.y + sy * eps)
                for _ in range(4):
                    if similar(p, q, metric, eps):
                        assert rect_contains(window, q)
                    q = Point(math.nextafter(q.x, p.x), math.nextafter(q.y, p.y))

    def test_search_window_reaches_rounded_neighbor(self) -> None:
        p, q = Point(0.23217612806301458, 0), Point(0.03217612806301456, 0)
        assert not rect_contains(Rect.square(p, 0.2), q)
        assert similar(p, q, Metric.LINF, 0.2)
        assert rect_contains(search_window(p, 0.2), q)


class TestConvexHull:
    def test_square_with_center_drops_interior(self) -> None:
        hull = convex_hull([Point(0, 0), Point(2, 0), Point(2, 2), Point(0, 2), Point(1, 1)])
        assert hull.vertices == (Point(0, 0), Point(2, 0), Point(2, 2), Point(0, 2))

    def test_collinear_points_become_a_segment(self) -> None:
        hull = convex_hull([Point(0, 0), Point(1, 1), Point(2, 2), Point(3, 3)])
        assert hull.vertices == (Point(0, 0), Point(3, 3))

    def test_duplicates_collapse(self) -> None:
        assert convex_hull([Point(1, 1), Point(1, 1)]).vertices == (Point(1, 1),)

    def test_points_on_edges_are_not_vertices(self) -> None:
        hull = convex_hull([Point(0, 0), Point(1, 0), Point(2, 0), Point(2, 2), Point(0, 2)])
        assert Point(1, 0) not in hull.vertices
        assert len(hull) == 4

    def test_empty_raises(self) -> None:
        with pytest.raises(ValueError):
            convex_hull([])

    def test_counter_clockwise_and_convex(self) -> None:
        rng = np.random.default_rng(11)
        pts = [Point(*xy) for xy in rng.random((200, 2))]
        vertices = convex_hull(pts).vertices
        assert vertices[0] == min(pts)
        n = len(vertices)
        for i in range(n):
            o, a, b = vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]
            assert (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x) > 0
        hull = Hull(vertices)
        assert all(point_in_hull(p, hull) for p in pts)

    @pytest.mark.parametrize("seed", range(5))
    def test_hull_of_hull_is_unchanged(self, seed: int) -> None:
        pts = [Point(*xy) for xy in np.random.default_rng(seed).random((100, 2))]
        hull = convex_hull(pts)
        assert convex_hull(hull.vertices) == hull

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_half_plane_edges(self, seed: int) -> None:
        # An ordered pair (a, b) is a counter-clockwise hull edge when every other point lies strictly to its left.
        pts = [Point(*xy) for xy in np.random.default_rng(100 + seed).random((50, 2))]
        edges = {
            (a, b)
            for a in pts
            for b in pts
            if a != b and all(cross(a, b, c) > 0 for c in pts if c != a and c != b)
        }
        vertices = convex_hull(pts).vertices
        n = len(vertices)
        assert {(vertices[i], vertices[(i + 1) % n]) for i in range(n)} == edges


class TestPointInHull:
    hull = Hull((Point(0, 0), Point(2, 0), Point(2, 2), Point(0, 2)))

    @pytest.mark.parametrize(
        "p,inside",
        [
            (Point(1, 1), True),
            (Point(0, 0), True),
            (Point(2, 1), True),
            (Point(2.001, 1), False),
            (Point(-1, -1), False),
        ],
    )
    def test_square(self, p: Point, inside: bool) -> None:
        assert point_in_hull(p, self.hull) is inside

    def test_degenerate_hulls(self) -> None:
        assert point_in_hull(Point(1, 1), Hull((Point(1, 1),)))
        assert not point_in_hull(Point(1, 2), Hull((Point(1, 1),)))
        segment = Hull((Point(0, 0), Point(2, 2)))
        assert point_in_hull(Point(1, 1), segment)
        assert not point_in_hull(Point(1, 1.1), segment)
        assert not point_in_hull(Point(3, 3), segment)


class TestFarthestVertex:
    def test_farthest(self) -> None:
        vertices = [Point(0, 0), Point(4, 0), Point(0, 1)]
        assert farthest_vertex(vertices, Point(-1, 0)) == Point(4, 0)

    def test_tie_goes_to_lexicographically_smallest(self) -> None:
        vertices = [Point(2, 0), Point(0, 0)]
        assert farthest_vertex(vertices, Point(1, 0)) == Point(0, 0)

    def test_empty_raises(self) -> None:
        with pytest.raises(ValueError):
            farthest_vertex([], Point(0, 0))
