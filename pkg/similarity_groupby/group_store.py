"""
Groups under distance-to-all semantics.

Each group keeps its members, their points and an eps-all rectangle: the intersection of the
2*eps squares centered at every member. The LINF membership test compares a point with the members' extreme
coordinates using the same subtraction as ``similar``, so it agrees with a member scan even at
the eps boundary. Under L2 that test is only a filter and a convex hull test refines the answer.
Index keys and windows are widened by a few ulps and every hit is confirmed exactly.
"""

from collections.abc import Collection, Iterator
from dataclasses import dataclass, field

from similarity_groupby.exceptions import GroupStateError
from similarity_groupby.geometry import (
    Hull,
    Metric,
    Point,
    Rect,
    convex_hull,
    farthest_vertex,
    point_in_hull,
    search_window,
    similar,
    widen,
)
from similarity_groupby.logger import get_logger
from similarity_groupby.spatial_index import DEFAULT_MAX_ENTRIES, DEFAULT_MIN_ENTRIES, RTree

logger = get_logger(__name__)

__all__ = [
    "Group",
    "GroupStore",
    "canonical_rect",
    "candidate_test_linf",
    "candidate_test_l2",
    "overlap_test",
    "farthest_hull_vertex",
]


def canonical_rect(points: Collection[Point], eps: float) -> Rect:
    """Intersection of the 2*eps squares centered at ``points`` (which must be non-empty)."""
    xs = [p.x for p in points]
    ys = [p.y for p in points]
    return Rect(max(xs) - eps, max(ys) - eps, min(xs) + eps, min(ys) + eps)


@dataclass(eq=False)
class Group:
    """A group's members (record ids with their points), eps-all rectangle, member extent and cached hull."""

    group_id: int
    members: list[int]
    points: list[Point]
    rect: Rect
    extent: Rect
    _hull: Hull | None = field(default=None, repr=False)

    @classmethod
    def create(cls, group_id: int, record_id: int, p: Point, eps: float) -> "Group":
        """Single-member group whose rectangle is the 2*eps square centered at ``p``."""
        return cls(group_id=group_id, members=[record_id], points=[p], rect=Rect.square(p, eps), extent=Rect.of_point(p))

    def __len__(self) -> int:
        return len(self.members)

    def hull(self) -> Hull:
        """Convex hull of the member points, recomputed only after membership changed."""
        if self._hull is None:
            self._hull = convex_hull(self.points)
        return self._hull

    def add_member(self, record_id: int, p: Point, eps: float) -> None:
        """
        Add a point that passed the membership test and shrink the rectangle around it.

        Raises
        ------
            GroupStateError: If the shrunk rectangle would be empty.

        """
        shrunk = self.rect.intersection(Rect.square(p, eps))
        if shrunk is None:
            raise GroupStateError(
                problem=f"Point {p} cannot join group {self.group_id}",
                cause="Its 2*eps square does not intersect the group rectangle, so it is farther than eps from some member",
            )
        self.members.append(record_id)
        self.points.append(p)
        self.rect = shrunk
        self.extent = self.extent.union(Rect.of_point(p))
        self._hull = None

    def remove_members(self, record_ids: Collection[int], eps: float) -> None:
        """
        Remove members and recompute the rectangle from the survivors.

        An emptied group keeps its last rectangle; the owning store destroys it.

        Raises
        ------
            GroupStateError: If an id is not a member.

        """
        if not record_ids:
            return
        doomed = set(record_ids)
        unknown = doomed.difference(self.members)
        if unknown:
            raise GroupStateError(
                problem=f"Cannot remove {sorted(unknown)} from group {self.group_id}",
                cause="The ids are not members of the group",
                solution="Only remove ids returned by members_within for this group",
            )
        kept = [(rid, p) for rid, p in zip(self.members, self.points, strict=True) if rid not in doomed]
        self.members = [rid for rid, _ in kept]
        self.points = [p for _, p in kept]
        if self.points:
            self.rect = canonical_rect(self.points, eps)
            self.extent = Rect.bounding(Rect.of_point(q) for q in self.points)
        self._hull = None


def candidate_test_linf(g: Group, p: Point, eps: float) -> bool:
    """
    Exact under LINF: true iff ``p`` is within eps of every member.

    Equivalent to containment in the eps-all rectangle, but checked against the members' extreme
    coordinates with the subtraction ``similar`` uses; ``abs(m - p)`` is monotone in ``m``.
    """
    e = g.extent
    return abs(e.max_x - p.x) <= eps and abs(p.x - e.min_x) <= eps and abs(e.max_y - p.y) <= eps and abs(p.y - e.min_y) <= eps


def farthest_hull_vertex(g: Group, p: Point) -> Point:
    """Hull vertex farthest from ``p`` (Euclidean), ties to the lexicographically smallest vertex."""
    return farthest_vertex(g.hull().vertices, p)


def candidate_test_l2(g: Group, p: Point, eps: float) -> bool:
    """
    L2 membership test: the exact LINF test as a filter, then the convex hull refinement.

    A point inside the hull of a valid L2 clique is within eps of every member; otherwise it is
    enough to check the farthest hull vertex.
    """
    if not candidate_test_linf(g, p, eps):
        return False
    hull = g.hull()
    if point_in_hull(p, hull):
        return True
    return similar(p, farthest_vertex(hull.vertices, p), Metric.L2, eps)


def overlap_test(g: Group, p: Point, metric: Metric, eps: float) -> bool:
    """True if at least one member is within eps of ``p``."""
    return any(similar(m, p, metric, eps) for m in g.points)


class GroupStore:
    """
    Live groups of one grouping pass, optionally mirrored in an R-tree keyed by group id.

    Group ids come from ``id_source`` so that successive passes keep numbering upwards.
    """

    def __init__(
        self,
        metric: Metric,
        eps: float,
        id_source: Iterator[int],
        indexed: bool = False,
        max_entries: int = DEFAULT_MAX_ENTRIES,
        min_entries: int = DEFAULT_MIN_ENTRIES,
    ):
        self.metric = metric
        self.eps = eps
        self._ids = id_source
        self.groups: dict[int, Group] = {}
        self.index: RTree[int] | None = RTree(max_entries, min_entries) if indexed else None

    def __len__(self) -> int:
        return len(self.groups)

    def __iter__(self) -> Iterator[Group]:
        return iter(self.groups.values())

    def new_group(self, record_id: int, p: Point) -> Group:
        g = Group.create(next(self._ids), record_id, p, self.eps)
        self.groups[g.group_id] = g
        if self.index is not None:
            self.index.insert(g.group_id, self.index_key(g))
        return g

    def add_member(self, g: Group, record_id: int, p: Point) -> None:
        g.add_member(record_id, p, self.eps)
        if self.index is not None:
            self.index.update_key(g.group_id, self.index_key(g))

    def remove_members(self, g: Group, record_ids: Collection[int]) -> None:
        """Remove members; an emptied group is destroyed and dropped from the index."""
        g.remove_members(record_ids, self.eps)
        if g.members:
            if self.index is not None:
                self.index.update_key(g.group_id, self.index_key(g))
            return
        del self.groups[g.group_id]
        if self.index is not None:
            self.index.remove(g.group_id)
        logger.debug(f"Group {g.group_id} emptied and destroyed")

    def index_key(self, g: Group) -> Rect:
        """The group rectangle widened to cover every member despite rounding in its bounds."""
        return widen(g.rect, self.eps)

    def candidate_test(self, g: Group, p: Point) -> bool:
        if self.metric is Metric.LINF:
            return candidate_test_linf(g, p, self.eps)
        return candidate_test_l2(g, p, self.eps)

    def overlap_test(self, g: Group, p: Point) -> bool:
        return overlap_test(g, p, self.metric, self.eps)

    def members_within(self, g: Group, p: Point) -> list[int]:
        """Record ids of the members within eps of ``p``."""
        return [rid for rid, m in zip(g.members, g.points, strict=True) if similar(m, p, self.metric, self.eps)]

    def groups_near(self, p: Point) -> list[Group]:
        """
        Groups whose widened rectangle meets the search window around ``p``, ascending by id.

        Requires an indexed store.
        """
        if self.index is None:
            raise GroupStateError(problem="groups_near called on a store without index", cause="The store was built with indexed=False")
        return [self.groups[gid] for gid in self.index.window_query(search_window(p, self.eps))]

    def materialize(self) -> list[tuple[int, list[int]]]:
        return [(g.group_id, list(g.members)) for g in self.groups.values()]
