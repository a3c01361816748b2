"""
Distance-to-any similarity grouping.

A point joins every group that has at least one member within eps, merging those groups. The
final groups are the connected components of the eps-neighborhood graph, whatever the input
order. Group membership is tracked in a disjoint-set forest; the indexed strategy finds
neighbors through an R-tree over the points processed so far.
"""

import time
from collections.abc import Sequence

from similarity_groupby.disjoint_set import DisjointSet
from similarity_groupby.geometry import Point, Rect, search_window, similar
from similarity_groupby.logger import get_logger
from similarity_groupby.model import GroupingResult, SgbAnyConfig, Strategy, validate_points
from similarity_groupby.settings import get_settings
from similarity_groupby.spatial_index import RTree

logger = get_logger(__name__)

__all__ = ["run_sgb_any", "find_candidate_groups_any", "find_candidate_groups_all_pairs", "process_grouping_any"]


def find_candidate_groups_any(
    p: Point,
    points_ix: RTree[int],
    dsf: DisjointSet[int],
    coordinates: dict[int, Point],
    cfg: SgbAnyConfig,
) -> list[int]:
    """
    Roots of the groups with at least one member within eps of ``p``.

    Args:
    ----
        p: The incoming point.
        points_ix: Index over every previously processed point.
        dsf: Group membership of the processed points.
        coordinates: Record id to point, for confirming window hits.
        cfg: Metric and eps.

    Returns:
    -------
        Distinct disjoint-set roots in ascending order.

    """
    metric, eps = cfg.metric, cfg.eps
    # The window is a widened LINF ball: it may hold a few non-neighbors, never misses one.
    hits = points_ix.window_query(search_window(p, eps))
    return sorted({dsf.find(rid) for rid in hits if similar(coordinates[rid], p, metric, eps)})


def find_candidate_groups_all_pairs(
    p: Point,
    processed: Sequence[tuple[int, Point]],
    dsf: DisjointSet[int],
    cfg: SgbAnyConfig,
) -> list[int]:
    """Same contract as find_candidate_groups_any, by scanning every processed point."""
    metric, eps = cfg.metric, cfg.eps
    return sorted({dsf.find(rid) for rid, q in processed if similar(q, p, metric, eps)})


def process_grouping_any(record_id: int, candidate_roots: Sequence[int], dsf: DisjointSet[int], next_label: int) -> int:
    """
    Place ``record_id`` into the disjoint set.

    No candidate starts a new group labelled ``next_label``; one candidate is joined; several are
    merged first and then joined.

    Returns
    -------
        The label to use for the next new group.

    """
    if not candidate_roots:
        dsf.make_set(record_id, label=next_label)
        return next_label + 1
    first = candidate_roots[0]
    for other in candidate_roots[1:]:
        first = dsf.union(first, other)
    dsf.make_set(record_id)
    dsf.union(first, record_id)
    return next_label


def run_sgb_any(points: Sequence[tuple[int, Point]], cfg: SgbAnyConfig) -> GroupingResult:
    """
    Group points into connected components of the eps-neighborhood graph.

    Args:
    ----
        points: (record id, point) pairs in processing order.
        cfg: Engine configuration.

    Returns:
    -------
        A GroupingResult; group ids number groups by the creation order of their oldest part.

    Raises:
    ------
        InvalidInputError: On duplicate record ids or non-finite coordinates.

    """
    validate_points(points)
    started = time.perf_counter()
    dsf: DisjointSet[int] = DisjointSet()
    next_label = 1

    if cfg.strategy is Strategy.ALL_PAIRS:
        processed: list[tuple[int, Point]] = []
        for record_id, p in points:
            roots = find_candidate_groups_all_pairs(p, processed, dsf, cfg)
            next_label = process_grouping_any(record_id, roots, dsf, next_label)
            processed.append((record_id, p))
    else:
        settings = get_settings()
        points_ix: RTree[int] = RTree(settings.rtree_max_entries, settings.rtree_min_entries)
        coordinates: dict[int, Point] = {}
        for record_id, p in points:
            roots = find_candidate_groups_any(p, points_ix, dsf, coordinates, cfg)
            next_label = process_grouping_any(record_id, roots, dsf, next_label)
            points_ix.insert(record_id, Rect.of_point(p))
            coordinates[record_id] = p

    groups = sorted((dsf.label(root), members) for root, members in dsf.classes().items())
    elapsed_ms = (time.perf_counter() - started) * 1000
    logger.info(
        f"SGB-Any {cfg.metric.value} eps={cfg.eps} {cfg.strategy.value}: {len(points)} points -> "
        f"{len(groups)} groups in {elapsed_ms:.1f} ms"
    )
    return GroupingResult(groups=groups, eliminated=[], pass_count=1)
