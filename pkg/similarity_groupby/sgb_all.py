"""
Distance-to-all similarity grouping.

Points are processed in input order. For each point the configured strategy finds the candidate
groups (every member within eps) and the overlap groups (some but not all members within eps).
The point then starts a group, joins one, or is arbitrated by the overlap policy, and under
ELIMINATE or FORM-NEW-GROUP the members of overlap groups that are within eps of the point are
pulled out as well.

FORM-NEW-GROUP regroups the deferred points in further passes until none are left or the pass
limit is reached.
"""

import itertools
import time
from collections.abc import Iterable, Iterator, Sequence

import numpy as np

from similarity_groupby.geometry import Point, rect_intersects, search_window, similar
from similarity_groupby.group_store import Group, GroupStore
from similarity_groupby.logger import get_logger
from similarity_groupby.model import GroupingResult, OverlapPolicy, SgbAllConfig, Strategy, validate_points
from similarity_groupby.settings import get_settings

logger = get_logger(__name__)

__all__ = [
    "run_sgb_all",
    "find_close_groups_all_pairs",
    "find_close_groups_bounds",
    "find_close_groups_indexed",
    "SgbAllPass",
]

CloseGroups = tuple[list[Group], list[Group]]


def find_close_groups_all_pairs(p: Point, groups: Iterable[Group], cfg: SgbAllConfig) -> CloseGroups:
    """
    Classify groups by comparing ``p`` with every member.

    Args:
    ----
        p: The incoming point.
        groups: Live groups in ascending id order.
        cfg: Metric, eps and overlap policy.

    Returns:
    -------
        (candidate groups, overlap groups). Overlaps are only collected when the policy is not
        JOIN-ANY; under JOIN-ANY the member scan of a group stops at the first miss.

    """
    track_overlaps = cfg.policy is not OverlapPolicy.JOIN_ANY
    metric, eps = cfg.metric, cfg.eps
    candidates: list[Group] = []
    overlaps: list[Group] = []
    for g in groups:
        all_close = True
        any_close = False
        for m in g.points:
            if similar(m, p, metric, eps):
                any_close = True
            else:
                all_close = False
                if not track_overlaps:
                    break
        if all_close:
            candidates.append(g)
        elif track_overlaps and any_close:
            overlaps.append(g)
    return candidates, overlaps


def _classify_with_bounds(p: Point, groups: Iterable[Group], store: GroupStore, cfg: SgbAllConfig) -> CloseGroups:
    track_overlaps = cfg.policy is not OverlapPolicy.JOIN_ANY
    window = search_window(p, cfg.eps)
    candidates: list[Group] = []
    overlaps: list[Group] = []
    for g in groups:
        if store.candidate_test(g, p):
            candidates.append(g)
        elif track_overlaps and rect_intersects(store.index_key(g), window) and store.overlap_test(g, p):
            overlaps.append(g)
    return candidates, overlaps


def find_close_groups_bounds(p: Point, store: GroupStore, cfg: SgbAllConfig) -> CloseGroups:
    """
    Classify groups through their eps-all rectangles, scanning every group.

    Members are only inspected for overlap detection, and only when the group rectangle meets
    the 2*eps square around ``p``.
    """
    return _classify_with_bounds(p, store, store, cfg)


def find_close_groups_indexed(p: Point, store: GroupStore, cfg: SgbAllConfig) -> CloseGroups:
    """
    Like find_close_groups_bounds, restricted to the groups an R-tree window query returns.

    Groups whose rectangle misses the 2*eps square around ``p`` can be neither candidates nor
    overlaps, so skipping them changes nothing.
    """
    return _classify_with_bounds(p, store.groups_near(p), store, cfg)


class SgbAllPass:
    """
    State of one pass over a point sequence.

    Attributes
    ----------
        store: The live groups.
        eliminated: Record ids dropped by ELIMINATE.
        deferred: Points set aside by FORM-NEW-GROUP for the next pass.

    """

    def __init__(self, cfg: SgbAllConfig, id_source: Iterator[int], rng: np.random.Generator | None = None):
        settings = get_settings()
        self.cfg = cfg
        self.store = GroupStore(
            cfg.metric,
            cfg.eps,
            id_source,
            indexed=cfg.strategy is Strategy.INDEXED,
            max_entries=settings.rtree_max_entries,
            min_entries=settings.rtree_min_entries,
        )
        self.rng = rng
        self.eliminated: list[int] = []
        self.deferred: list[tuple[int, Point]] = []

    def find_close_groups(self, p: Point) -> CloseGroups:
        strategy = self.cfg.strategy
        if strategy is Strategy.ALL_PAIRS:
            return find_close_groups_all_pairs(p, self.store, self.cfg)
        if strategy is Strategy.BOUNDS_CHECKING:
            return find_close_groups_bounds(p, self.store, self.cfg)
        return find_close_groups_indexed(p, self.store, self.cfg)

    def process(self, record_id: int, p: Point) -> None:
        candidates, overlaps = self.find_close_groups(p)
        self.process_grouping(record_id, p, candidates)
        if overlaps and self.cfg.policy is not OverlapPolicy.JOIN_ANY:
            self.process_overlap(p, overlaps)

    def process_grouping(self, record_id: int, p: Point, candidates: Sequence[Group]) -> None:
        """Start a group, join the only candidate, or let the policy arbitrate between several."""
        if not candidates:
            self.store.new_group(record_id, p)
        elif len(candidates) == 1:
            self.store.add_member(candidates[0], record_id, p)
        elif self.cfg.policy is OverlapPolicy.JOIN_ANY:
            self.store.add_member(self._pick(candidates), record_id, p)
        elif self.cfg.policy is OverlapPolicy.ELIMINATE:
            self.eliminated.append(record_id)
        else:
            self.deferred.append((record_id, p))

    def _pick(self, candidates: Sequence[Group]) -> Group:
        if self.rng is None:
            return min(candidates, key=lambda g: g.group_id)
        return candidates[int(self.rng.integers(len(candidates)))]

    def process_overlap(self, p: Point, overlaps: Sequence[Group]) -> None:
        """Pull the members within eps of ``p`` out of every overlap group."""
        for g in overlaps:
            removed = self.store.members_within(g, p)
            if not removed:
                logger.warning(f"Overlap group {g.group_id} has no member within eps of {p}")
                continue
            if self.cfg.policy is OverlapPolicy.ELIMINATE:
                self.eliminated.extend(removed)
            else:
                positions = dict(zip(g.members, g.points, strict=True))
                self.deferred.extend((rid, positions[rid]) for rid in removed)
            self.store.remove_members(g, removed)


def run_sgb_all(points: Sequence[tuple[int, Point]], cfg: SgbAllConfig) -> GroupingResult:
    """
    Group points so that every pair within a group is within eps.

    Args:
    ----
        points: (record id, point) pairs; the list order is the processing order.
        cfg: Engine configuration.

    Returns:
    -------
        A GroupingResult with groups sorted by group id.

    Raises:
    ------
        InvalidInputError: On duplicate record ids or non-finite coordinates.

    Example:
    -------
        >>> pts = [(1, Point(0, 0)), (2, Point(1, 0)), (3, Point(5, 0)), (4, Point(6, 0)), (5, Point(3, 0))]
        >>> cfg = SgbAllConfig(metric="LINF", eps=3, policy=OverlapPolicy.ELIMINATE)
        >>> run_sgb_all(pts, cfg).group_sizes()
        [2, 2]

    """
    validate_points(points)
    started = time.perf_counter()
    id_source = itertools.count(1)
    rng = np.random.default_rng(cfg.join_any_seed) if cfg.join_any_seed is not None else None

    groups: list[tuple[int, list[int]]] = []
    eliminated: list[int] = []
    pending: list[tuple[int, Point]] = list(points)
    passes = 0
    truncated = False
    while pending:
        if passes == cfg.max_recursion_depth:
            truncated = True
            logger.warning(
                f"FORM-NEW-GROUP stopped after {passes} passes; {len(pending)} leftover points become singleton groups"
            )
            groups.extend((next(id_source), [record_id]) for record_id, _ in pending)
            break
        passes += 1
        current = SgbAllPass(cfg, id_source, rng)
        for record_id, p in pending:
            current.process(record_id, p)
        groups.extend(current.store.materialize())
        eliminated.extend(current.eliminated)
        logger.debug(
            f"Pass {passes}: {len(pending)} points, {len(current.store)} groups, "
            f"{len(current.eliminated)} eliminated, {len(current.deferred)} deferred"
        )
        pending = current.deferred

    groups.sort(key=lambda item: item[0])
    elapsed_ms = (time.perf_counter() - started) * 1000
    logger.info(
        f"SGB-All {cfg.metric.value} eps={cfg.eps} {cfg.policy.value} {cfg.strategy.value}: {len(points)} points -> "
        f"{len(groups)} groups, {len(eliminated)} eliminated, {passes} passes in {elapsed_ms:.1f} ms"
    )
    return GroupingResult(groups=groups, eliminated=eliminated, pass_count=max(passes, 1), truncated=truncated)
