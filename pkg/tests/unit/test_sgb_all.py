"""Unit tests for distance-to-all grouping."""

import itertools

import numpy as np
import pytest
from oracles import accounted_ids, clique_violations, make_points
from pydantic import ValidationError

from similarity_groupby.exceptions import InvalidConfigurationError, InvalidInputError
from similarity_groupby.geometry import Metric, Point
from similarity_groupby.group_store import GroupStore
from similarity_groupby.model import OverlapPolicy, SgbAllConfig, Strategy
from similarity_groupby.sgb_all import find_close_groups_all_pairs, run_sgb_all

STRATEGIES = list(Strategy)


def config(**values) -> SgbAllConfig:
    values.setdefault("metric", Metric.LINF)
    values.setdefault("eps", 3)
    return SgbAllConfig.build(**values)


class TestExampleOne:
    """a1=(0,0), a2=(1,0), a3=(5,0), a4=(6,0), a5=(3,0) under LINF with eps=3."""

    @pytest.mark.parametrize("strategy", STRATEGIES)
    def test_join_any(self, example_one_points, strategy: Strategy) -> None:
        result = run_sgb_all(example_one_points, config(policy=OverlapPolicy.JOIN_ANY, strategy=strategy))
        assert result.group_sizes() == [3, 2]
        assert result.groups == [(1, [1, 2, 5]), (2, [3, 4])]
        assert result.eliminated == []

    @pytest.mark.parametrize("strategy", STRATEGIES)
    def test_eliminate(self, example_one_points, strategy: Strategy) -> None:
        result = run_sgb_all(example_one_points, config(policy=OverlapPolicy.ELIMINATE, strategy=strategy))
        assert result.group_sizes() == [2, 2]
        assert result.eliminated == [5]

    @pytest.mark.parametrize("strategy", STRATEGIES)
    def test_form_new_group(self, example_one_points, strategy: Strategy) -> None:
        result = run_sgb_all(example_one_points, config(policy=OverlapPolicy.FORM_NEW_GROUP, strategy=strategy))
        assert sorted(result.group_sizes()) == [1, 2, 2]
        assert result.groups == [(1, [1, 2]), (2, [3, 4]), (3, [5])]
        assert result.pass_count == 2
        assert not result.truncated

    def test_seeded_join_any_is_reproducible(self, example_one_points) -> None:
        cfg = config(policy=OverlapPolicy.JOIN_ANY, join_any_seed=42)
        first = run_sgb_all(example_one_points, cfg)
        second = run_sgb_all(example_one_points, cfg)
        assert first.groups == second.groups
        assert first.group_sizes() == [3, 2]

    def test_pass_limit_turns_leftovers_into_singletons(self, example_one_points, package_log) -> None:
        result = run_sgb_all(example_one_points, config(policy=OverlapPolicy.FORM_NEW_GROUP, max_recursion_depth=1))
        assert result.truncated
        assert result.pass_count == 1
        assert result.groups[-1] == (3, [5])
        assert "leftover points become singleton groups" in package_log.text


class TestOverlapGroups:
    """a=(0,0), b=(1,0) group together; c=(2,0) is within eps of b only (LINF, eps=1)."""

    points = [(1, Point(0, 0)), (2, Point(1, 0)), (3, Point(2, 0))]

    @pytest.mark.parametrize("strategy", STRATEGIES)
    def test_join_any_ignores_overlaps(self, strategy: Strategy) -> None:
        result = run_sgb_all(self.points, config(eps=1, policy=OverlapPolicy.JOIN_ANY, strategy=strategy))
        assert result.groups == [(1, [1, 2]), (2, [3])]

    @pytest.mark.parametrize("strategy", STRATEGIES)
    def test_eliminate_pulls_out_close_members(self, strategy: Strategy) -> None:
        result = run_sgb_all(self.points, config(eps=1, policy=OverlapPolicy.ELIMINATE, strategy=strategy))
        assert result.groups == [(1, [1]), (2, [3])]
        assert result.eliminated == [2]

    @pytest.mark.parametrize("strategy", STRATEGIES)
    def test_form_new_group_defers_close_members(self, strategy: Strategy) -> None:
        result = run_sgb_all(self.points, config(eps=1, policy=OverlapPolicy.FORM_NEW_GROUP, strategy=strategy))
        assert result.groups == [(1, [1]), (2, [3]), (3, [2])]
        assert result.pass_count == 2

    def test_all_pairs_classification(self) -> None:
        store = GroupStore(Metric.LINF, 1.0, itertools.count(1))
        g = store.new_group(1, Point(0, 0))
        store.add_member(g, 2, Point(1, 0))
        candidates, overlaps = find_close_groups_all_pairs(Point(2, 0), store, config(eps=1, policy=OverlapPolicy.ELIMINATE))
        assert candidates == []
        assert overlaps == [g]


class TestL2FalsePositives:
    def test_corner_points_are_rejected(self) -> None:
        eps = 1.0
        points: list[tuple[int, Point]] = []
        rid = itertools.count()
        for cx, cy in itertools.product(range(0, 50, 10), repeat=2):
            points.append((next(rid), Point(cx, cy)))
            for sx, sy in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
                # Inside the group rectangle, about 1.03 eps from the center.
                points.append((next(rid), Point(cx + sx * 0.73, cy + sy * 0.73)))
            points.append((next(rid), Point(cx + 0.3, cy + 0.1)))
        results = {s: run_sgb_all(points, config(metric=Metric.L2, eps=eps, strategy=s)) for s in STRATEGIES}
        reference = results[Strategy.ALL_PAIRS]
        assert all(r.groups == reference.groups for r in results.values())
        group_of = reference.group_of()
        for block in range(25):
            center, *corners, member = range(block * 6, block * 6 + 6)
            assert group_of[member] == group_of[center]
            assert all(group_of[c] != group_of[center] for c in corners)
        assert clique_violations(points, reference, Metric.L2, eps) == 0


class TestRoundingBoundary:
    """Points whose distance rounds to just above eps while m + eps rounds onto them."""

    @pytest.mark.parametrize("metric", list(Metric))
    @pytest.mark.parametrize("policy", list(OverlapPolicy))
    @pytest.mark.parametrize("strategy", STRATEGIES)
    def test_point_just_past_eps_starts_a_group(self, metric: Metric, policy: OverlapPolicy, strategy: Strategy) -> None:
        points = [(1, Point(0.1, 0)), (2, Point(0.30000000000000004, 0))]
        result = run_sgb_all(points, config(metric=metric, eps=0.2, policy=policy, strategy=strategy))
        assert result.groups == [(1, [1]), (2, [2])]
        assert clique_violations(points, result, metric, 0.2) == 0

    @pytest.mark.parametrize("policy", list(OverlapPolicy))
    @pytest.mark.parametrize("seed", range(3))
    def test_grid_points_agree_across_strategies(self, policy: OverlapPolicy, seed: int) -> None:
        # Multiples of 0.1 with eps 0.2 land many pairs exactly on rounded rectangle edges.
        rng = np.random.default_rng(seed)
        cells = rng.integers(0, 12, size=(200, 2))
        points = [(rid, Point(0.1 * int(i), 0.1 * int(j))) for rid, (i, j) in enumerate(cells)]
        results = [run_sgb_all(points, config(metric=Metric.LINF, eps=0.2, policy=policy, strategy=s)) for s in STRATEGIES]
        reference = results[0]
        for other in results[1:]:
            assert other.groups == reference.groups
            assert other.eliminated == reference.eliminated
        assert clique_violations(points, reference, Metric.LINF, 0.2) == 0


class TestStrategyEquivalence:
    @pytest.mark.parametrize("metric", list(Metric))
    @pytest.mark.parametrize("policy", list(OverlapPolicy))
    @pytest.mark.parametrize("clustered", [False, True])
    def test_strategies_agree(self, metric: Metric, policy: OverlapPolicy, clustered: bool) -> None:
        seed = 17 * list(Metric).index(metric) + 5 * list(OverlapPolicy).index(policy) + int(clustered)
        points = make_points(300, seed=seed, clustered=clustered)
        eps = 0.05
        results = [run_sgb_all(points, config(metric=metric, eps=eps, policy=policy, strategy=s)) for s in STRATEGIES]
        reference = results[0]
        for other in results[1:]:
            assert other.groups == reference.groups
            assert other.eliminated == reference.eliminated
        assert clique_violations(points, reference, metric, eps) == 0
        assert accounted_ids(reference) == list(range(len(points)))


class TestValidation:
    @pytest.mark.parametrize("values", [{"eps": 0}, {"eps": -1}, {"eps": float("nan")}, {"eps": float("inf")}])
    def test_bad_eps(self, values: dict) -> None:
        with pytest.raises(InvalidConfigurationError):
            SgbAllConfig.build(**values)

    def test_unknown_field(self) -> None:
        with pytest.raises(InvalidConfigurationError):
            SgbAllConfig.build(eps=1, colour="red")

    def test_depth_must_be_positive(self) -> None:
        with pytest.raises(InvalidConfigurationError):
            SgbAllConfig.build(eps=1, max_recursion_depth=0)

    def test_config_is_frozen(self) -> None:
        cfg = config()
        with pytest.raises(ValidationError):
            cfg.eps = 5

    def test_duplicate_ids(self) -> None:
        with pytest.raises(InvalidInputError):
            run_sgb_all([(1, Point(0, 0)), (1, Point(1, 1))], config())

    def test_non_finite_point(self) -> None:
        with pytest.raises(InvalidInputError):
            run_sgb_all([(1, Point(float("nan"), 0))], config())

    def test_empty_input(self) -> None:
        result = run_sgb_all([], config())
        assert result.groups == []
        assert result.pass_count == 1
