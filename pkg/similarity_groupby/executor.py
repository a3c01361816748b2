"""
Query execution: WHERE filtering, grouping and per-group aggregates.

Output rows are ordered by group id. Rows removed by ELIMINATE appear in no group and so in no
aggregate; their ids are reported on the ResultSet.
"""

import json
import math
import operator
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from similarity_groupby.geometry import Point, convex_hull
from similarity_groupby.logger import get_logger
from similarity_groupby.model import (
    DEFAULT_MAX_RECURSION_DEPTH,
    GroupingMode,
    GroupingResult,
    SgbAllConfig,
    SgbAnyConfig,
    Strategy,
)
from similarity_groupby.query import AggregateFunction, AggregateSpec, QueryPlan, validate_plan
from similarity_groupby.relation import Relation
from similarity_groupby.settings import OutputFormat, get_settings
from similarity_groupby.sgb_all import run_sgb_all
from similarity_groupby.sgb_any import run_sgb_any

logger = get_logger(__name__)

__all__ = ["ExecutionOptions", "ResultSet", "execute", "render_result", "GROUP_ID_COLUMN", "GROUP_SIZE_COLUMN"]

GROUP_ID_COLUMN = "group_id"
GROUP_SIZE_COLUMN = "group_size"
COLLECT_SEPARATOR = ";"

_COMPARATORS: dict[str, Callable] = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}

_PANDAS_AGGREGATES = {
    AggregateFunction.SUM: "sum",
    AggregateFunction.AVG: "mean",
    AggregateFunction.MIN: "min",
    AggregateFunction.MAX: "max",
}


@dataclass(frozen=True)
class ExecutionOptions:
    """Engine knobs that are not part of the query text."""

    strategy: Strategy = Strategy.INDEXED
    join_any_seed: int | None = None
    max_recursion_depth: int = DEFAULT_MAX_RECURSION_DEPTH
    params: Mapping[str, float] = field(default_factory=dict)

    @classmethod
    def from_settings(cls, **overrides) -> "ExecutionOptions":
        """Options from SGB_* settings, with non-None ``overrides`` applied on top."""
        settings = get_settings()
        values = {"strategy": settings.strategy, "max_recursion_depth": settings.max_recursion_depth}
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


@dataclass
class ResultSet:
    """
    Rows of an executed query.

    Attributes
    ----------
        columns: group_id, group_size, then one column per projection.
        rows: One list of values per group, ordered by group id.
        eliminated_row_ids: Row ids dropped by ELIMINATE.
        filtered_row_count: Rows that reached the grouping engine.
        skipped_row_count: Rows that passed WHERE but had non-finite grouping values.
        grouping: The raw engine output.

    """

    columns: list[str]
    rows: list[list]
    eliminated_row_ids: list[int] = field(default_factory=list)
    filtered_row_count: int = 0
    skipped_row_count: int = 0
    grouping: GroupingResult | None = None

    def __len__(self) -> int:
        return len(self.rows)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=self.columns)


def _where_mask(plan: QueryPlan, relation: Relation) -> pd.Series:
    frame = relation.frame
    mask = pd.Series(True, index=frame.index)
    for predicate in plan.filters:
        column = relation.resolve_column(predicate.column)
        mask &= _COMPARATORS[predicate.op](frame[column], predicate.value).fillna(False).astype(bool)
    return mask


def _engine_config(plan: QueryPlan, options: ExecutionOptions) -> SgbAllConfig | SgbAnyConfig:
    if plan.mode is GroupingMode.ALL:
        return SgbAllConfig.build(
            metric=plan.metric,
            eps=plan.eps,
            policy=plan.overlap_policy,
            strategy=options.strategy,
            join_any_seed=options.join_any_seed,
            max_recursion_depth=options.max_recursion_depth,
        )
    strategy = options.strategy
    if strategy is Strategy.BOUNDS_CHECKING:
        logger.info("Bounds checking applies to distance-to-all grouping only; using the indexed strategy")
        strategy = Strategy.INDEXED
    return SgbAnyConfig.build(metric=plan.metric, eps=plan.eps, strategy=strategy)


def _python_value(value):
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def _format_number(value: float | int) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def _format_hull(points: list[Point]) -> str:
    return ", ".join(f"{_format_number(v.x)} {_format_number(v.y)}" for v in convex_hull(points))


def _collect(values: pd.Series) -> str:
    present = [_python_value(v) for v in values]
    return COLLECT_SEPARATOR.join(_format_number(v) if isinstance(v, float) else str(v) for v in sorted(v for v in present if v is not None))


def _aggregate(spec: AggregateSpec, grouped, columns: Mapping[str, str], hulls: Mapping[int, str]) -> pd.Series:
    if spec.fn is AggregateFunction.HULL_POLYGON:
        return pd.Series(hulls)
    if spec.fn is AggregateFunction.COUNT:
        return grouped.size() if spec.arg is None else grouped[columns[spec.arg]].count()
    column = grouped[columns[spec.arg]]
    if spec.fn is AggregateFunction.COLLECT:
        return column.agg(_collect)
    return column.agg(_PANDAS_AGGREGATES[spec.fn])


def execute(plan: QueryPlan, relation: Relation, options: ExecutionOptions | None = None) -> ResultSet:
    """
    Run a parsed query against a relation.

    Args:
    ----
        plan: Parsed query; a named threshold is bound from ``options.params``.
        relation: The ingested input.
        options: Strategy, seed, pass limit and parameters. Defaults come from settings.

    Returns:
    -------
        The ResultSet.

    Raises:
    ------
        QuerySemanticError: If the plan does not fit the relation.
        InvalidConfigurationError: If the engine settings do not validate.

    Example:
    -------
        >>> rel = Relation.from_frame("P", pd.DataFrame({"x": [0.0, 1.0, 5.0, 6.0, 3.0], "y": [0.0] * 5}))
        >>> plan = parse("SELECT count(*) FROM P GROUP BY x, y DISTANCE-TO-ANY LINF WITHIN 3")
        >>> execute(plan, rel).rows
        [[1, 5, 5]]

    """
    options = options or ExecutionOptions.from_settings()
    plan = plan.bind(options.params)
    validate_plan(plan, relation)

    x_column, y_column = (relation.resolve_column(c) for c in plan.group_cols)
    filtered = relation.frame.loc[_where_mask(plan, relation)]
    coordinates = filtered[[x_column, y_column]].to_numpy(dtype="float64")
    finite = np.isfinite(coordinates).all(axis=1)
    skipped = int((~finite).sum())
    if skipped:
        logger.warning(f"Skipped {skipped} rows with non-finite values in {x_column}, {y_column}")
        filtered = filtered.loc[finite]
        coordinates = coordinates[finite]

    points = [(int(rid), Point(float(x), float(y))) for rid, (x, y) in zip(filtered.index, coordinates, strict=True)]
    cfg = _engine_config(plan, options)
    grouping = run_sgb_all(points, cfg) if plan.mode is GroupingMode.ALL else run_sgb_any(points, cfg)

    columns = [GROUP_ID_COLUMN, GROUP_SIZE_COLUMN] + [spec.render() for spec in plan.projections]
    rows: list[list] = []
    if grouping.groups:
        labels = pd.Series(grouping.group_of(), name=GROUP_ID_COLUMN)
        members = filtered.loc[labels.index]
        grouped = members.groupby(labels.to_numpy(), sort=True)
        resolved = {spec.arg: relation.resolve_column(spec.arg) for spec in plan.projections if spec.arg is not None}
        hulls: dict[int, str] = {}
        if any(spec.fn is AggregateFunction.HULL_POLYGON for spec in plan.projections):
            positions = dict(points)
            hulls = {group_id: _format_hull([positions[rid] for rid in ids]) for group_id, ids in grouping.groups}
        table = pd.DataFrame({GROUP_SIZE_COLUMN: grouped.size()})
        for position, spec in enumerate(plan.projections):
            table[position] = _aggregate(spec, grouped, resolved, hulls)
        rows = [[int(group_id)] + [_python_value(v) for v in values] for group_id, values in zip(table.index, table.to_numpy(dtype=object).tolist(), strict=True)]

    logger.info(
        f"Query on {relation.name!r}: {len(relation)} rows, {len(filtered)} grouped, {len(rows)} groups, "
        f"{len(grouping.eliminated)} eliminated"
    )
    return ResultSet(
        columns=columns,
        rows=rows,
        eliminated_row_ids=list(grouping.eliminated),
        filtered_row_count=len(filtered),
        skipped_row_count=skipped,
        grouping=grouping,
    )


def render_result(result: ResultSet, output_format: OutputFormat | str = OutputFormat.CSV) -> str:
    """
    Serialize a ResultSet.

    CSV is a header line plus one line per group (header only when there are no groups). JSON
    is an object with ``columns``, ``rows`` (lists in column order) and ``eliminated_row_ids``.
    """
    output_format = OutputFormat(output_format)
    if output_format is OutputFormat.JSON:
        payload = {
            "columns": result.columns,
            "rows": result.rows,
            "eliminated_row_ids": result.eliminated_row_ids,
            "filtered_row_count": result.filtered_row_count,
            "skipped_row_count": result.skipped_row_count,
        }
        return json.dumps(payload, indent=2) + "\n"
    return result.to_frame().to_csv(index=False, lineterminator="\n")
