"""
Similarity GROUP BY for two-dimensional points.

Groups rows whose (x, y) grouping values are within a distance threshold of each other, either
of every member (distance-to-all, with an overlap policy) or of some member (distance-to-any),
and evaluates aggregates per group. ``sgb`` is the command line front end.
"""

from similarity_groupby.executor import ExecutionOptions, ResultSet, execute, render_result
from similarity_groupby.geometry import Metric, Point
from similarity_groupby.model import GroupingMode, GroupingResult, OverlapPolicy, SgbAllConfig, SgbAnyConfig, Strategy
from similarity_groupby.query import QueryPlan, parse, render_plan
from similarity_groupby.relation import Relation, ingest_csv
from similarity_groupby.sgb_all import run_sgb_all
from similarity_groupby.sgb_any import run_sgb_any

__version__ = "0.1.0"

__all__ = [
    "ExecutionOptions",
    "GroupingMode",
    "GroupingResult",
    "Metric",
    "OverlapPolicy",
    "Point",
    "QueryPlan",
    "Relation",
    "ResultSet",
    "SgbAllConfig",
    "SgbAnyConfig",
    "Strategy",
    "execute",
    "ingest_csv",
    "parse",
    "render_plan",
    "render_result",
    "run_sgb_all",
    "run_sgb_any",
]
