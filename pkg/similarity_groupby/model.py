"""
Shared engine types: enumerations, validated run configurations and the grouping result.

Configurations are frozen pydantic models. Use the ``build`` classmethods to get a
``InvalidConfigurationError`` instead of a raw ``pydantic.ValidationError``.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Self

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from similarity_groupby.exceptions import InvalidConfigurationError, InvalidInputError
from similarity_groupby.geometry import Metric, Point

__all__ = [
    "GroupingMode",
    "OverlapPolicy",
    "Strategy",
    "SgbAllConfig",
    "SgbAnyConfig",
    "GroupingResult",
    "DEFAULT_MAX_RECURSION_DEPTH",
    "validate_points",
]

DEFAULT_MAX_RECURSION_DEPTH = 64


class GroupingMode(str, Enum):
    """Distance-to-all (cliques) or distance-to-any (connected components)."""

    ALL = "ALL"
    ANY = "ANY"


class OverlapPolicy(str, Enum):
    """Arbitration for points that qualify for more than one group."""

    JOIN_ANY = "JOIN-ANY"
    ELIMINATE = "ELIMINATE"
    FORM_NEW_GROUP = "FORM-NEW-GROUP"


class Strategy(str, Enum):
    """How candidate groups are located for each incoming point."""

    ALL_PAIRS = "all-pairs"
    BOUNDS_CHECKING = "bounds"
    INDEXED = "indexed"


class _EngineConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    metric: Metric = Metric.L2
    eps: float = Field(gt=0)

    @field_validator("eps")
    @classmethod
    def _finite_eps(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("eps must be finite")
        return value

    @classmethod
    def build(cls, **values) -> Self:
        """
        Validate and construct a configuration.

        Raises
        ------
            InvalidConfigurationError: Wrapping the pydantic validation error.

        """
        try:
            return cls(**values)
        except ValidationError as e:
            raise InvalidConfigurationError(original_exception=e, problem=f"Invalid {cls.__name__}") from e


class SgbAllConfig(_EngineConfig):
    """Settings of one distance-to-all grouping run."""

    policy: OverlapPolicy = OverlapPolicy.JOIN_ANY
    strategy: Strategy = Strategy.INDEXED
    join_any_seed: int | None = None
    max_recursion_depth: int = Field(default=DEFAULT_MAX_RECURSION_DEPTH, ge=1)


class SgbAnyConfig(_EngineConfig):
    """Settings of one distance-to-any grouping run."""

    strategy: Strategy = Strategy.INDEXED

    @field_validator("strategy")
    @classmethod
    def _no_bounds(cls, value: Strategy) -> Strategy:
        if value is Strategy.BOUNDS_CHECKING:
            raise ValueError("distance-to-any grouping supports only the all-pairs and indexed strategies")
        return value


@dataclass
class GroupingResult:
    """
    Output of a grouping run.

    Attributes
    ----------
        groups: (group id, member record ids) pairs sorted by group id; members in join order.
        eliminated: Record ids dropped by the ELIMINATE policy, in elimination order.
        pass_count: Number of passes over the input (more than one only for FORM-NEW-GROUP).
        truncated: True when FORM-NEW-GROUP hit its pass limit and leftovers became singletons.

    """

    groups: list[tuple[int, list[int]]]
    eliminated: list[int] = field(default_factory=list)
    pass_count: int = 1
    truncated: bool = False

    @property
    def group_count(self) -> int:
        return len(self.groups)

    def group_sizes(self) -> list[int]:
        """Group sizes, largest first."""
        return sorted((len(members) for _, members in self.groups), reverse=True)

    def partition(self) -> frozenset[frozenset[int]]:
        """Groups as an order-free set of member sets."""
        return frozenset(frozenset(members) for _, members in self.groups)

    def group_of(self) -> dict[int, int]:
        """Record id to group id."""
        return {record_id: group_id for group_id, members in self.groups for record_id in members}


def validate_points(points: Sequence[tuple[int, Point]]) -> None:
    """
    Check engine input.

    Raises
    ------
        InvalidInputError: On a repeated record id or a non-finite coordinate.

    """
    seen: set[int] = set()
    for record_id, p in points:
        if record_id in seen:
            raise InvalidInputError(problem=f"Record id {record_id} appears twice", cause="Record ids identify points and must be unique")
        seen.add(record_id)
        if not p.is_finite():
            raise InvalidInputError(
                problem=f"Record {record_id} has non-finite coordinates {p}",
                cause="NaN or infinite values cannot be compared by distance",
            )
