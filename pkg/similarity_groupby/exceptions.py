"""Custom exceptions for the similarity_groupby package."""

from collections.abc import Hashable


class ProblemCauseSolution(Exception):
    """
    Exception class that wraps other exceptions with Problem-Cause-Solution information.

    This helps provide clear guidance on what went wrong, why it happened, and how to fix it.
    """

    def __init__(self, problem: str, cause: str, solution: str, original_exception: Exception | None = None):
        """
        Initialize the exception with problem, cause, and solution information.

        Args:
        ----
            problem (str): Description of what went wrong
            cause (str): Explanation of why it happened
            solution (str): Instructions on how to fix it
            original_exception (Exception | None, optional): The original exception that caused this

        """
        self.problem = problem
        self.cause = cause
        self.solution = solution
        self.original_exception = original_exception
        super().__init__(f"{problem}\nCause: {cause}\nSolution: {solution}")

    def __reduce__(self):
        # Subclasses have their own __init__ signatures; rebuild from state so errors survive process pools.
        return (_restore_error, (type(self), self.args, self.__dict__))


def _restore_error(cls: type[Exception], args: tuple, state: dict) -> Exception:
    error = cls.__new__(cls)
    error.args = args
    error.__dict__.update(state)
    return error


class SimilarityGroupByError(ProblemCauseSolution):
    """Root of every error raised by this package."""


class DuplicateIdError(SimilarityGroupByError):
    """An id was inserted twice into a spatial index or disjoint set."""

    def __init__(self, item_id: Hashable, container: str = "index"):
        self.item_id = item_id
        super().__init__(
            problem=f"Id {item_id!r} is already present in the {container}",
            cause="Every id must be unique within one index or disjoint-set instance",
            solution="Use update_key to move an existing entry, or remove it before inserting again",
        )


class UnknownIdError(SimilarityGroupByError):
    """An operation referenced an id that was never inserted (or was already removed)."""

    def __init__(self, item_id: Hashable, container: str = "index"):
        self.item_id = item_id
        super().__init__(
            problem=f"Id {item_id!r} is not present in the {container}",
            cause="The id was never inserted or has already been removed",
            solution="Insert the id first, or check membership with 'in' before calling",
        )


class GroupStateError(SimilarityGroupByError):
    """A group mutation violated its precondition."""

    def __init__(self, problem: str, cause: str, solution: str = "This is an engine bug; please report the input that triggers it"):
        super().__init__(problem=problem, cause=cause, solution=solution)


class InvalidConfigurationError(SimilarityGroupByError):
    """Engine, benchmark or settings configuration failed validation."""

    def __init__(
        self,
        original_exception: Exception | None = None,
        problem: str | None = None,
        cause: str | None = None,
        solution: str | None = None,
    ):
        """
        Initialize the configuration error.

        Args:
        ----
            original_exception (Exception | None, optional): Usually a pydantic ValidationError
            problem (str | None, optional): Custom problem description
            cause (str | None, optional): Custom cause description
            solution (str | None, optional): Custom solution description

        """
        super().__init__(
            problem=problem or "Invalid configuration",
            cause=cause or (str(original_exception) if original_exception else "A configuration value is out of range"),
            solution=solution or "Check eps (> 0), strategy, policy and depth values",
            original_exception=original_exception,
        )


class InvalidInputError(SimilarityGroupByError):
    """Points handed to an engine were not usable."""

    def __init__(self, problem: str, cause: str, solution: str = "Filter non-finite values and duplicate ids before grouping"):
        super().__init__(problem=problem, cause=cause, solution=solution)


class QuerySyntaxError(SimilarityGroupByError):
    """The query text does not match the grammar."""

    def __init__(self, message: str, line: int, column: int, text: str = ""):
        self.line = line
        self.column = column
        self.message = message
        super().__init__(
            problem=f"{line}:{column}: {message}",
            cause=f"Unexpected input near {text!r}" if text else "Unexpected end of query",
            solution="Check the query against: SELECT ... FROM t GROUP BY x, y DISTANCE-TO-ALL|DISTANCE-TO-ANY L2|LINF WITHIN eps",
        )


class QuerySemanticError(SimilarityGroupByError):
    """The query parses but cannot be executed as written."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None, solution: str | None = None):
        self.line = line
        self.column = column
        self.message = message
        location = f"{line}:{column}: " if line is not None and column is not None else ""
        super().__init__(
            problem=f"{location}{message}",
            cause="The query is well formed but refers to something invalid",
            solution=solution or "Fix the referenced column, threshold or clause",
        )


class IngestError(SimilarityGroupByError):
    """A CSV input could not be loaded as a relation."""

    def __init__(self, path: str, message: str, line: int | None = None, original_exception: Exception | None = None):
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else path
        super().__init__(
            problem=f"Cannot ingest {where}: {message}",
            cause=str(original_exception) if original_exception else message,
            solution="Check that the file exists, has a header (or pass column names) and equal-length rows",
            original_exception=original_exception,
        )


class BenchValidationError(SimilarityGroupByError):
    """A benchmarked run produced a group that violates its grouping semantics."""

    def __init__(self, problem: str, cause: str):
        super().__init__(problem=problem, cause=cause, solution="Re-run the failing cell with the all-pairs strategy and compare")
