"""
CSV ingestion into a typed, pandas-backed relation.

Rows keep a stable id: their 0-based position among the data rows of the file. pandas parses
the file and infers column dtypes, which map to INTEGER, REAL or TEXT. Rows whose grouping
columns hold non-finite values are dropped at ingest and counted.
"""

import csv
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from similarity_groupby.exceptions import IngestError
from similarity_groupby.logger import get_logger

logger = get_logger(__name__)

__all__ = ["ColumnType", "Relation", "ingest_csv"]


class ColumnType(str, Enum):
    INTEGER = "integer"
    REAL = "real"
    TEXT = "text"

    @property
    def is_numeric(self) -> bool:
        return self is not ColumnType.TEXT


@dataclass
class Relation:
    """
    An ingested table.

    Attributes
    ----------
        name: Relation name used in FROM clauses.
        schema: Column name to type, in file order.
        frame: Row store; the index holds the stable row ids.
        rejected_rows: Rows dropped at ingest for non-finite grouping values.
        source: File the relation was read from, if any.

    """

    name: str
    schema: dict[str, ColumnType]
    frame: pd.DataFrame
    rejected_rows: int = 0
    source: Path | None = None

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def columns(self) -> list[str]:
        return list(self.schema)

    def resolve_column(self, name: str) -> str | None:
        """Actual column name matching ``name`` case-insensitively, or None."""
        if name in self.schema:
            return name
        lowered = name.lower()
        for column in self.schema:
            if column.lower() == lowered:
                return column
        return None

    def column_type(self, name: str) -> ColumnType | None:
        column = self.resolve_column(name)
        return self.schema[column] if column is not None else None

    def numeric_columns(self) -> list[str]:
        return [column for column, kind in self.schema.items() if kind.is_numeric]

    @classmethod
    def from_frame(cls, name: str, frame: pd.DataFrame) -> "Relation":
        """Wrap an existing DataFrame, deriving the schema from its dtypes."""
        schema: dict[str, ColumnType] = {}
        for column in frame.columns:
            dtype = frame[column].dtype
            if pd.api.types.is_integer_dtype(dtype):
                schema[str(column)] = ColumnType.INTEGER
            elif pd.api.types.is_float_dtype(dtype):
                schema[str(column)] = ColumnType.REAL
            else:
                schema[str(column)] = ColumnType.TEXT
        return cls(name=name, schema=schema, frame=frame)


def _check_layout(path: Path, delimiter: str, column_names: Sequence[str] | None) -> list[str]:
    """
    Read the header (or take ``column_names``) and check that every non-blank row has as many fields.

    pandas pads short rows with missing values, so field counts are checked here, with line numbers.
    """
    if len(delimiter) != 1:
        raise IngestError(str(path), f"delimiter must be a single character, got {delimiter!r}")
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as e:
        raise IngestError(str(path), "file cannot be opened", original_exception=e) from e
    with handle:
        reader = csv.reader(handle, delimiter=delimiter)
        header: list[str] | None = [str(c) for c in column_names] if column_names is not None else None
        try:
            for row in reader:
                if not row:
                    continue
                if header is None:
                    header = [cell.strip() for cell in row]
                elif len(row) != len(header):
                    raise IngestError(str(path), f"row has {len(row)} fields, expected {len(header)}", line=reader.line_num)
        except (csv.Error, UnicodeDecodeError) as e:
            raise IngestError(str(path), "file is not valid delimited text", line=reader.line_num, original_exception=e) from e
    if header is None:
        raise IngestError(str(path), "file is empty")
    if len(set(header)) != len(header) or any(not name for name in header):
        raise IngestError(str(path), f"header names must be unique and non-empty, got {header}")
    return header


def _read_frame(path: Path, delimiter: str, header: list[str], has_header_row: bool) -> pd.DataFrame:
    try:
        frame = pd.read_csv(
            path,
            sep=delimiter,
            header=0 if has_header_row else None,
            names=header,
            skip_blank_lines=True,
            keep_default_na=True,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        frame = pd.DataFrame(columns=header)
    except (pd.errors.ParserError, ValueError) as e:
        raise IngestError(str(path), "file is not valid delimited text", original_exception=e) from e
    if frame.empty:
        # No rows: numeric so that grouping on a header-only file yields an empty result.
        frame = frame.astype("float64")
    frame.index = pd.RangeIndex(len(frame), name="row_id")
    return frame


def ingest_csv(
    path: str | Path,
    relation_name: str | None = None,
    grouping_columns: Sequence[str] | None = None,
    delimiter: str = ",",
    column_names: Sequence[str] | None = None,
) -> Relation:
    """
    Load a delimited text file as a relation.

    Args:
    ----
        path: File to read.
        relation_name: Name of the relation; defaults to the file stem.
        grouping_columns: Columns that will be grouped on. Rows where any of them is not a
            finite number are dropped and counted. Unknown names are ignored here.
        delimiter: Field separator, e.g. "\\t" for tab-separated check-in dumps.
        column_names: Names to use when the file has no header row.

    Returns:
    -------
        The typed Relation.

    Raises:
    ------
        IngestError: If the file is missing, empty or ragged, or its header is unusable.

    """
    path = Path(path)
    header = _check_layout(path, delimiter, column_names)
    frame = _read_frame(path, delimiter, header, has_header_row=column_names is None)
    relation = Relation.from_frame(relation_name or path.stem, frame)
    relation.source = path

    if grouping_columns:
        # Unknown or text columns are left for query validation to report.
        resolved = [c for c in (relation.resolve_column(name) for name in grouping_columns) if c and relation.schema[c].is_numeric]
        keep = np.isfinite(frame[resolved].to_numpy(dtype="float64")).all(axis=1)
        rejected = int((~keep).sum())
        if rejected:
            logger.warning(f"{path}: skipped {rejected} rows with non-finite values in {resolved}")
            relation.frame = frame.loc[keep]
        relation.rejected_rows = rejected

    logger.info(f"Ingested {len(relation.frame)} rows x {len(header)} columns from {path} as {relation.name!r}")
    return relation
