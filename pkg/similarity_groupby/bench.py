"""
Benchmark harness for the grouping engines.

A BenchSpec describes a data generator and a matrix of (mode, policy, metric, strategy, n, eps)
cells. Every cell is run once to warm up and then ``repetitions`` times; the median wall time
is reported. Each measured run is checked on a sample of its groups before its row is kept.

Typical use::

    spec = BenchSpec.from_toml("bench.toml")
    rows = run_matrix(spec)
    write_rows_csv(rows, "out/bench.csv")
    print(report(rows, "out"))
"""

import math
import time
import tomllib
from collections import defaultdict
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from similarity_groupby.exceptions import BenchValidationError, InvalidConfigurationError
from similarity_groupby.geometry import Metric, Point, similar
from similarity_groupby.logger import get_logger
from similarity_groupby.model import GroupingMode, GroupingResult, OverlapPolicy, SgbAllConfig, SgbAnyConfig, Strategy
from similarity_groupby.relation import ingest_csv
from similarity_groupby.sgb_all import run_sgb_all
from similarity_groupby.sgb_any import run_sgb_any

logger = get_logger(__name__)

__all__ = [
    "Generator",
    "BenchSpec",
    "BenchRow",
    "BENCH_COLUMNS",
    "generate",
    "run_cell",
    "run_matrix",
    "write_rows_csv",
    "read_rows_csv",
    "speedup_table",
    "format_speedup_table",
    "report",
    "loglog_slope",
    "validate_sample",
]

BENCH_COLUMNS = ["mode", "policy", "metric", "strategy", "n", "eps", "ms", "groups", "eliminated"]
NO_POLICY = "-"
EXACT_MODE = "EXACT"
EXACT_STRATEGY = "hash"
EXACT_DECIMALS = 6
# Members of a large L2 group checked pairwise against the whole group.
MAX_PAIRWISE_ROWS = 2000


class Generator(str, Enum):
    UNIFORM = "UNIFORM"
    GAUSS_CLUSTERS = "GAUSS_CLUSTERS"
    CSV = "CSV"


class BenchSpec(BaseModel):
    """
    Benchmark matrix and data description.

    ``sizes`` turns the run into a size sweep; when empty only ``n`` is used.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    generator: Generator = Generator.UNIFORM
    n: int = Field(default=10_000, ge=1)
    sizes: list[int] = Field(default_factory=list)
    eps_list: list[float] = Field(default_factory=lambda: [0.01], min_length=1)
    modes: list[GroupingMode] = Field(default_factory=lambda: [GroupingMode.ANY], min_length=1)
    policies: list[OverlapPolicy] = Field(default_factory=lambda: [OverlapPolicy.JOIN_ANY], min_length=1)
    metrics: list[Metric] = Field(default_factory=lambda: [Metric.L2], min_length=1)
    strategies: list[Strategy] = Field(default_factory=lambda: [Strategy.ALL_PAIRS, Strategy.INDEXED], min_length=1)
    repetitions: int = Field(default=3, ge=1)
    seed: int = 0
    clusters: int = Field(default=20, ge=1)
    sigma: float = Field(default=0.01, gt=0)
    csv_path: Path | None = None
    csv_columns: tuple[str, str] = ("x", "y")
    csv_delimiter: str = ","
    parallel: bool = False
    workers: int | None = Field(default=None, ge=1)
    validate_fraction: float = Field(default=0.01, ge=0, le=1)
    include_exact_baseline: bool = False

    @field_validator("sizes")
    @classmethod
    def _positive_sizes(cls, value: list[int]) -> list[int]:
        if any(size < 1 for size in value):
            raise ValueError("every size must be at least 1")
        return value

    @field_validator("eps_list")
    @classmethod
    def _positive_eps(cls, value: list[float]) -> list[float]:
        if any(not math.isfinite(eps) or eps <= 0 for eps in value):
            raise ValueError("every eps must be a positive finite number")
        return value

    @model_validator(mode="after")
    def _csv_needs_path(self) -> "BenchSpec":
        if self.generator is Generator.CSV and self.csv_path is None:
            raise ValueError("the CSV generator needs csv_path")
        return self

    @property
    def point_counts(self) -> list[int]:
        return list(self.sizes) or [self.n]

    @classmethod
    def build(cls, **values) -> "BenchSpec":
        """
        Validate and construct a spec.

        Raises
        ------
            InvalidConfigurationError: Wrapping the pydantic validation error.

        """
        try:
            return cls(**values)
        except ValidationError as e:
            raise InvalidConfigurationError(original_exception=e, problem="Invalid benchmark spec") from e

    @classmethod
    def from_toml(cls, path: str | Path) -> "BenchSpec":
        """
        Load a spec from a TOML file; keys may sit at the top level or under ``[bench]``.

        Raises
        ------
            InvalidConfigurationError: If the file is unreadable, not TOML, or does not validate.

        """
        path = Path(path)
        try:
            with path.open("rb") as handle:
                data = tomllib.load(handle)
        except (OSError, tomllib.TOMLDecodeError) as e:
            raise InvalidConfigurationError(original_exception=e, problem=f"Cannot read benchmark spec {path}") from e
        values = data.get("bench", data)
        if values.get("csv_path") is not None and not Path(values["csv_path"]).is_absolute():
            values["csv_path"] = path.parent / values["csv_path"]
        return cls.build(**values)


@dataclass(frozen=True)
class BenchRow:
    mode: str
    policy: str
    metric: str
    strategy: str
    n: int
    eps: float
    ms: float
    groups: int
    eliminated: int


def generate(spec: BenchSpec, n: int | None = None) -> list[tuple[int, Point]]:
    """
    Produce the benchmark points, deterministic for a fixed seed.

    UNIFORM draws from the unit square. GAUSS_CLUSTERS draws ``clusters`` centers uniformly
    and spreads points around a random center with standard deviation ``sigma``. CSV reads the
    two configured columns and keeps the first ``n`` usable rows.

    Raises
    ------
        ValueError: If ``n`` is below 1.
        IngestError: If the CSV source cannot be read.

    """
    n = spec.n if n is None else n
    if n < 1:
        raise ValueError(f"point count must be at least 1, got {n}")
    rng = np.random.default_rng(spec.seed)
    if spec.generator is Generator.UNIFORM:
        coordinates = rng.random((n, 2))
    elif spec.generator is Generator.GAUSS_CLUSTERS:
        centers = rng.random((spec.clusters, 2))
        labels = rng.integers(spec.clusters, size=n)
        coordinates = centers[labels] + rng.normal(0.0, spec.sigma, size=(n, 2))
    else:
        relation = ingest_csv(spec.csv_path, grouping_columns=spec.csv_columns, delimiter=spec.csv_delimiter)
        columns = [relation.resolve_column(c) for c in spec.csv_columns]
        if None in columns:
            raise InvalidConfigurationError(problem=f"{spec.csv_path} has no columns {spec.csv_columns}", cause=f"Columns are {relation.columns}")
        frame = relation.frame[columns].head(n)
        return [(int(rid), Point(float(x), float(y))) for rid, x, y in frame.itertuples(index=True, name=None)]
    return [(i, Point(float(x), float(y))) for i, (x, y) in enumerate(coordinates)]


def _run_engine(points: Sequence[tuple[int, Point]], mode: GroupingMode, policy: OverlapPolicy | None, metric: Metric, strategy: Strategy, eps: float) -> GroupingResult:
    if mode is GroupingMode.ALL:
        return run_sgb_all(points, SgbAllConfig.build(metric=metric, eps=eps, policy=policy, strategy=strategy))
    return run_sgb_any(points, SgbAnyConfig.build(metric=metric, eps=eps, strategy=strategy))


@dataclass(frozen=True)
class _Cell:
    mode: GroupingMode
    policy: OverlapPolicy | None
    metric: Metric
    strategy: Strategy
    n: int
    eps: float


def run_cell(
    points: Sequence[tuple[int, Point]],
    mode: GroupingMode,
    policy: OverlapPolicy | None,
    metric: Metric,
    strategy: Strategy,
    eps: float,
    repetitions: int = 3,
    validate_fraction: float = 0.01,
    seed: int = 0,
) -> BenchRow:
    """
    Time one matrix cell: a discarded warm-up run, then the median of ``repetitions`` runs.

    Raises
    ------
        BenchValidationError: If the sampled groups of the result break the grouping semantics.

    """
    _run_engine(points, mode, policy, metric, strategy, eps)
    times: list[float] = []
    result: GroupingResult | None = None
    for _ in range(repetitions):
        started = time.perf_counter()
        result = _run_engine(points, mode, policy, metric, strategy, eps)
        times.append((time.perf_counter() - started) * 1000)
    if validate_fraction > 0:
        validate_sample(points, result, mode, metric, eps, validate_fraction, np.random.default_rng(seed))
    row = BenchRow(
        mode=mode.value,
        policy=policy.value if policy is not None else NO_POLICY,
        metric=metric.value,
        strategy=strategy.value,
        n=len(points),
        eps=eps,
        ms=float(np.median(times)),
        groups=result.group_count,
        eliminated=len(result.eliminated),
    )
    logger.info(f"{row.mode} {row.policy} {row.metric} {row.strategy} n={row.n} eps={row.eps}: {row.ms:.2f} ms, {row.groups} groups")
    return row


def _exact_row(points: Sequence[tuple[int, Point]], repetitions: int) -> BenchRow:
    frame = pd.DataFrame([(p.x, p.y) for _, p in points], columns=["x", "y"]).round(EXACT_DECIMALS)
    frame.groupby(["x", "y"]).size()
    times: list[float] = []
    groups = 0
    for _ in range(repetitions):
        started = time.perf_counter()
        groups = len(frame.groupby(["x", "y"]).size())
        times.append((time.perf_counter() - started) * 1000)
    return BenchRow(EXACT_MODE, NO_POLICY, NO_POLICY, EXACT_STRATEGY, len(points), 0.0, float(np.median(times)), groups, 0)


def _cells(spec: BenchSpec, n: int) -> list[_Cell]:
    cells: list[_Cell] = []
    for mode in spec.modes:
        policies: Iterable[OverlapPolicy | None] = spec.policies if mode is GroupingMode.ALL else [None]
        for policy in policies:
            for metric in spec.metrics:
                for strategy in spec.strategies:
                    if mode is GroupingMode.ANY and strategy is Strategy.BOUNDS_CHECKING:
                        continue
                    cells.extend(_Cell(mode, policy, metric, strategy, n, eps) for eps in spec.eps_list)
    return cells


def _run_cell_task(args: tuple[list[tuple[int, Point]], _Cell, int, float, int]) -> BenchRow:
    points, cell, repetitions, fraction, seed = args
    return run_cell(points, cell.mode, cell.policy, cell.metric, cell.strategy, cell.eps, repetitions, fraction, seed)


def run_matrix(spec: BenchSpec) -> list[BenchRow]:
    """
    Measure every cell of the matrix.

    Cells run sequentially unless ``spec.parallel`` is set, in which case each cell is a task
    on a process pool.

    Returns
    -------
        One BenchRow per cell, in matrix order (plus one EXACT row per size if requested).

    """
    tasks: list[tuple[list[tuple[int, Point]], _Cell, int, float, int]] = []
    rows: list[BenchRow] = []
    for n in spec.point_counts:
        points = generate(spec, n)
        if spec.include_exact_baseline:
            rows.append(_exact_row(points, spec.repetitions))
        tasks.extend((points, cell, spec.repetitions, spec.validate_fraction, spec.seed) for cell in _cells(spec, len(points)))
    logger.info(f"Running {len(tasks)} benchmark cells{' in parallel' if spec.parallel else ''}")
    if spec.parallel:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            rows.extend(pool.map(_run_cell_task, tasks))
    else:
        rows.extend(_run_cell_task(task) for task in tasks)
    return rows


def write_rows_csv(rows: Iterable[BenchRow], path: str | Path) -> Path:
    """Write rows with the fixed BENCH_COLUMNS header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame([asdict(row) for row in rows], columns=BENCH_COLUMNS).to_csv(path, index=False, lineterminator="\n")
    return path


def read_rows_csv(path: str | Path) -> list[BenchRow]:
    frame = pd.read_csv(path, dtype={"mode": str, "policy": str, "metric": str, "strategy": str}, keep_default_na=False)
    return [
        BenchRow(r.mode, r.policy, r.metric, r.strategy, int(r.n), float(r.eps), float(r.ms), int(r.groups), int(r.eliminated))
        for r in frame[BENCH_COLUMNS].itertuples(index=False)
    ]


def speedup_table(rows: Sequence[BenchRow]) -> pd.DataFrame:
    """
    Speedup of every strategy over the baseline of its cell.

    The baseline is the all-pairs row of the same (mode, policy, metric, n, eps) when present,
    otherwise the first row of that cell. Columns: mode, policy, metric, n, eps, strategy, ms,
    speedup.
    """
    records: list[dict] = []
    cells: dict[tuple, list[BenchRow]] = defaultdict(list)
    for row in rows:
        cells[(row.mode, row.policy, row.metric, row.n, row.eps)].append(row)
    for (mode, policy, metric, n, eps), members in cells.items():
        baseline = next((r for r in members if r.strategy == Strategy.ALL_PAIRS.value), members[0])
        for row in members:
            if row.ms > 0:
                speedup = baseline.ms / row.ms
            else:
                speedup = 1.0 if baseline.ms == 0 else math.inf
            records.append(
                {"mode": mode, "policy": policy, "metric": metric, "n": n, "eps": eps, "strategy": row.strategy, "ms": row.ms, "speedup": speedup}
            )
    return pd.DataFrame(records, columns=["mode", "policy", "metric", "n", "eps", "strategy", "ms", "speedup"])


def format_speedup_table(table: pd.DataFrame) -> str:
    if table.empty:
        return "no benchmark rows\n"
    return table.to_string(index=False, float_format=lambda v: f"{v:.3f}") + "\n"


def _dat_name(mode: str, policy: str, metric: str) -> str:
    policy = "none" if policy == NO_POLICY else policy
    metric = "none" if metric == NO_POLICY else metric
    return f"{mode}_{policy}_{metric}.dat"


def report(rows: Sequence[BenchRow], out_dir: str | Path) -> str:
    """
    Write ``speedup.txt`` and one gnuplot data file per (mode, policy, metric).

    Data files have a '#' header and whitespace separated columns ``n eps``, one ms column per
    strategy and one speedup column per strategy; missing cells are written as '?'.

    Returns
    -------
        The speedup table text.

    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = speedup_table(rows)
    text = format_speedup_table(table)
    (out_dir / "speedup.txt").write_text(text, encoding="utf-8")

    for (mode, policy, metric), part in table.groupby(["mode", "policy", "metric"], sort=False):
        strategies = list(dict.fromkeys(part["strategy"]))
        header = ["n", "eps"] + [f"{s}_ms" for s in strategies] + [f"{s}_speedup" for s in strategies]
        lines = ["# " + " ".join(header)]
        for (n, eps), point in part.groupby(["n", "eps"], sort=True):
            by_strategy = point.set_index("strategy")
            ms = [f"{by_strategy.at[s, 'ms']:.4f}" if s in by_strategy.index else "?" for s in strategies]
            speedups = [f"{by_strategy.at[s, 'speedup']:.4f}" if s in by_strategy.index else "?" for s in strategies]
            lines.append(" ".join([str(n), repr(float(eps))] + ms + speedups))
        path = out_dir / _dat_name(mode, policy, metric)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        logger.debug(f"Wrote {path}")
    logger.info(f"Wrote benchmark report to {out_dir}")
    return text


def loglog_slope(ns: Sequence[float], times: Sequence[float]) -> float:
    """
    Least-squares slope of log(time) against log(n).

    Raises
    ------
        ValueError: With fewer than two points or non-positive values.

    """
    x = np.asarray(ns, dtype="float64")
    y = np.asarray(times, dtype="float64")
    if x.size < 2 or x.size != y.size:
        raise ValueError("need at least two (n, time) pairs of equal length")
    if (x <= 0).any() or (y <= 0).any():
        raise ValueError("sizes and times must be positive")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def _grid(coordinates: np.ndarray, eps: float) -> dict[tuple[int, int], list[int]]:
    cells: dict[tuple[int, int], list[int]] = defaultdict(list)
    for index, (cx, cy) in enumerate(np.floor(coordinates / eps).astype(np.int64).tolist()):
        cells[(cx, cy)].append(index)
    return cells


def _neighbors(index: int, coordinates: np.ndarray, cells: dict[tuple[int, int], list[int]], metric: Metric, eps: float) -> list[int]:
    p = Point(*coordinates[index])
    cx, cy = (int(v) for v in np.floor(coordinates[index] / eps))
    found: list[int] = []
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for other in cells.get((cx + dx, cy + dy), ()):
                if other != index and similar(p, Point(*coordinates[other]), metric, eps):
                    found.append(other)
    return found


def _check_clique(group_id: int, members: np.ndarray, metric: Metric, eps: float, rng: np.random.Generator) -> None:
    extent = members.max(axis=0) - members.min(axis=0)
    if metric is Metric.LINF:
        if (extent > eps).any():
            raise BenchValidationError(f"Group {group_id} is not a clique", f"Its LINF extent {extent.tolist()} exceeds eps {eps}")
        return
    if math.hypot(*extent) <= eps:
        return
    rows = members if len(members) <= MAX_PAIRWISE_ROWS else members[rng.choice(len(members), MAX_PAIRWISE_ROWS, replace=False)]
    for p in rows:
        farthest = np.sqrt(((members - p) ** 2).sum(axis=1)).max()
        if farthest > eps:
            raise BenchValidationError(f"Group {group_id} is not a clique", f"Members {farthest:.6g} apart exceed eps {eps}")


def validate_sample(
    points: Sequence[tuple[int, Point]],
    result: GroupingResult,
    mode: GroupingMode,
    metric: Metric,
    eps: float,
    fraction: float = 0.01,
    rng: np.random.Generator | None = None,
) -> int:
    """
    Check a random sample of groups against the grouping semantics.

    ALL groups must be cliques. ANY groups must be connected and have no point outside the
    group within eps of a member.

    Returns
    -------
        Number of groups checked.

    Raises
    ------
        BenchValidationError: On the first violating group.

    """
    if not result.groups:
        return 0
    rng = rng or np.random.default_rng()
    count = min(len(result.groups), max(1, math.ceil(fraction * len(result.groups))))
    sample = [result.groups[i] for i in sorted(rng.choice(len(result.groups), count, replace=False).tolist())]
    position = {record_id: index for index, (record_id, _) in enumerate(points)}
    coordinates = np.array([(p.x, p.y) for _, p in points], dtype="float64")

    if mode is GroupingMode.ALL:
        for group_id, members in sample:
            _check_clique(group_id, coordinates[[position[rid] for rid in members]], metric, eps, rng)
        return count

    cells = _grid(coordinates, eps)
    for group_id, members in sample:
        inside = {position[rid] for rid in members}
        start = next(iter(inside))
        seen = {start}
        frontier = [start]
        while frontier:
            current = frontier.pop()
            for other in _neighbors(current, coordinates, cells, metric, eps):
                if other not in inside:
                    raise BenchValidationError(
                        f"Group {group_id} is not a full component",
                        f"Record {points[other][0]} is within eps of member {points[current][0]} but outside the group",
                    )
                if other not in seen:
                    seen.add(other)
                    frontier.append(other)
        if seen != inside:
            raise BenchValidationError(f"Group {group_id} is not connected", f"{len(inside) - len(seen)} members are unreachable within eps steps")
    return count
