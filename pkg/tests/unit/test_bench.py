"""Unit tests for the benchmark harness."""

import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import pytest
from oracles import make_points

from similarity_groupby.bench import (
    BENCH_COLUMNS,
    BenchRow,
    BenchSpec,
    Generator,
    generate,
    loglog_slope,
    read_rows_csv,
    report,
    run_cell,
    run_matrix,
    speedup_table,
    validate_sample,
    write_rows_csv,
)
from similarity_groupby.exceptions import BenchValidationError, InvalidConfigurationError
from similarity_groupby.geometry import Metric, Point
from similarity_groupby.model import GroupingMode, GroupingResult, OverlapPolicy, SgbAnyConfig, Strategy
from similarity_groupby.sgb_any import run_sgb_any


def row(strategy: str, ms: float, n: int = 100, eps: float = 0.1, mode: str = "ANY", policy: str = "-") -> BenchRow:
    return BenchRow(mode, policy, "L2", strategy, n, eps, ms, 10, 0)


class TestBenchSpec:
    def test_defaults(self) -> None:
        spec = BenchSpec()
        assert spec.generator is Generator.UNIFORM
        assert spec.point_counts == [10_000]
        assert spec.strategies == [Strategy.ALL_PAIRS, Strategy.INDEXED]

    @pytest.mark.parametrize(
        "values",
        [{"eps_list": [0.0]}, {"eps_list": []}, {"n": 0}, {"sizes": [10, 0]}, {"generator": "CSV"}, {"speed": 1}],
    )
    def test_invalid(self, values: dict) -> None:
        with pytest.raises(InvalidConfigurationError):
            BenchSpec.build(**values)

    def test_from_toml(self, tmp_path: Path) -> None:
        (tmp_path / "data.csv").write_text("x,y\n0,0\n", encoding="utf-8")
        path = tmp_path / "bench.toml"
        path.write_text(
            '[bench]\ngenerator = "CSV"\ncsv_path = "data.csv"\nsizes = [1000, 2000]\n'
            'modes = ["ALL", "ANY"]\npolicies = ["ELIMINATE"]\nmetrics = ["LINF"]\neps_list = [0.5]\n',
            encoding="utf-8",
        )
        spec = BenchSpec.from_toml(path)
        assert spec.csv_path == tmp_path / "data.csv"
        assert spec.point_counts == [1000, 2000]
        assert spec.modes == [GroupingMode.ALL, GroupingMode.ANY]
        assert spec.policies == [OverlapPolicy.ELIMINATE]

    def test_from_toml_errors(self, tmp_path: Path) -> None:
        with pytest.raises(InvalidConfigurationError):
            BenchSpec.from_toml(tmp_path / "missing.toml")
        bad = tmp_path / "bad.toml"
        bad.write_text("n = [", encoding="utf-8")
        with pytest.raises(InvalidConfigurationError):
            BenchSpec.from_toml(bad)


class TestGenerate:
    def test_uniform_is_deterministic(self) -> None:
        spec = BenchSpec(n=50, seed=3)
        first = generate(spec)
        assert first == generate(spec)
        assert [rid for rid, _ in first] == list(range(50))
        assert all(0 <= p.x < 1 and 0 <= p.y < 1 for _, p in first)

    def test_gauss_clusters(self) -> None:
        points = generate(BenchSpec(generator=Generator.GAUSS_CLUSTERS, clusters=3, sigma=0.001, seed=1), n=300)
        assert len(points) == 300
        # Three tight blobs: every blob is one connected component at a small threshold.
        assert run_sgb_any(points, SgbAnyConfig.build(metric=Metric.LINF, eps=0.02)).group_count <= 3

    def test_csv_source(self, tmp_path: Path) -> None:
        path = tmp_path / "pts.csv"
        path.write_text("lat,long\n0.5,0.25\nnan,1\n1.5,2\n3,4\n", encoding="utf-8")
        spec = BenchSpec(generator=Generator.CSV, csv_path=path, csv_columns=("lat", "long"))
        assert generate(spec, n=2) == [(0, Point(0.5, 0.25)), (2, Point(1.5, 2.0))]

    def test_csv_missing_columns(self, tmp_path: Path) -> None:
        path = tmp_path / "pts.csv"
        path.write_text("a,b\n1,2\n", encoding="utf-8")
        with pytest.raises(InvalidConfigurationError):
            generate(BenchSpec(generator=Generator.CSV, csv_path=path), n=1)

    def test_rejects_zero(self) -> None:
        with pytest.raises(ValueError):
            generate(BenchSpec(), n=0)


class TestRunCell:
    def test_row_fields(self) -> None:
        points = make_points(200, seed=2)
        result = run_cell(points, GroupingMode.ALL, OverlapPolicy.ELIMINATE, Metric.L2, Strategy.INDEXED, 0.05, repetitions=2, validate_fraction=1.0)
        assert (result.mode, result.policy, result.metric, result.strategy, result.n) == ("ALL", "ELIMINATE", "L2", "indexed", 200)
        assert result.ms >= 0
        assert result.groups > 0

    def test_any_has_no_policy(self) -> None:
        result = run_cell(make_points(100, seed=1), GroupingMode.ANY, None, Metric.LINF, Strategy.ALL_PAIRS, 0.05, repetitions=1)
        assert result.policy == "-"
        assert result.eliminated == 0

    def test_matrix_cells(self) -> None:
        spec = BenchSpec(
            n=80,
            modes=[GroupingMode.ALL, GroupingMode.ANY],
            policies=[OverlapPolicy.JOIN_ANY, OverlapPolicy.FORM_NEW_GROUP],
            metrics=[Metric.L2],
            strategies=list(Strategy),
            eps_list=[0.05, 0.1],
            repetitions=1,
            include_exact_baseline=True,
        )
        rows = run_matrix(spec)
        # EXACT + ALL: 2 policies x 3 strategies x 2 eps + ANY: 2 strategies x 2 eps.
        assert len(rows) == 1 + 12 + 4
        assert rows[0].mode == "EXACT"
        assert rows[0].groups == 80
        assert not any(r.mode == "ANY" and r.strategy == Strategy.BOUNDS_CHECKING.value for r in rows)

    def test_parallel_matrix(self, mocker) -> None:
        # Threads stand in for worker processes.
        mocker.patch("similarity_groupby.bench.ProcessPoolExecutor", ThreadPoolExecutor)
        rows = run_matrix(BenchSpec(n=50, parallel=True, workers=2, repetitions=1, eps_list=[0.1]))
        assert [r.strategy for r in rows] == ["all-pairs", "indexed"]


class TestValidateSample:
    points = [(1, Point(0, 0)), (2, Point(1, 0)), (3, Point(2, 0)), (4, Point(10, 0))]

    def test_valid_any_grouping(self) -> None:
        result = GroupingResult(groups=[(1, [1, 2, 3]), (2, [4])])
        assert validate_sample(self.points, result, GroupingMode.ANY, Metric.LINF, 1.0, fraction=1.0) == 2

    def test_any_group_missing_neighbor(self) -> None:
        result = GroupingResult(groups=[(1, [1, 2]), (2, [3]), (3, [4])])
        with pytest.raises(BenchValidationError, match="not a full component"):
            validate_sample(self.points, result, GroupingMode.ANY, Metric.LINF, 1.0, fraction=1.0)

    def test_any_group_not_connected(self) -> None:
        result = GroupingResult(groups=[(1, [1, 2, 3, 4])])
        with pytest.raises(BenchValidationError, match="not connected"):
            validate_sample(self.points, result, GroupingMode.ANY, Metric.LINF, 1.0, fraction=1.0)

    @pytest.mark.parametrize("metric", list(Metric))
    def test_all_group_not_a_clique(self, metric: Metric) -> None:
        result = GroupingResult(groups=[(1, [1, 2, 3]), (2, [4])])
        with pytest.raises(BenchValidationError, match="not a clique"):
            validate_sample(self.points, result, GroupingMode.ALL, metric, 1.5, fraction=1.0)

    def test_l2_diagonal_checked_pairwise(self) -> None:
        points = [(1, Point(0, 0)), (2, Point(0.7, 0.7)), (3, Point(0.7, 0))]
        ok = GroupingResult(groups=[(1, [1, 3]), (2, [2])])
        bad = GroupingResult(groups=[(1, [1, 2, 3])])
        assert validate_sample(points, ok, GroupingMode.ALL, Metric.L2, 0.9, fraction=1.0) == 2
        with pytest.raises(BenchValidationError):
            validate_sample(points, bad, GroupingMode.ALL, Metric.L2, 0.9, fraction=1.0)

    def test_empty(self) -> None:
        assert validate_sample([], GroupingResult(groups=[]), GroupingMode.ANY, Metric.L2, 1.0) == 0


class TestReporting:
    def test_csv_round_trip(self, tmp_path: Path) -> None:
        rows = [row("all-pairs", 10.0), row("indexed", 2.5), BenchRow("EXACT", "-", "-", "hash", 100, 0.0, 0.5, 100, 0)]
        path = write_rows_csv(rows, tmp_path / "out" / "bench.csv")
        assert path.read_text(encoding="utf-8").splitlines()[0] == ",".join(BENCH_COLUMNS)
        assert read_rows_csv(path) == rows

    def test_speedup_against_all_pairs(self) -> None:
        table = speedup_table([row("indexed", 2.0), row("all-pairs", 10.0), row("indexed", 5.0, n=200), row("all-pairs", 0.0, n=300)])
        speedups = {(r.n, r.strategy): r.speedup for r in table.itertuples()}
        assert speedups[(100, "indexed")] == 5.0
        assert speedups[(100, "all-pairs")] == 1.0
        # No all-pairs row for n=200: the first row is the baseline.
        assert speedups[(200, "indexed")] == 1.0
        assert speedups[(300, "all-pairs")] == 1.0

    def test_zero_time_speedup_is_infinite(self) -> None:
        table = speedup_table([row("all-pairs", 4.0), row("indexed", 0.0)])
        assert math.isinf(table.loc[table["strategy"] == "indexed", "speedup"].item())

    def test_report_files(self, tmp_path: Path) -> None:
        rows = [
            row("all-pairs", 10.0, n=100),
            row("indexed", 2.0, n=100),
            row("all-pairs", 40.0, n=200),
            row("all-pairs", 8.0, mode="ALL", policy="JOIN-ANY"),
        ]
        text = report(rows, tmp_path)
        assert (tmp_path / "speedup.txt").read_text(encoding="utf-8") == text
        lines = (tmp_path / "ANY_none_L2.dat").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "# n eps all-pairs_ms indexed_ms all-pairs_speedup indexed_speedup"
        assert lines[1] == "100 0.1 10.0000 2.0000 1.0000 5.0000"
        assert lines[2] == "200 0.1 40.0000 ? 1.0000 ?"
        assert (tmp_path / "ALL_JOIN-ANY_L2.dat").exists()

    def test_empty_report(self, tmp_path: Path) -> None:
        assert report([], tmp_path) == "no benchmark rows\n"


class TestLoglogSlope:
    def test_quadratic(self) -> None:
        ns = [1000, 2000, 4000, 8000]
        assert loglog_slope(ns, [n**2 / 1e6 for n in ns]) == pytest.approx(2.0)

    @pytest.mark.parametrize("ns,times", [([10], [1.0]), ([10, 20], [1.0]), ([10, 0], [1.0, 2.0]), ([10, 20], [1.0, -1.0])])
    def test_invalid(self, ns: list[float], times: list[float]) -> None:
        with pytest.raises(ValueError):
            loglog_slope(ns, times)
