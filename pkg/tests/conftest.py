"""
Shared test configuration and fixtures.

Provides the five-point instance used throughout the grouping tests, small CSV inputs, a
handler that captures package log records, and isolation of the cached SGB_* settings.
"""

import logging
from pathlib import Path

import pytest

import project_root  # noqa: F401
from similarity_groupby.geometry import Point
from similarity_groupby.logger import PACKAGE_LOGGER_NAME
from similarity_groupby.settings import reset_settings_cache

pytest.register_assert_rewrite("oracles")

EXAMPLE_ONE_COORDINATES = [(1, 0.0, 0.0), (2, 1.0, 0.0), (3, 5.0, 0.0), (4, 6.0, 0.0), (5, 3.0, 0.0)]


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch: pytest.MonkeyPatch, tmp_path: Path):
    """Run every test without SGB_* variables or a stray .env file, and with a fresh settings cache."""
    for name in ("SGB_LOG_LEVEL", "LOG_LEVEL", "SGB_LOG_JSON", "SGB_STRATEGY", "SGB_OUTPUT_FORMAT", "SGB_MAX_RECURSION_DEPTH"):
        monkeypatch.delenv(name, raising=False)
    for name in ("SGB_RTREE_MAX_ENTRIES", "SGB_RTREE_MIN_ENTRIES", "SGB_BENCH_OUT_DIR", "SGB_BENCH_REPETITIONS"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)
    reset_settings_cache()
    yield
    reset_settings_cache()


@pytest.fixture
def example_one_points() -> list[tuple[int, Point]]:
    """
    Five collinear points: a1=(0,0), a2=(1,0), a3=(5,0), a4=(6,0), a5=(3,0), in that order.

    With LINF and eps=3, a5 is within eps of both {a1, a2} and {a3, a4}.
    """
    return [(rid, Point(x, y)) for rid, x, y in EXAMPLE_ONE_COORDINATES]


@pytest.fixture
def example_one_csv(tmp_path: Path) -> Path:
    """The five-point instance as a GPSPoints.csv file with hyphenated column names."""
    path = tmp_path / "GPSPoints.csv"
    lines = ["user-id,GPSCoor-lat,GPSCoor-long,name"]
    lines += [f"{rid},{x:g},{y:g},user{rid}" for rid, x, y in EXAMPLE_ONE_COORDINATES]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def package_log(caplog: pytest.LogCaptureFixture):
    """Capture records of the package logger (which does not propagate to the root logger)."""
    package_logger = logging.getLogger(PACKAGE_LOGGER_NAME)
    previous_level = package_logger.level
    package_logger.addHandler(caplog.handler)
    package_logger.setLevel(logging.DEBUG)
    caplog.set_level(logging.DEBUG)
    yield caplog
    package_logger.removeHandler(caplog.handler)
    package_logger.setLevel(previous_level)
