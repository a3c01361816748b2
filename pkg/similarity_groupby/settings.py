"""
Environment driven defaults.

Values come from ``SGB_*`` environment variables or a ``.env`` file in the working directory,
for example::

    SGB_LOG_LEVEL=DEBUG
    SGB_STRATEGY=bounds
    SGB_RTREE_MAX_ENTRIES=32
"""

from enum import Enum
from functools import lru_cache

from pydantic import Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from similarity_groupby.exceptions import InvalidConfigurationError
from similarity_groupby.model import DEFAULT_MAX_RECURSION_DEPTH, Strategy
from similarity_groupby.spatial_index import DEFAULT_MAX_ENTRIES, DEFAULT_MIN_ENTRIES

__all__ = ["OutputFormat", "SgbSettings", "get_settings", "reset_settings_cache"]


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class SgbSettings(BaseSettings):
    """Package defaults; every field can be overridden with ``SGB_<FIELD>``."""

    model_config = SettingsConfigDict(env_prefix="SGB_", env_file=".env", env_file_encoding="utf-8", extra="ignore")

    log_level: str = "INFO"
    log_json: bool = False
    strategy: Strategy = Strategy.INDEXED
    output_format: OutputFormat = OutputFormat.CSV
    max_recursion_depth: int = Field(default=DEFAULT_MAX_RECURSION_DEPTH, ge=1)
    rtree_max_entries: int = Field(default=DEFAULT_MAX_ENTRIES, ge=4)
    rtree_min_entries: int = Field(default=DEFAULT_MIN_ENTRIES, ge=2)
    bench_out_dir: str = "."
    bench_repetitions: int = Field(default=3, ge=1)

    @model_validator(mode="after")
    def _check_fanout(self) -> "SgbSettings":
        if self.rtree_min_entries > self.rtree_max_entries // 2:
            raise ValueError(f"rtree_min_entries ({self.rtree_min_entries}) must not exceed half of rtree_max_entries ({self.rtree_max_entries})")
        return self


@lru_cache(maxsize=1)
def get_settings() -> SgbSettings:
    """
    Load settings once per process.

    Raises
    ------
        InvalidConfigurationError: If an environment value does not validate.

    """
    try:
        return SgbSettings()
    except ValidationError as e:
        raise InvalidConfigurationError(
            original_exception=e,
            problem="Invalid SGB_* environment settings",
            solution="Fix or unset the offending SGB_* variable (see the .env file too)",
        ) from e


def reset_settings_cache() -> None:
    """Forget the cached settings so the next get_settings() re-reads the environment."""
    get_settings.cache_clear()
