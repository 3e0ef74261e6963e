"""Configuration utilities for the PSQ toolkit.

Settings are loaded with :class:`pydantic_settings.BaseSettings` so every default can be
overridden through ``PSQ_``-prefixed environment variables or a local ``.env`` file. The
command-line flags take their defaults from :data:`CONFIG`, which means an environment
override applies to every pipeline stage without repeating flags.
"""

from __future__ import annotations

from pydantic import Field, ValidationInfo, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class PSQSettings(BaseSettings):
    """Runtime defaults for indexing, search and sweeps."""

    log_path: str = Field(default="logs/psq.log", description="Path to the audit log file")
    log_level: str = Field(default="INFO", description="Root logging level")
    alpha: float = Field(default=0.5, description="Jelinek-Mercer smoothing weight")
    lm_floor: float = Field(
        default=1e-7, description="Background probability returned for unseen tokens"
    )
    build_pmf_floor: float = Field(
        default=1e-6,
        description=(
            "Translation probabilities below this value are discarded once, when a table is "
            "loaded for pruning or indexing."
        ),
    )
    em_iterations: int = Field(default=5, description="IBM Model 1 EM iterations")
    em_workers: int = Field(default=1, description="Threads used for the EM E-step")
    search_depth: int = Field(default=1000, description="Documents returned per query")
    chunk_size: int = Field(default=1000, description="Documents translated per chunk")
    sweep_workers: int = Field(default=1, description="Concurrent index builds in a sweep")
    run_tag: str = Field(default="psq", description="Run tag written to TREC run files")

    @field_validator("alpha")
    @classmethod
    def validate_alpha(cls, value: float) -> float:
        """Smoothing must stay strictly inside (0, 1)."""

        if not 0.0 < value < 1.0:
            raise ValueError("alpha must lie strictly between 0 and 1")
        return value

    @field_validator("lm_floor", "build_pmf_floor")
    @classmethod
    def validate_floor(cls, value: float, info: ValidationInfo) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError(f"{info.field_name} must lie in (0, 1)")
        return value

    @field_validator("em_iterations", "em_workers", "search_depth", "chunk_size", "sweep_workers")
    @classmethod
    def validate_positive(cls, value: int, info: ValidationInfo) -> int:
        """Counts and sizes must be at least one."""

        if value < 1:
            raise ValueError(f"{info.field_name} must be at least 1")
        return value

    model_config = SettingsConfigDict(
        env_prefix="PSQ_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


CONFIG = PSQSettings()
