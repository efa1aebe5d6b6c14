"""
Centralized configuration management for the spectral-transition laboratory.

Provides environment-specific configuration with validation, type safety,
and defaults for simulation, scattering and fitting runs using Pydantic.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Literal

try:
    from pydantic import Field, field_validator, model_validator
    from pydantic_settings import BaseSettings
except ImportError:
    # Fallback for older pydantic versions
    from pydantic import (
        BaseSettings,
        Field,
        root_validator as model_validator,
        validator as field_validator,
    )
from functools import lru_cache


class LoggingConfig(BaseSettings):
    """
    Logging configuration settings.

    Example:
        >>> log_config = LoggingConfig(level="DEBUG", file_path="./logs/speclab.log")
        >>> print(log_config.get_file_handler_config())
    """

    level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = Field(
        "INFO", description="Minimum logging level"
    )
    file_path: str | None = Field(None, description="Optional log file path")
    max_bytes: int = Field(10 * 1024 * 1024, ge=1024, description="Max log file size in bytes")
    backup_count: int = Field(5, ge=1, description="Number of backup log files")
    structured: bool = Field(False, description="Use structured JSON logging")
    console_enabled: bool = Field(True, description="Enable console output (stderr)")

    model_config = {"env_prefix": "LOG_", "case_sensitive": False}

    @field_validator("file_path")
    def validate_log_path(cls, v):
        """Ensure log directory exists."""
        if v:
            Path(v).parent.mkdir(parents=True, exist_ok=True)
        return v

    def get_file_handler_config(self) -> dict[str, Any] | None:
        """Get file handler configuration if file logging is enabled."""
        if not self.file_path:
            return None

        return {
            "class": "logging.handlers.RotatingFileHandler",
            "filename": self.file_path,
            "maxBytes": self.max_bytes,
            "backupCount": self.backup_count,
            "encoding": "utf-8",
        }


class SimulationConfig(BaseSettings):
    """
    Monte-Carlo ensemble defaults.

    `SIM_THREADS` overrides the worker count of every command.

    Example:
        >>> sim = SimulationConfig(threads=4)
        >>> sim.resolved_threads()
        4
    """

    threads: int = Field(1, ge=-1, description="Worker count (-1 uses every core)")
    default_dim: int = Field(400, ge=2, description="Default matrix dimension N")
    default_seed: int = Field(20240601, ge=0, description="Default master seed")
    default_realizations: int = Field(200, ge=1, description="Default realization count")
    edge_trim: float = Field(
        0.2, ge=0.0, lt=0.5, description="Fraction of levels dropped at each spectral edge"
    )
    window_step: float = Field(
        0.25, gt=0.0, le=1.0, description="Origin step of sliding number-variance windows"
    )
    show_progress: bool = Field(False, description="Show progress bars for long loops")

    model_config = {"env_prefix": "SIM_", "case_sensitive": False}

    @field_validator("threads")
    def validate_threads(cls, v):
        """Zero workers is meaningless."""
        if v == 0:
            raise ValueError("threads must be positive or -1")
        return v

    def resolved_threads(self) -> int:
        """Concrete worker count with -1 expanded to the number of CPUs."""
        if self.threads == -1:
            return os.cpu_count() or 1
        return self.threads


class ScatteringSettings(BaseSettings):
    """
    Scattering-engine defaults.

    Example:
        >>> scat = ScatteringSettings()
        >>> scat.fictitious_channels
        30
    """

    fictitious_channels: int = Field(30, ge=1, description="Number of absorption channels")
    freq_points: int = Field(1024, ge=16, description="Frequency points per realization")
    freq_span: float = Field(100.0, gt=0.0, description="Frequency span in mean spacings")
    calibration_realizations: int = Field(
        40, ge=1, description="Realizations averaged during coupling calibration"
    )
    calibration_tolerance: float = Field(
        0.02, gt=0.0, le=0.1, description="Accepted |T_target - T_measured|"
    )
    window_ghz: float = Field(1.0, gt=0.0, description="Analysis window for measured data")

    model_config = {"env_prefix": "SCAT_", "case_sensitive": False}


class InferenceConfig(BaseSettings):
    """
    Parameter-fitting defaults.

    Example:
        >>> fit = InferenceConfig()
        >>> fit.lambda_interval()
        (0.0, 3.0)
    """

    l_max: float = Field(5.0, gt=0.0, description="Upper end of the number-variance fit range")
    l_step: float = Field(0.1, gt=0.0, description="Spacing of the number-variance fit grid")
    lambda_min: float = Field(0.0, ge=0.0, description="Lower end of the lambda search")
    lambda_max: float = Field(3.0, gt=0.0, description="Upper end of the lambda search")
    tolerance: float = Field(1e-3, gt=0.0, description="Golden-section tolerance")
    scan_points: int = Field(31, ge=5, description="Coarse scan points used for bracketing")
    curvature_threshold: float = Field(
        1e-4, gt=0.0, description="Objective curvature below which a fit is unidentifiable"
    )
    xi_step: float = Field(0.02, gt=0.0, description="Step of the xi lookup table")
    xi_max: float = Field(1.0, gt=0.0, description="Upper edge of the xi lookup table")
    xi_realizations: int = Field(200, ge=1, description="Realizations per xi table cell")
    tau_min: float = Field(0.25, ge=0.0, description="Lower edge of the tau_abs grid")
    tau_max: float = Field(6.0, gt=0.0, description="Upper edge of the tau_abs grid")
    tau_step: float = Field(0.25, gt=0.0, description="Step of the tau_abs grid")
    tau_realizations: int = Field(100, ge=1, description="Realizations per tau_abs grid point")

    model_config = {"env_prefix": "FIT_", "case_sensitive": False}

    @model_validator(mode="after")
    def validate_intervals(self):
        """Search intervals must be non-empty."""
        if self.lambda_max <= self.lambda_min:
            raise ValueError("lambda_max must exceed lambda_min")
        if self.tau_max <= self.tau_min:
            raise ValueError("tau_max must exceed tau_min")
        return self

    def lambda_interval(self) -> tuple[float, float]:
        return (self.lambda_min, self.lambda_max)


class ApplicationConfig(BaseSettings):
    """
    Main application configuration.

    Example:
        >>> config = get_settings()
        >>> print(config.app.environment)
    """

    title: str = Field("Spectral Transition Lab", description="Application display title")
    environment: Literal["development", "testing", "production"] = Field(
        "development", description="Application environment"
    )
    debug: bool = Field(False, description="Enable debug mode")
    version: str = Field("0.1.0", description="Application version")
    output_dir: str = Field("./runs", description="Default output directory")

    model_config = {"env_prefix": "APP_", "case_sensitive": False}

    @model_validator(mode="after")
    def debug_implies_development(self):
        """Ensure debug mode is only enabled outside production."""
        if self.debug and self.environment == "production":
            raise ValueError("Debug mode cannot be enabled in production")
        return self


class Settings:
    """
    Complete application settings container.

    Provides structured access to all configuration sections
    with lazy loading and caching.

    Example:
        >>> settings = get_settings()
        >>> print(settings.simulation.default_dim)
        >>> print(settings.inference.l_max)
    """

    def __init__(self):
        self._app: ApplicationConfig | None = None
        self._logging: LoggingConfig | None = None
        self._simulation: SimulationConfig | None = None
        self._scattering: ScatteringSettings | None = None
        self._inference: InferenceConfig | None = None

    @property
    def app(self) -> ApplicationConfig:
        """Get application configuration."""
        if self._app is None:
            self._app = ApplicationConfig()
        return self._app

    @property
    def logging(self) -> LoggingConfig:
        """Get logging configuration."""
        if self._logging is None:
            if "LOG_LEVEL" in os.environ:
                self._logging = LoggingConfig()
            else:
                level = "DEBUG" if self.app.debug else "INFO"
                if self.app.environment == "production":
                    level = "WARNING"
                self._logging = LoggingConfig(level=level)
        return self._logging

    @property
    def simulation(self) -> SimulationConfig:
        """Get Monte-Carlo simulation configuration."""
        if self._simulation is None:
            self._simulation = SimulationConfig()
        return self._simulation

    @property
    def scattering(self) -> ScatteringSettings:
        """Get scattering configuration."""
        if self._scattering is None:
            self._scattering = ScatteringSettings()
        return self._scattering

    @property
    def inference(self) -> InferenceConfig:
        """Get fitting configuration."""
        if self._inference is None:
            self._inference = InferenceConfig()
        return self._inference

    def is_development(self) -> bool:
        return self.app.environment == "development"

    def is_production(self) -> bool:
        return self.app.environment == "production"

    def is_testing(self) -> bool:
        return self.app.environment == "testing"

    def snapshot(self) -> dict[str, Any]:
        """Full configuration as plain data, recorded in run manifests."""
        return {
            "app": self.app.model_dump(),
            "logging": self.logging.model_dump(),
            "simulation": self.simulation.model_dump(),
            "scattering": self.scattering.model_dump(),
            "inference": self.inference.model_dump(),
        }


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """
    Get application settings instance (cached).

    Returns:
        Settings instance with all configuration loaded

    Example:
        >>> settings = get_settings()
        >>> threads = settings.simulation.resolved_threads()
    """
    return Settings()


def load_settings_from_file(file_path: str) -> Settings:
    """
    Load settings from a JSON configuration file.

    Each top-level key names a section prefix and maps to a dict of values,
    e.g. ``{"sim": {"threads": 4}, "fit": {"l_max": 4.0}}``.

    Raises:
        FileNotFoundError: If configuration file doesn't exist
        ValueError: If file format is unsupported
    """
    import json

    config_path = Path(file_path)
    if not config_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {file_path}")

    if config_path.suffix.lower() == ".json":
        with open(config_path, encoding="utf-8") as f:
            config_data = json.load(f)
    else:
        raise ValueError(f"Unsupported configuration file format: {config_path.suffix}")

    for section, values in config_data.items():
        if isinstance(values, dict):
            for key, value in values.items():
                os.environ[f"{section.upper()}_{key.upper()}"] = str(value)

    get_settings.cache_clear()
    return get_settings()


def override_settings(**kwargs: Any) -> Settings:
    """
    Override specific settings for testing or development.

    Keys are environment variable names without case, e.g.
    ``override_settings(sim_threads=2, fit_l_max=4.0)``.
    """
    for key, value in kwargs.items():
        os.environ[key.upper()] = str(value)

    get_settings.cache_clear()
    return get_settings()


def reset_settings() -> None:
    """Reset settings cache to reload from environment."""
    get_settings.cache_clear()
