"""
Process configuration using Pydantic Settings.

Manages environment variables that shape how DwellRec runs, independent of
any single experiment: worker threads, log level, where run outputs go, and
which experiment configuration file to fall back to.
"""

from functools import lru_cache
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Process settings loaded from environment variables.

    Attributes:
        app_name: Name of the application
        app_version: Current version string recorded in run manifests
        threads: Parallel evaluation workers (DWELLREC_THREADS); 1 keeps every
            report byte-identical across runs
        log_level: Logging level
        runs_dir: Default parent directory for command outputs
        config_path: Experiment configuration used when --config is absent
    """

    model_config = SettingsConfigDict(
        env_prefix="DWELLREC_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_name: str = "DwellRec"
    app_version: str = "0.1.0"

    # Execution
    threads: int = Field(default=1, ge=1)

    # Logging
    log_level: str = "INFO"

    # Paths
    runs_dir: str = "runs"
    config_path: Optional[str] = Field(default=None, validation_alias="DWELLREC_CONFIG")


@lru_cache
def get_settings() -> Settings:
    """
    Get cached process settings.

    Returns:
        Settings: Process settings singleton
    """
    return Settings()
