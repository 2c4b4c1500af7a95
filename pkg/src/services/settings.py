"""
Environment settings for geored.

Uses:
- Pydantic BaseSettings for .env + environment overrides
- config/config.yaml for everything that is not an override
"""

from __future__ import annotations
from functools import lru_cache
from typing import Optional
from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """geored configuration overrides"""

    # Basic app config
    APP_NAME: str = "geored"
    LOG_LEVEL: Optional[str] = Field(
        default=None,
        description="Overrides logging.level from the config file.",
    )

    LOG_FILE: Optional[str] = Field(
        default=None,
        description="Log file path; default is data/logs/geored-YYYYMMDD.log.",
    )

    CONFIG_PATH: str = Field(
        default="config/config.yaml",
        description="YAML configuration file.",
    )

    # ---- Scenarios ----
    SCENARIO_DIR: Optional[str] = Field(
        default=None,
        description="Directory holding the scenario files; overrides scenarios.directory.",
    )

    # ---- Sampling ----
    SAMPLES: Optional[int] = Field(
        default=None,
        ge=1,
        description="Sample points per pointwise check; overrides sampling.samples.",
    )

    SEED: Optional[int] = Field(
        default=None,
        description="Seed of every sample set; overrides sampling.seed.",
    )

    class Config:
        env_file = ".env"
        case_sensitive = False


@lru_cache
def get_settings() -> Settings:
    """Return a cached Settings instance."""
    return Settings()
