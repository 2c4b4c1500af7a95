"""Shared fixtures for the geored test suite."""

import sys
from pathlib import Path

import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from services.settings import get_settings  # noqa: E402
from utils.config import get_default_config  # noqa: E402

PROJECT_ROOT = Path(__file__).parent.parent
SCENARIO_DIR = PROJECT_ROOT / "scenarios"


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    """Each test sees the environment it sets up, not a cached Settings."""
    for name in ("LOG_LEVEL", "LOG_FILE", "CONFIG_PATH", "SCENARIO_DIR", "SAMPLES", "SEED"):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def config():
    """Default configuration pointing at the shipped scenarios."""
    cfg = get_default_config()
    cfg["scenarios"]["directory"] = str(SCENARIO_DIR)
    return cfg


@pytest.fixture
def fast_config(config):
    """Default configuration with small sample counts."""
    config["sampling"]["samples"] = 5
    config["sampling"]["probe_samples"] = 3
    return config
