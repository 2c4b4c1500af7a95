"""
Configuration management utilities.
"""

import yaml
from pathlib import Path
from typing import Dict, Any
import logging

logger = logging.getLogger(__name__)


def load_config(config_path: str = "config/config.yaml") -> Dict[str, Any]:
    """
    Load configuration from YAML file.

    Sections missing from the file are filled from the defaults.

    Args:
        config_path: Path to configuration file

    Returns:
        Configuration dictionary
    """
    try:
        config_file = Path(config_path)

        if not config_file.exists():
            logger.warning(f"Config file not found: {config_path}, using defaults")
            return get_default_config()

        with open(config_file, 'r', encoding='utf-8') as f:
            config = yaml.safe_load(f) or {}

        logger.info(f"Loaded configuration from {config_path}")
        return merge_config(get_default_config(), config)

    except Exception as e:
        logger.error(f"Error loading config: {e}")
        return get_default_config()


def merge_config(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Merge two section dictionaries, values from override winning."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = value
    return merged


def get_default_config() -> Dict[str, Any]:
    """Get default configuration."""
    return {
        "sampling": {
            "samples": 100,
            "probe_samples": 50,
            "seed": 20240611,
            "numerator_bound": 9,
            "denominator_bound": 5,
            "max_attempts": 2000
        },
        "equality": {
            "probabilistic_points": 64
        },
        "scenarios": {
            "directory": "scenarios"
        },
        "integrator": {
            "grid": [512, 2048],
            "final_time": 1.0
        },
        "pipeline": {
            "jobs": 1
        },
        "logging": {
            "level": "INFO",
            "file": None
        }
    }
