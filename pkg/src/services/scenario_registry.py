"""Registry of the shipped worked examples."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from repositories.scenario_repository import ScenarioRepository
from services.scenario_builder import Scenario, build_scenario
from services.settings import get_settings

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parents[2]

# Registry order; every id has a file scenarios/<id>.yaml
REGISTRY_IDS = (
    "canonical_kcontact",
    "canonical_ksymplectic",
    "damped_wave",
    "coupled_strings",
    "product_contact",
    "r10_two_contact",
    "sl2_counterexample",
    "gl2_example",
    "h2r_symplectised",
    "symplectisation_nonexample",
)


def scenario_directory(config: Optional[Dict[str, Any]] = None) -> Path:
    """SCENARIO_DIR, else scenarios.directory, resolved against the cwd and then the project root."""
    configured = get_settings().SCENARIO_DIR or (config or {}).get("scenarios", {}).get("directory", "scenarios")
    path = Path(configured)
    if path.is_absolute() or path.is_dir():
        return path
    return PROJECT_ROOT / path


def get_repository(config: Optional[Dict[str, Any]] = None) -> ScenarioRepository:
    return ScenarioRepository(scenario_directory(config))


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Load, validate and build a scenario file."""
    document = ScenarioRepository(Path(path).parent).load_file(path)
    return build_scenario(document)


def get_scenario(scenario_id: str, config: Optional[Dict[str, Any]] = None) -> Scenario:
    """Build a registry scenario by id."""
    return build_scenario(get_repository(config).load(scenario_id))


def registry(config: Optional[Dict[str, Any]] = None) -> List[Scenario]:
    """All registry scenarios in registry order, followed by any extra files in the directory."""
    repository = get_repository(config)
    available = repository.list_ids()
    ids = [i for i in REGISTRY_IDS if i in available] + [i for i in available if i not in REGISTRY_IDS]
    missing = [i for i in REGISTRY_IDS if i not in available]
    if missing:
        logger.warning(f"Registry scenarios without files in {repository.directory}: {missing}")
    return [build_scenario(repository.load(i)) for i in ids]


def describe(scenario: Scenario) -> Dict[str, Any]:
    """Listing entry for the CLI."""
    doc = scenario.document
    return {
        "id": doc.id,
        "title": doc.title,
        "source": doc.source,
        "structure": doc.structure.type,
        "chart": list(scenario.chart.coords),
        "sections": [
            name
            for name in ("action", "mu", "level_set", "quotient", "probe", "dynamics", "simulate")
            if getattr(doc, name) is not None
        ],
        "expected": {stage: e.source for stage, e in doc.expected.items()},
    }
