"""Repository for scenario files stored as YAML documents."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Optional, Union

import yaml
from pydantic import ValidationError

from schemas.scenario import ScenarioDocument
from utils.errors import InputError, ParseError, SemanticError

logger = logging.getLogger(__name__)

SCENARIO_SUFFIXES = (".yaml", ".yml")


def _format_validation(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item.get("loc", ())) or "document"
        parts.append(f"{location}: {item.get('msg')}")
    return "; ".join(parts)


def parse_scenario(text: str, source: Optional[str] = None) -> ScenarioDocument:
    """
    Parse and validate scenario text.

    Raises:
        ParseError: the text is not valid YAML (with line and column)
        SemanticError: the document violates the scenario schema
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        line = mark.line + 1 if mark is not None else None
        column = mark.column + 1 if mark is not None else None
        raise ParseError(e.problem or str(e), line=line, column=column, source=source) from None
    except yaml.YAMLError as e:
        raise ParseError(str(e), source=source) from None
    if not isinstance(raw, dict):
        raise ParseError("a scenario file must hold a mapping at the top level", line=1, column=1, source=source)
    try:
        return ScenarioDocument.model_validate(raw)
    except ValidationError as e:
        prefix = f"{source}: " if source else ""
        raise SemanticError(f"{prefix}invalid scenario: {_format_validation(e)}") from None


def dump_scenario(document: ScenarioDocument) -> str:
    """Serialize a document; parse_scenario(dump_scenario(d)) == d."""
    data = document.model_dump(mode="json", exclude_defaults=True)
    return yaml.safe_dump(data, sort_keys=False, allow_unicode=True)


class ScenarioRepository:
    """Reads and writes scenario files under a directory."""

    def __init__(self, directory: Union[str, Path] = "scenarios"):
        """Initialize the repository on a scenario directory."""
        self.directory = Path(directory)

    def path_for(self, scenario_id: str) -> Path:
        for suffix in SCENARIO_SUFFIXES:
            candidate = self.directory / f"{scenario_id}{suffix}"
            if candidate.exists():
                return candidate
        return self.directory / f"{scenario_id}.yaml"

    def list_ids(self) -> List[str]:
        if not self.directory.is_dir():
            logger.warning(f"Scenario directory not found: {self.directory}")
            return []
        return sorted(p.stem for p in self.directory.iterdir() if p.suffix in SCENARIO_SUFFIXES)

    def load_file(self, path: Union[str, Path]) -> ScenarioDocument:
        """Load one scenario file."""
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise InputError(f"cannot read scenario file {path}: {e}") from None
        document = parse_scenario(text, source=str(path))
        logger.debug(f"Loaded scenario {document.id} from {path}")
        return document

    def load(self, scenario_id: str) -> ScenarioDocument:
        """Load a scenario by id."""
        path = self.path_for(scenario_id)
        if not path.exists():
            raise InputError(f"unknown scenario '{scenario_id}' (no file in {self.directory})")
        document = self.load_file(path)
        if document.id != scenario_id:
            raise SemanticError(f"{path}: file declares id '{document.id}', expected '{scenario_id}'")
        return document

    def save(self, document: ScenarioDocument, path: Optional[Union[str, Path]] = None) -> Path:
        """Write a scenario document, by default to <directory>/<id>.yaml."""
        target = Path(path) if path is not None else self.directory / f"{document.id}.yaml"
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(dump_scenario(document), encoding="utf-8")
        logger.info(f"Saved scenario {document.id} to {target}")
        return target
