"""Tests for scenario files, the repository and the registry."""

from pathlib import Path

import pytest

from components.reduction import verify_reduction
from components.structures import KContact, KSymplectic
from repositories.scenario_repository import ScenarioRepository, dump_scenario, parse_scenario
from services.scenario_builder import build_scenario, stated_momentum_matches
from services.scenario_registry import REGISTRY_IDS, describe, get_scenario, load_scenario, registry
from utils.errors import DegreeError, InputError, ParseError, SemanticError

SCENARIO_DIR = Path(__file__).parent.parent / "scenarios"


def _text(scenario_id):
    return (SCENARIO_DIR / f"{scenario_id}.yaml").read_text(encoding="utf-8")


def test_registry_order(config):
    scenarios = registry(config)
    assert [s.id for s in scenarios] == list(REGISTRY_IDS)


def test_registry_scenarios_carry_provenance(config):
    for scenario in registry(config):
        assert scenario.title
        for expectation in scenario.expected.values():
            assert expectation.source


def test_describe_lists_sections(config):
    entry = describe(get_scenario("coupled_strings", config))
    assert entry["structure"] == "kcontact"
    assert entry["chart"][:2] == ["q1", "q2"]
    assert {"action", "mu", "level_set", "quotient", "dynamics"} <= set(entry["sections"])


@pytest.mark.parametrize("scenario_id", REGISTRY_IDS)
def test_dump_then_parse_gives_the_same_document(scenario_id):
    document = parse_scenario(_text(scenario_id))
    assert parse_scenario(dump_scenario(document)) == document


def test_structures_are_built_with_their_kind(config):
    assert isinstance(get_scenario("canonical_kcontact", config).structure, KContact)
    assert isinstance(get_scenario("canonical_ksymplectic", config).structure, KSymplectic)


def test_stated_momentum_is_compared(config):
    assert stated_momentum_matches(get_scenario("product_contact", config)) is True


def test_yaml_errors_carry_line_and_column():
    with pytest.raises(ParseError) as info:
        parse_scenario("id: broken\ntitle: [unclosed\nchart: {}\n", source="broken.yaml")
    assert info.value.line is not None
    assert info.value.column is not None
    assert info.value.source == "broken.yaml"


def test_top_level_must_be_a_mapping():
    with pytest.raises(ParseError):
        parse_scenario("- just\n- a list\n")


def test_schema_violations_are_semantic_errors():
    text = _text("product_contact").replace("    xi4: {y3: \"1\"}\n", "")
    with pytest.raises(SemanticError, match="invalid scenario"):
        parse_scenario(text)


def test_mixed_degrees_fail_on_build():
    text = _text("product_contact").replace('"d(s2) - y2*d(y1) - y4*d(y3)"', '"d(s2)^d(y1)"')
    with pytest.raises(DegreeError, match="VForm degree mismatch"):
        build_scenario(parse_scenario(text))


def test_mutated_reduced_form_loads_but_fails_verification():
    text = _text("gl2_example").replace('"d(t) - x4*d(x3)"', '"d(t) + x4*d(x3)"')
    scenario = build_scenario(parse_scenario(text))
    points = scenario.level.sample(2, 3)
    report = verify_reduction(scenario.quotient, scenario.structure, scenario.action, points)
    assert report.verdict == "fail"
    assert report.symbolic["pi* eta_red^1 = i* eta^1"] is False


def test_unknown_scenario(config):
    with pytest.raises(InputError, match="unknown scenario"):
        get_scenario("no_such_scenario", config)


def test_file_id_must_match_its_name(tmp_path):
    (tmp_path / "renamed.yaml").write_text(_text("damped_wave"), encoding="utf-8")
    with pytest.raises(SemanticError, match="declares id 'damped_wave'"):
        ScenarioRepository(tmp_path).load("renamed")


def test_save_and_load_a_file(tmp_path):
    repository = ScenarioRepository(tmp_path)
    path = repository.save(parse_scenario(_text("damped_wave")))
    assert path.name == "damped_wave.yaml"
    assert repository.list_ids() == ["damped_wave"]
    assert load_scenario(path).id == "damped_wave"


def test_missing_directory_lists_nothing(tmp_path):
    assert ScenarioRepository(tmp_path / "missing").list_ids() == []
