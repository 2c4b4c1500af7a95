"""Command-line contract: one JSON envelope on stdout and documented exit codes."""

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from main import COMMAND_STAGES, build_parser, main
from services.scenario_registry import REGISTRY_IDS

PROJECT_ROOT = Path(__file__).parent.parent


@pytest.fixture
def cli(monkeypatch, tmp_path, capsys):
    """Run main() in a scratch directory and return (exit code, envelope or text)."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("LOG_FILE", str(tmp_path / "logs" / "geored.log"))
    monkeypatch.setenv("LOG_LEVEL", "WARNING")

    def run(*argv, parse=True):
        code = main(list(argv))
        out = capsys.readouterr().out
        return code, json.loads(out) if parse else out

    return run


def test_list_prints_the_registry(cli):
    code, envelope = cli("list")
    assert code == 0
    assert envelope["ok"] is True
    assert envelope["command"] == "list"
    assert [s["id"] for s in envelope["data"]["scenarios"]] == list(REGISTRY_IDS)


def test_reeb_report(cli):
    code, envelope = cli("reeb", "--scenario", "canonical_kcontact", "--samples", "3")
    assert code == 0
    report = envelope["data"]["reports"][0]
    assert report["scenario"] == "canonical_kcontact"
    assert report["stages"]["reeb"]["summary"]["fields"] == [{"z1": "1"}, {"z2": "1"}]


def test_expected_failure_exits_zero(cli):
    code, envelope = cli("verify", "--scenario", "symplectisation_nonexample", "--samples", "3")
    assert code == 0
    stages = envelope["data"]["reports"][0]["stages"]
    assert stages["structure"]["verdict"] == "fail"
    assert stages["structure"]["matches_expected"] is True
    assert stages["action"]["verdict"] == "not applicable"


def test_unexpected_failure_exits_one(cli, tmp_path):
    text = (PROJECT_ROOT / "scenarios" / "gl2_example.yaml").read_text(encoding="utf-8")
    mutated = tmp_path / "gl2_mutated.yaml"
    mutated.write_text(text.replace('"d(t) - x4*d(x3)"', '"d(t) + x4*d(x3)"'), encoding="utf-8")
    code, envelope = cli("reduce", "--file", str(mutated), "--samples", "3")
    assert code == 1
    assert envelope["ok"] is False
    stage = envelope["data"]["reports"][0]["stages"]["reduction"]
    assert stage["verdict"] == "fail"
    assert stage["matches_expected"] is False


@pytest.mark.parametrize(
    "argv, error_type",
    [
        (("verify", "--scenario", "no_such_scenario"), "InputError"),
        (("verify",), "CommandLineError"),
        (("frobnicate",), "CommandLineError"),
        (("verify", "--scenario", "damped_wave", "--samples", "0"), "CommandLineError"),
    ],
)
def test_bad_input_exits_two(cli, argv, error_type):
    code, envelope = cli(*argv)
    assert code == 2
    assert envelope["ok"] is False
    assert envelope["error"]["type"] == error_type
    assert envelope["error"]["message"]


def test_text_format_and_out_file(cli, tmp_path):
    target = tmp_path / "out" / "reeb.txt"
    code, text = cli("reeb", "--scenario", "damped_wave", "--samples", "3", "--format", "text", "--out", str(target), parse=False)
    assert code == 0
    assert text.startswith("geored reeb: ok")
    assert target.read_text(encoding="utf-8").strip() == text.strip()


def test_every_command_has_stages():
    parser = build_parser()
    for command in COMMAND_STAGES:
        args = parser.parse_args([command, "--all"])
        assert args.command == command and args.all


def test_entry_point_runs_as_a_script(tmp_path):
    env = {**os.environ, "LOG_FILE": str(tmp_path / "geored.log")}
    result = subprocess.run(
        [sys.executable, "src/main.py", "list", "--log-level", "ERROR"],
        cwd=PROJECT_ROOT,
        env=env,
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert result.returncode == 0
    envelope = json.loads(result.stdout)
    assert envelope["ok"] is True
    assert len(envelope["data"]["scenarios"]) == len(REGISTRY_IDS)


def test_simulate_writes_the_grid_and_the_residuals(cli, tmp_path):
    grid_csv, residuals_csv = tmp_path / "sections" / "wave.csv", tmp_path / "sections" / "wave_res.csv"
    code, envelope = cli(
        "simulate", "--scenario", "damped_wave", "--samples", "3",
        "--grid", "32x64", "--T", "0.5", "--dt", "0.0078125",
        "--out", str(grid_csv), "--residuals", str(residuals_csv),
    )
    assert code in (0, 1)
    summary = envelope["data"]["reports"][0]["stages"]["simulate"]["summary"]
    assert summary["grid"] == "32x64"
    assert summary["csv"] == str(grid_csv) and summary["residuals"] == str(residuals_csv)
    lines = grid_csv.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("t,x,")
    assert len(lines) == 1 + 65 * 32
    assert len(residuals_csv.read_text(encoding="utf-8").splitlines()) == 1 + 65


def test_simulate_time_step_must_match_an_explicit_grid(cli):
    code, envelope = cli(
        "simulate", "--scenario", "damped_wave", "--samples", "3", "--grid", "32x64", "--T", "0.5", "--dt", "0.01"
    )
    assert code == 2
    stage = envelope["data"]["reports"][0]["stages"]["simulate"]
    assert stage["verdict"] == "error"
    assert stage["error_type"] == "SemanticError"


def test_simulate_out_is_the_grid_file():
    args = build_parser().parse_args(["simulate", "--scenario", "damped_wave", "--out", "grid.csv"])
    assert args.csv == "grid.csv"
    assert not hasattr(args, "out")
