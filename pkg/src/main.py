"""
geored command line.

Every command prints one JSON envelope on stdout; logs go to stderr and the
log file. Exit codes: 0 all stages ok, 1 a verification failed, 2 bad input,
3 internal error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from schemas.reports import RunReport
from services.pipeline import PipelineOptions, ScenarioPipeline
from services.scenario_builder import Scenario
from services.scenario_registry import PROJECT_ROOT, REGISTRY_IDS, describe, get_repository, load_scenario, registry
from services.settings import get_settings
from utils import errors
from utils.config import load_config
from utils.errors import GeoredError, InputError
from utils.logging import setup_logging

logger = logging.getLogger("main")

COMMAND_STAGES: Dict[str, tuple] = {
    "verify": ("structure", "action", "momentum"),
    "reeb": ("reeb",),
    "conditions": ("isotropy", "level_set", "conditions"),
    "reduce": ("level_set", "kernel", "reduction"),
    "probe-group": ("isotropy", "probe"),
    "simulate": ("dynamics", "simulate"),
}


class CommandLineError(InputError):
    """Bad command-line usage, reported in the envelope instead of argparse's exit."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise CommandLineError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="geored",
        description="Verify k-contact and k-symplectic structures, their reductions and their field equations.",
    )
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", default=None, help="YAML configuration file (default: config/config.yaml)")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--format", choices=("json", "text"), default="json", help="Output format (default: json)")

    report = _Parser(add_help=False)
    report.add_argument("--out", default=None, help="Also write the output to this file")

    selection = _Parser(add_help=False)
    selection.add_argument("--scenario", action="append", default=[], help="Registry scenario id (repeatable)")
    selection.add_argument("--file", action="append", default=[], help="Scenario file (repeatable)")
    selection.add_argument("--all", action="store_true", help="Every registry scenario")
    selection.add_argument("--samples", type=int, default=None, help="Sample points per pointwise check (default: 100)")
    selection.add_argument("--seed", type=int, default=None, help="Seed of every sample set")
    selection.add_argument("--jobs", type=int, default=None, help="Scenarios run in parallel")
    selection.add_argument("--timings", action="store_true", help="Add wall times to the report")

    commands.add_parser("verify", parents=[common, report, selection], help="Structure, action invariance and momentum map")
    commands.add_parser("reeb", parents=[common, report, selection], help="Reeb vector fields")
    for name, text in (("conditions", "Reduction conditions on the level set"), ("reduce", "Kernel identity and reduced structure")):
        sub = commands.add_parser(name, parents=[common, report, selection], help=text)
        sub.add_argument(
            "--algebra",
            choices=("bracket", "isotropy"),
            default=None,
            help="Reduction algebra: ker mu with the projective isotropy (bracket) or with the isotropy",
        )
    commands.add_parser("probe-group", parents=[common, report, selection], help="Which subalgebra the symplectic kernel singles out")
    simulate = commands.add_parser("simulate", parents=[common, selection], help="Field equations and the k = 2 integrator")
    simulate.add_argument("--grid", default=None, help="Grid as NxM (space x time), e.g. 512x2048")
    simulate.add_argument("--T", dest="final_time", type=float, default=None, help="Final time")
    simulate.add_argument("--dt", type=float, default=None, help="Time step; sets the number of steps to ceil(T / dt)")
    simulate.add_argument("--out", "--csv", dest="csv", default=None, help="Write the section grid here as CSV")
    simulate.add_argument("--residuals", default=None, help="Write the per-step residuals and energy here as CSV")
    commands.add_parser("list", parents=[common, report], help="List the registry scenarios")
    return parser


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _config_path(arg: Optional[str]) -> str:
    path = Path(arg or get_settings().CONFIG_PATH)
    if arg is None and not path.is_absolute() and not path.exists():
        path = PROJECT_ROOT / path
    return str(path)


def _select(args: argparse.Namespace, config: Dict[str, Any]) -> List[Union[str, Scenario]]:
    selected: List[Union[str, Scenario]] = []
    if args.all:
        available = get_repository(config).list_ids()
        selected.extend([i for i in REGISTRY_IDS if i in available] + [i for i in available if i not in REGISTRY_IDS])
    selected.extend(i for i in args.scenario if i not in selected)
    selected.extend(load_scenario(path) for path in args.file)
    if not selected:
        raise CommandLineError("choose scenarios with --scenario, --file or --all")
    return selected


def _options(args: argparse.Namespace, pipeline: ScenarioPipeline) -> PipelineOptions:
    settings = get_settings()
    samples = args.samples if args.samples is not None else settings.SAMPLES
    if samples is not None and samples < 1:
        raise CommandLineError("--samples must be at least 1")
    return pipeline.options(
        samples=samples,
        seed=args.seed if args.seed is not None else settings.SEED,
        reduction_algebra=getattr(args, "algebra", None),
        grid=getattr(args, "grid", None),
        final_time=getattr(args, "final_time", None),
        dt=getattr(args, "dt", None),
        csv=getattr(args, "csv", None),
        residuals=getattr(args, "residuals", None),
        timings=args.timings or None,
    )


def _exit_code(reports: Sequence[RunReport]) -> int:
    code = 0
    for report in reports:
        for stage in report.stages.values():
            if stage.verdict == "error" and stage.matches_expected is not True:
                error_class = getattr(errors, stage.error_type or "", GeoredError)
                code = max(code, getattr(error_class, "exit_code", 3))
        if not report.ok:
            code = max(code, 1)
    return code


def _text(envelope: Dict[str, Any]) -> str:
    lines = [f"geored {envelope['command']}: {'ok' if envelope['ok'] else 'not ok'}"]
    if "error" in envelope:
        lines.append(f"  {envelope['error']['type']}: {envelope['error']['message']}")
        return "\n".join(lines)
    data = envelope["data"]
    if envelope["command"] == "list":
        for entry in data["scenarios"]:
            lines.append(f"  {entry['id']:<28} {entry['structure']:<22} {entry['title']}")
        return "\n".join(lines)
    for report in data["reports"]:
        lines.append(f"  {report['scenario']} (seed {report['seed']}, {report['samples']} samples)")
        for name, stage in report["stages"].items():
            mark = {True: "as expected", False: "UNEXPECTED", None: ""}[stage.get("matches_expected")]
            line = f"    {name:<12} {stage['verdict']:<15} {mark}".rstrip()
            reason = stage.get("message") or stage.get("summary", {}).get("witness")
            if reason:
                line += f"  ({reason})"
            lines.append(line)
    return "\n".join(lines)


def _emit(envelope: Dict[str, Any], fmt: str, out: Optional[str]) -> None:
    text = json.dumps(envelope, indent=2, ensure_ascii=False, default=str) if fmt == "json" else _text(envelope)
    print(text)
    if out:
        target = Path(out)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def run(args: argparse.Namespace, config: Dict[str, Any]) -> tuple:
    """Execute a parsed command; returns (envelope data, exit code)."""
    if args.command == "list":
        return {"scenarios": [describe(s) for s in registry(config)]}, 0

    pipeline = ScenarioPipeline(config)
    options = _options(args, pipeline)
    selected = _select(args, config)
    stages = COMMAND_STAGES[args.command]
    if len(selected) == 1:
        reports = [pipeline.run_item(selected[0], stages, options)]
    else:
        reports = asyncio.run(pipeline.run_batch(selected, stages, options, args.jobs))
    data = {"reports": [r.model_dump(mode="json", exclude_none=True) for r in reports]}
    return data, _exit_code(reports)


def main(argv: Optional[Sequence[str]] = None) -> int:
    command = "geored"
    fmt, out = "json", None
    try:
        args = build_parser().parse_args(argv)
        command, fmt, out = args.command, args.format, getattr(args, "out", None)
        settings = get_settings()
        config = load_config(_config_path(args.config))
        config_logging = config.get("logging", {})
        setup_logging(
            args.log_level or settings.LOG_LEVEL or config_logging.get("level", "INFO"),
            settings.LOG_FILE or config_logging.get("file"),
        )
        data, code = run(args, config)
        _emit({"ok": code == 0, "command": command, "data": data}, fmt, out)
        return code
    except GeoredError as e:
        logger.error(f"Failed {command}: {e}")
        _emit({"ok": False, "command": command, "error": {"type": type(e).__name__, "message": str(e)}}, fmt, out)
        return e.exit_code
    except Exception as e:
        logger.exception(f"Failed {command}: {e}")
        _emit({"ok": False, "command": command, "error": {"type": "InternalError", "message": str(e)}}, fmt, out)
        return 3


if __name__ == "__main__":
    sys.exit(main())
