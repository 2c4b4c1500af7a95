"""
Scenario pipeline: runs the verification and simulation stages of a
scenario in dependency order and compares the outcomes with the
expectations stored beside the scenario.
"""

import asyncio
import logging
import math
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import sympy

from components.dynamics import (
    GridSpec,
    HamiltonianSystem,
    convergence_study,
    compare_reduced_flow,
    damped_standing_wave,
    eliminate_momenta,
    integrability_check,
    integrate_k2,
    project_dynamics,
    solve_hdw_contact,
    solve_hdw_ksymplectic,
    verify_hdw,
)
from components.lie_actions import check_equivariance_inf, check_invariance, isotropy
from components.reduction import (
    check_contact_conditions,
    check_kernel_identity,
    check_ksymplectic_level_lemma,
    check_lifted_level_set,
    check_symplectic_conditions,
    probe_reduction_group,
    verify_reduction,
)
from components.structures import KContact, solve_reeb, verify_kcontact, verify_ksymplectic
from components.symbolic_core import Point, as_number, configure_equality, expr_equal
from schemas.reports import RunReport, StageResult
from services.scenario_builder import NotApplicable, Scenario, stated_momentum_matches
from services.scenario_registry import get_scenario
from utils.errors import GeoredError, SemanticError

logger = logging.getLogger(__name__)

STAGES = (
    "structure",
    "reeb",
    "action",
    "momentum",
    "isotropy",
    "level_set",
    "conditions",
    "kernel",
    "reduction",
    "probe",
    "dynamics",
    "simulate",
)

StageOutcome = Tuple[str, Dict[str, Any]]


@dataclass(frozen=True)
class PipelineOptions:
    """Knobs shared by all stages of one run."""

    samples: int = 100
    probe_samples: int = 50
    seed: int = 20240611
    reduction_algebra: str = "bracket"
    grid: Optional[str] = None
    final_time: Optional[float] = None
    dt: Optional[float] = None
    csv: Optional[str] = None
    residuals: Optional[str] = None
    timings: bool = False
    numerator_bound: int = 9
    denominator_bound: int = 5
    max_attempts: int = 2000

    @property
    def sampling(self) -> Dict[str, int]:
        return {
            "numerator_bound": self.numerator_bound,
            "denominator_bound": self.denominator_bound,
            "max_attempts": self.max_attempts,
        }


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def _matches(actual: Any, expected: Any) -> bool:
    """Expected mappings are checked key by key, everything else by equality."""
    if isinstance(expected, dict):
        return isinstance(actual, dict) and all(k in actual and _matches(actual[k], v) for k, v in expected.items())
    if isinstance(expected, list) and isinstance(actual, (list, tuple)):
        return len(actual) == len(expected) and all(_matches(a, e) for a, e in zip(actual, expected))
    return actual == expected


def stage_matches(result: StageResult, expected: Dict[str, Any]) -> bool:
    observed = dict(result.summary)
    observed["verdict"] = result.verdict
    return _matches(observed, expected)


class ScenarioPipeline:
    """Runs scenarios stage by stage."""

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        self.config = config or {}
        sampling = self.config.get("sampling", {})
        self.defaults = PipelineOptions(
            samples=sampling.get("samples", 100),
            probe_samples=sampling.get("probe_samples", 50),
            seed=sampling.get("seed", 20240611),
            numerator_bound=sampling.get("numerator_bound", 9),
            denominator_bound=sampling.get("denominator_bound", 5),
            max_attempts=sampling.get("max_attempts", 2000),
        )
        self.jobs = self.config.get("pipeline", {}).get("jobs", 1)
        self.integrator = self.config.get("integrator", {})
        configure_equality(self.config)
        self._stages: Dict[str, Callable[[Scenario, PipelineOptions], StageOutcome]] = {
            "structure": self._structure,
            "reeb": self._reeb,
            "action": self._action,
            "momentum": self._momentum,
            "isotropy": self._isotropy,
            "level_set": self._level_set,
            "conditions": self._conditions,
            "kernel": self._kernel,
            "reduction": self._reduction,
            "probe": self._probe,
            "dynamics": self._dynamics,
            "simulate": self._simulate,
        }

    def options(self, **overrides: Any) -> PipelineOptions:
        return replace(self.defaults, **{k: v for k, v in overrides.items() if v is not None})

    # ------------------------------------------------------------------
    # Running
    # ------------------------------------------------------------------

    def run(
        self,
        scenario: Scenario,
        stages: Optional[Sequence[str]] = None,
        options: Optional[PipelineOptions] = None,
    ) -> RunReport:
        """Run the requested stages (default: all) in dependency order."""
        options = options or self.defaults
        requested = set(stages or STAGES)
        unknown = sorted(requested - set(STAGES))
        if unknown:
            raise SemanticError(f"unknown stages {unknown}; known stages are {list(STAGES)}")
        results: Dict[str, StageResult] = {}
        for name in STAGES:
            if name in requested:
                results[name] = self._run_stage(name, scenario, options)
        return RunReport(scenario=scenario.id, seed=options.seed, samples=options.samples, stages=results)

    def _run_stage(self, name: str, scenario: Scenario, options: PipelineOptions) -> StageResult:
        logger.info(f"Running {name} for {scenario.id}")
        started = time.perf_counter()
        try:
            verdict, summary = self._stages[name](scenario, options)
            result = StageResult(verdict=verdict, summary=summary)
        except NotApplicable as e:
            result = StageResult(verdict="not applicable", message=str(e))
        except GeoredError as e:
            logger.warning(f"Stage {name} for {scenario.id} stopped: {e}")
            result = StageResult(verdict="error", message=str(e), error_type=type(e).__name__)
        except Exception as e:
            logger.error(f"Failed {name} for {scenario.id}: {e}")
            raise
        expectation = scenario.expected.get(name)
        if expectation is not None:
            result.expected = {"source": expectation.source, **expectation.values}
            result.matches_expected = stage_matches(result, expectation.values)
            if not result.matches_expected:
                logger.warning(f"Stage {name} for {scenario.id} differs from the expectation ({expectation.source})")
        if result.verdict == "fail" and result.matches_expected is not True:
            logger.warning(f"Stage {name} for {scenario.id} failed: {result.summary.get('witness')}")
        if options.timings:
            result.seconds = round(time.perf_counter() - started, 3)
        return result

    async def run_batch(
        self,
        scenarios: Sequence[Union[str, Scenario]],
        stages: Optional[Sequence[str]] = None,
        options: Optional[PipelineOptions] = None,
        jobs: Optional[int] = None,
    ) -> List[RunReport]:
        """Run scenarios concurrently on worker threads; reports keep the input order."""
        semaphore = asyncio.Semaphore(max(1, jobs or self.jobs))

        async def one(item: Union[str, Scenario]) -> RunReport:
            async with semaphore:
                return await asyncio.to_thread(self.run_item, item, stages, options)

        return list(await asyncio.gather(*(one(item) for item in scenarios)))

    def run_item(
        self,
        item: Union[str, Scenario],
        stages: Optional[Sequence[str]],
        options: Optional[PipelineOptions],
    ) -> RunReport:
        scenario = item if isinstance(item, Scenario) else get_scenario(item, self.config)
        return self.run(scenario, stages, options)

    # ------------------------------------------------------------------
    # Sample sets
    # ------------------------------------------------------------------

    def _structure_samples(self, s: Scenario, options: PipelineOptions, count: Optional[int] = None) -> List[Point]:
        return s.structure.sample(count or options.samples, options.seed, bindings=s.bindings, **options.sampling)

    def _level_samples(self, s: Scenario, options: PipelineOptions) -> List[Point]:
        s.require("level")
        if s.level.chart is None:
            raise NotApplicable("level set has no parametrizing chart")
        return s.level.sample(options.samples, options.seed, bindings=s.bindings, **options.sampling)

    def _lifted_samples(self, s: Scenario, options: PipelineOptions, count: int) -> List[Point]:
        return s.lifted_level.sample(count, options.seed, bindings=s.bindings, **options.sampling)

    # ------------------------------------------------------------------
    # Stages
    # ------------------------------------------------------------------

    def _structure(self, s: Scenario, options: PipelineOptions) -> StageOutcome:
        points = self._structure_samples(s, options)
        if isinstance(s.structure, KContact):
            report = verify_kcontact(s.structure, points, options.seed, s.bindings)
            summary: Dict[str, Any] = {"kcontact": report.verdict, "witness": report.witness}
            ok = report.passed
            if s.document.structure.symplectise:
                ks = s.symplectisation
                lifted = ks.sample(options.samples, options.seed, bindings=s.bindings, **options.sampling)
                symplectic = verify_ksymplectic(ks, lifted, options.seed, s.bindings)
                summary["symplectisation"] = symplectic.verdict
                summary["symplectisation_witness"] = symplectic.witness
                ok = ok and symplectic.passed
            return _verdict(ok), summary
        report = verify_ksymplectic(s.structure, points, options.seed, s.bindings)
        return report.verdict, {"ksymplectic": report.verdict, "witness": report.witness}

    def _reeb(self, s: Scenario, options: PipelineOptions) -> StageOutcome:
        s.require("kcontact")
        reeb = solve_reeb(s.structure, seed=options.seed, bindings=s.bindings)
        summary = {
            "method": reeb.method,
            "fields": [R.as_strings() for R in reeb.fields],
            "verified": reeb.verified,
            "commute": reeb.brackets_vanish,
        }
        return _verdict(reeb.verified), summary

    def _action(self, s: Scenario, options: PipelineOptions) -> StageOutcome:
        s.require("action")
        brackets = s.action.check_brackets()
        invariance = check_invariance(s.action, s.structure)
        summary = {
            "brackets": brackets.verdict,
            "invariance": invariance.verdict,
            "witness": brackets.witness or invariance.witness,
        }
        return _verdict(brackets.passed and invariance.passed), summary

    def _momentum(self, s: Scenario, options: PipelineOptions) -> StageOutcome:
        s.require("action", "momentum")
        J = s.momentum
        equivariance = check_equivariance_inf(J, s.action)
        summary: Dict[str, Any] = {"rows": J.as_strings(), "equivariance": equivariance.verdict}
        stated = stated_momentum_matches(s)
        if stated is not None:
            summary["matches_stated"] = stated
        if isinstance(s.structure, KContact):
            reeb = solve_reeb(s.structure, seed=options.seed, bindings=s.bindings)
            if reeb.fields:
                summary["reeb_invariant"] = all(
                    expr_equal(R.apply(entry), 0) for R in reeb.fields for row in J.rows for entry in row
                )
        ok = equivariance.passed and stated is not False and summary.get("reeb_invariant", True)
        summary["witness"] = equivariance.witness
        return _verdict(ok), summary

    def _isotropy(self, s: Scenario, options: PipelineOptions) -> StageOutcome:
        s.require("action", "mu")
        report = isotropy(s.action.algebra, s.mu)
        summary = {
            "dims": report.dims,
            "willett": report.willett,
            "bracket_closed": report.bracket_closed,
            "k_mu": report.k_mu,
            "k_bracket_mu": report.k_bracket_mu,
            "flags": report.flags,
        }
        return _verdict(report.bracket_closed), summary

    def _level_set(self, s: Scenario, options: PipelineOptions) -> StageOutcome:
        points = self._level_samples(s, options)
        report = s.level.certify(points, options.seed, s.bindings)
        summary = {
            "certified": report.verdict,
            "dimension": s.level.chart.dim,
            "equalities": [str(e) for e in s.level.equalities],
            "flags": report.flags,
            "witness": report.witness,
        }
        return report.verdict, summary

    def _conditions(self, s: Scenario, options: PipelineOptions) -> StageOutcome:
        s.require("action", "momentum", "mu")
        points = self._level_samples(s, options)
        which = options.reduction_algebra
        if not isinstance(s.structure, KContact):
            report = check_symplectic_conditions(
                s.structure, s.action, s.momentum, s.mu, points, options.seed, s.bindings, which
            )
            summary = {"algebra": which, "symplectic": report.verdict, "flags": report.flags, "witness": report.witness}
            return report.verdict, summary

        contact = check_contact_conditions(s.structure, s.action, s.momentum, s.mu, points, options.seed, s.bindings, which)
        lifted_points = self._lifted_samples(s, options, options.samples)
        symplectic = check_symplectic_conditions(
            s.symplectisation,
            s.lifted_action,
            s.lifted_momentum,
            s.mu,
            lifted_points,
            options.seed,
            s.bindings,
            which,
            base_action=s.action,
            base_momentum=s.momentum,
        )
        lifted = check_lifted_level_set(s.level, s.lifted_level, s.symplectisation, lifted_points, options.seed, s.bindings)
        agree = symplectic.cross_check["agree"] if symplectic.cross_check else None
        summary = {
            "algebra": which,
            "contact": contact.verdict,
            "symplectic": symplectic.verdict,
            "checkers_agree": agree,
            "lifted_level_set": lifted.verdict,
            "flags": contact.flags,
            "witness": contact.witness or symplectic.witness or lifted.witness,
        }
        return _verdict(contact.passed and agree is not False and lifted.passed), summary

    def _kernel(self, s: Scenario, options: PipelineOptions) -> StageOutcome:
        s.require("kcontact", "action", "momentum", "mu")
        points = self._level_samples(s, options)
        reports = {
            which: check_kernel_identity(
                s.structure, s.action, s.momentum, s.mu, s.level, points, options.seed, s.bindings, which
            )
            for which in ("bracket", "isotropy")
        }
        chosen = reports[options.reduction_algebra] if options.reduction_algebra in reports else reports["bracket"]
        summary = {
            "algebra": options.reduction_algebra,
            "bracket": reports["bracket"].verdict,
            "isotropy": reports["isotropy"].verdict,
            "flags": chosen.flags,
            "witness": chosen.witness,
        }
        return chosen.verdict, summary

    def _reduction(self, s: Scenario, options: PipelineOptions) -> StageOutcome:
        s.require("kcontact", "action", "quotient")
        points = self._level_samples(s, options)
        report = verify_reduction(
            s.quotient, s.structure, s.action, points, options.seed, s.bindings, options.reduction_algebra
        )
        summary = {
            "reduced_eta": s.quotient.eta.to_text(),
            "reduced_kcontact": report.details.get("reduced", {}).get("verdict"),
            "reeb": report.details.get("reeb"),
            "dimensions": report.details.get("dimensions"),
            "flags": report.flags,
            "witness": report.witness,
        }
        return report.verdict, summary

    def _probe(self, s: Scenario, options: PipelineOptions) -> StageOutcome:
        s.require("probe", "kcontact", "action", "momentum", "mu", "level")
        points = self._lifted_samples(s, options, options.probe_samples)
        report = probe_reduction_group(
            s.symplectisation, s.lifted_action, s.lifted_momentum, s.mu, points, options.seed, s.bindings
        )
        lemma = check_ksymplectic_level_lemma(
            s.symplectisation, s.lifted_action, s.lifted_momentum, s.mu, points, options.seed, s.bindings
        )
        summary = {
            "recommended": report.recommended,
            "kernel_is_bracket_orbit": all(p.matches in ("bracket", "both") for p in report.points),
            "strictly_contains_isotropy": all(p.strictly_contains_isotropy for p in report.points),
            "quotient_dims": report.quotient_dims,
            "level_lemma": lemma.verdict,
            "flags": report.flags,
        }
        return report.verdict, summary

    def _dynamics(self, s: Scenario, options: PipelineOptions) -> StageOutcome:
        s.require("dynamics", "hamiltonian")
        spec = s.document.dynamics
        h = s.hamiltonian
        if isinstance(s.structure, KContact):
            X = solve_hdw_contact(s.structure, h, s.gauge, s.bindings, options.seed)
        else:
            X = solve_hdw_ksymplectic(s.structure, h, s.gauge, s.bindings, options.seed)
        hdw = verify_hdw(s.structure, h, X, s.bindings)
        full = integrability_check(X)
        summary: Dict[str, Any] = {
            "method": X.method,
            "fields": X.as_strings(),
            "gauge_dimension": X.gauge_dimension,
            "free_slots": list(X.free_slots),
            "hdw": hdw.verdict,
            "integrable": full.verdict,
        }
        if "formulations_agree" in hdw.details:
            summary["formulations_agree"] = hdw.details["formulations_agree"]
        ok = hdw.passed
        witness = hdw.witness

        if spec.integrability is not None:
            restricted = integrability_check(
                X, on=spec.integrability.on or None, coordinates=spec.integrability.coordinates or None
            )
            summary["integrable_restricted"] = restricted.verdict
            ok = ok and restricted.passed
            witness = witness or restricted.witness

        layout = getattr(s.structure, "darboux", None)
        if layout is not None and layout.n == 1 and layout.k == 2:
            system = HamiltonianSystem(s.structure, h, s.bindings)
            summary["field_equation"] = str(eliminate_momenta(system))

        if s.quotient is not None and s.quotient.section is not None and s.action is not None:
            projected = project_dynamics(X, s.quotient, s.structure, h, s.action, options.reduction_algebra)
            summary["projection"] = projected.report.verdict
            summary["h_red"] = str(projected.hamiltonian)
            summary["reduced_fields"] = projected.report.details.get("reduced_field")
            ok = ok and projected.report.passed
            witness = witness or projected.report.witness
            if spec.flow is not None:
                if projected.fields is None:
                    raise SemanticError("the flow comparison needs a projectable k-vector field")
                flow = spec.flow
                level = s.quotient.level
                start = level.embedding.apply_at(Point(level.chart, flow.start), s.bindings)
                alpha = flow.component - 1
                comparison = compare_reduced_flow(
                    X[alpha], projected.fields[alpha], level, s.quotient.projection, start,
                    flow.final_time, flow.dt, s.bindings,
                )
                summary["flow_error"] = comparison["max_error"]
                summary["flow"] = _verdict(comparison["max_error"] <= flow.tolerance)
                ok = ok and comparison["max_error"] <= flow.tolerance
        summary["witness"] = witness
        return _verdict(ok), summary

    def _simulate(self, s: Scenario, options: PipelineOptions) -> StageOutcome:
        s.require("simulate", "hamiltonian")
        spec = s.document.simulate
        system = HamiltonianSystem(s.structure, s.hamiltonian, s.bindings)
        params = {name: float(as_number(value)) for name, value in spec.params.items()}
        nx, nt = self.integrator.get("grid", [512, 2048])
        grid = GridSpec.parse(
            options.grid or spec.grid or f"{nx}x{nt}",
            options.final_time or spec.final_time or self.integrator.get("final_time", 1.0),
        )
        if options.dt is not None:
            grid = grid.with_time_step(options.dt, strict=options.grid is not None)
        summary: Dict[str, Any] = {"grid": f"{grid.nx}x{grid.nt}", "final_time": grid.final_time, "dt": grid.dt}

        if spec.exact is None or options.csv or options.residuals:
            section = integrate_k2(system, spec.initial, grid, params)
            summary.update(self._write_section(section, options))
            if spec.exact is None:
                summary.update(section.summary())
                return _verdict(math.isfinite(section.residual)), summary

        speed, damping = _wave_constants(s, params)
        factor = 2 ** spec.refinements
        if grid.nx % factor or grid.nt % factor:
            raise SemanticError(f"grid {grid.nx}x{grid.nt} cannot be coarsened {spec.refinements} times")
        coarse = GridSpec(grid.nx // factor, grid.nt // factor, grid.final_time, grid.length)
        study = convergence_study(
            system,
            spec.initial,
            coarse,
            params,
            exact=lambda t, x: damped_standing_wave(t, x, speed, damping),
            refinements=spec.refinements,
        )
        error, order = study["errors"][-1], study["error_order"]
        summary.update(
            {
                "speed": speed,
                "damping": damping,
                "max_error": error,
                "order": order,
                "errors": study["errors"],
                "residual": study["residuals"][-1],
            }
        )
        return _verdict(error <= spec.tolerance and order >= spec.min_order), summary

    @staticmethod
    def _write_section(section: Any, options: PipelineOptions) -> Dict[str, str]:
        written = {}
        for key, path, writer in (
            ("csv", options.csv, section.write_csv),
            ("residuals", options.residuals, section.write_residuals_csv),
        ):
            if path:
                target = Path(path)
                target.parent.mkdir(parents=True, exist_ok=True)
                writer(target)
                written[key] = str(target)
        return written


def _wave_constants(s: Scenario, params: Dict[str, float]) -> Tuple[float, float]:
    """Wave speed and damping rate of a one-field k = 2 Darboux Hamiltonian."""
    layout = getattr(s.structure, "darboux", None)
    if layout is None or layout.n != 1 or layout.k != 2:
        raise SemanticError("the damped standing wave oracle needs a one-field Darboux layout with k = 2")
    chart = s.chart
    h = s.hamiltonian.xreplace({sympy.Symbol(k): sympy.nsimplify(v) for k, v in params.items()})
    pt, px = (chart.coordinate(c) for c in layout.p[0])
    st = chart.coordinate(layout.z[0])
    speed_squared = -sympy.diff(h, pt, 2) / sympy.diff(h, px, 2)
    damping = sympy.diff(h, st)
    if speed_squared.free_symbols or damping.free_symbols:
        raise SemanticError("the damped standing wave oracle needs constant speed and damping")
    return math.sqrt(float(speed_squared)), float(damping)


def run_pipeline(
    scenario: Scenario,
    stages: Optional[Sequence[str]] = None,
    config: Optional[Dict[str, Any]] = None,
    **overrides: Any,
) -> RunReport:
    """Run a scenario with the configured defaults and keyword overrides."""
    pipeline = ScenarioPipeline(config)
    return pipeline.run(scenario, stages, pipeline.options(**overrides))
