"""Tests for Hamiltonian k-vector fields, field equations and the k = 2 integrator."""

import numpy as np
import pytest
from sympy import Symbol

from components.dynamics import (
    GridSpec,
    HamiltonianSystem,
    convergence_order,
    damped_standing_wave,
    eliminate_momenta,
    integrability_check,
    integrate_k2,
    project_dynamics,
    solve_hdw_contact,
    solve_hdw_ksymplectic,
    verify_hdw,
)
from components.reduction import QuotientPresentation
from components.structures import canonical_ksymplectic
from components.symbolic_core import expr_equal, parse_expression
from services.scenario_registry import get_scenario
from utils.errors import CFLViolation, ChartMismatchError, GaugeError, SemanticError

WAVE_PARAMS = {"rho": 1.0, "tau": 1.0, "k": 0.1}


@pytest.fixture
def wave(config):
    return get_scenario("damped_wave", config)


@pytest.fixture
def strings(config):
    return get_scenario("coupled_strings", config)


def test_damped_wave_field_equations(wave):
    X = solve_hdw_contact(wave.structure, wave.hamiltonian, wave.gauge)
    assert X.method == "darboux"
    assert X.gauge_dimension == 6
    assert set(X.free_slots) == {"X1.sx", "X2.st"}
    assert X.as_strings()[0]["u"] == "pt/rho"
    report = verify_hdw(wave.structure, wave.hamiltonian, X)
    assert report.verdict == "pass"
    assert report.details["formulations_agree"] is True


def test_gauge_part_breaks_integrability_outside_the_subsystem(wave):
    X = solve_hdw_contact(wave.structure, wave.hamiltonian, wave.gauge)
    assert integrability_check(X).verdict == "fail"
    assert integrability_check(X, coordinates=["u", "pt", "px"]).verdict == "pass"


def test_wrong_field_fails_verification(wave):
    X = solve_hdw_contact(wave.structure, wave.hamiltonian, wave.gauge)
    k = Symbol("k")
    report = verify_hdw(wave.structure, wave.hamiltonian + k * Symbol("u"), X)
    assert report.verdict == "fail"
    assert report.witness is not None


@pytest.mark.parametrize(
    "gauge, message",
    [
        ({"X1.u": 0}, "fixed by the field equations"),
        ({"X1.pt": 0, "X2.px": 0}, "inconsistent gauge assignment"),
        ({"Y1.pt": 0}, "is not of the form"),
        ({"X3.pt": 0}, "alpha must lie in 1..2"),
        ({"X1.w": 0}, "is not a coordinate"),
    ],
)
def test_gauge_assignments_are_validated(wave, gauge, message):
    with pytest.raises(GaugeError, match=message):
        solve_hdw_contact(wave.structure, wave.hamiltonian, gauge)


def test_field_equation_of_damped_wave(wave):
    system = HamiltonianSystem(wave.structure, wave.hamiltonian)
    u_t, u_xx, u_tt = Symbol("u_t"), Symbol("u_xx"), Symbol("u_tt")
    rho, tau, k = Symbol("rho"), Symbol("tau"), Symbol("k")
    assert expr_equal(eliminate_momenta(system), u_tt - tau / rho * u_xx + k * u_t)


def test_hamiltonian_must_use_chart_names(wave):
    with pytest.raises(ChartMismatchError):
        HamiltonianSystem(wave.structure, Symbol("w") ** 2)


def test_ksymplectic_field_equations():
    ks = canonical_ksymplectic(1, 2, "darboux")
    h = parse_expression("(p1_1^2 + p1_2^2)/2 + q1^2/2", ks.chart)
    X = solve_hdw_ksymplectic(ks, h)
    assert X.method == "general"
    assert verify_hdw(ks, h, X).verdict == "pass"


def test_reduced_dynamics_of_coupled_strings(strings):
    X = solve_hdw_contact(strings.structure, strings.hamiltonian, strings.gauge, strings.bindings)
    projected = project_dynamics(X, strings.quotient, strings.structure, strings.hamiltonian, strings.action)
    assert projected.report.verdict == "pass"
    assert projected.fields is not None
    assert expr_equal(projected.hamiltonian, strings.quotient.hamiltonian)


def test_plus_sign_reduced_hamiltonian_is_rejected(strings):
    q = strings.quotient
    stated = parse_expression("(pt^2 + px^2)/4 + C(q) + gamma*st", q.chart, {"C": 1})
    wrong = QuotientPresentation(
        level=q.level,
        chart=q.chart,
        projection=q.projection,
        eta=q.eta,
        section=q.section,
        hamiltonian=stated,
    )
    X = solve_hdw_contact(strings.structure, strings.hamiltonian, strings.gauge, strings.bindings)
    report = project_dynamics(X, wrong, strings.structure, strings.hamiltonian, strings.action).report
    assert report.verdict == "fail"
    assert report.symbolic["h_red matches the stated reduced Hamiltonian"] is False
    assert report.symbolic["pi* h_red = i* h"] is True


def test_grid_spec_parsing():
    grid = GridSpec.parse("512x2048", final_time=1.0)
    assert (grid.nx, grid.nt) == (512, 2048)
    assert grid.dt == pytest.approx(1 / 2048)
    assert grid.refined().nx == 1024
    with pytest.raises(SemanticError):
        GridSpec.parse("512 by 2048")


def test_time_step_sets_the_number_of_steps():
    grid = GridSpec(16, 8, final_time=0.5)
    assert grid.with_time_step(0.0078125).nt == 64
    assert grid.with_time_step(0.03).nt == 17
    assert grid.with_time_step(0.0625, strict=True) == grid
    with pytest.raises(SemanticError):
        grid.with_time_step(0.01, strict=True)
    with pytest.raises(SemanticError):
        grid.with_time_step(0.0)


def test_cfl_violation_suggests_a_step(wave):
    system = HamiltonianSystem(wave.structure, wave.hamiltonian)
    with pytest.raises(CFLViolation) as info:
        integrate_k2(system, {"u": "sin(x)"}, GridSpec(64, 4, final_time=1.0), WAVE_PARAMS)
    assert info.value.suggested_dt < 2 * np.pi / 64


def test_integrator_tracks_standing_wave(wave):
    system = HamiltonianSystem(wave.structure, wave.hamiltonian)
    grid = GridSpec(64, 128, final_time=0.5)
    section = integrate_k2(system, {"u": "sin(x)", "pt": "0", "st": "0"}, grid, WAVE_PARAMS)
    assert section.values.shape == (129, 64, 5)
    exact = damped_standing_wave(section.t[-1], section.x, 1.0, 0.1)
    assert np.abs(section.field("u")[-1] - exact).max() < 1e-2
    assert section.energy[-1] < section.energy[0]


def test_integrator_needs_parameters(wave):
    system = HamiltonianSystem(wave.structure, wave.hamiltonian)
    with pytest.raises(SemanticError, match="parameters"):
        integrate_k2(system, {"u": "sin(x)"}, GridSpec(64, 128, final_time=0.5), {"rho": 1.0})


def test_section_grid_csv(wave, tmp_path):
    system = HamiltonianSystem(wave.structure, wave.hamiltonian)
    section = integrate_k2(system, {"u": "sin(x)"}, GridSpec(16, 8, final_time=0.1), WAVE_PARAMS)
    path = tmp_path / "section.csv"
    section.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x,u,pt,px,st,sx"
    assert len(lines) == 1 + 9 * 16


def test_convergence_order_is_a_log_log_slope():
    assert convergence_order([1.0, 0.5, 0.25], [1.0, 0.25, 0.0625]) == pytest.approx(2.0)
    with pytest.raises(SemanticError):
        convergence_order([1.0], [1.0])
