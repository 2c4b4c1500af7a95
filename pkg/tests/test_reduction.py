"""Tests for momentum level sets, reduction conditions and reduced structures."""

import pytest

from components.exterior_calculus import SmoothMap, parse_vform
from components.reduction import (
    QuotientPresentation,
    check_contact_conditions,
    check_kernel_identity,
    check_ksymplectic_level_lemma,
    check_lifted_level_set,
    check_symplectic_conditions,
    level_equations,
    level_set_of,
    probe_reduction_group,
    tangent_level_set,
    verify_reduction,
)
from components.symbolic_core import Chart, Point
from services.scenario_registry import get_scenario
from utils.errors import OffLevelSetError, SemanticError

SEED = 7


@pytest.fixture
def product(config):
    return get_scenario("product_contact", config)


@pytest.fixture
def sl2(config):
    return get_scenario("sl2_counterexample", config)


@pytest.fixture
def gl2(config):
    return get_scenario("gl2_example", config)


def test_ray_equalities_are_minors(product):
    equalities, opens, flags = level_equations(product.momentum, product.mu)
    assert [str(e) for e in equalities] == ["x4", "y4"]
    assert [str(c) for c in opens] == ["-x2", "-y2"]
    assert flags == []


def test_level_set_samples_lie_on_it(product):
    points = product.level.sample(4, SEED)
    assert len(points) == 4
    assert all(product.level.contains(x) for x in points)
    report = product.level.certify(points, seed=SEED)
    assert report.verdict == "pass"
    assert all(p.ranks["tangent"] == 8 for p in report.points)


def test_off_level_point_is_rejected(product):
    x = product.level.sample(1, SEED)[0]
    off = Point(x.chart, {**x.values, "x4": 1})
    with pytest.raises(OffLevelSetError):
        tangent_level_set(product.momentum, product.mu, off)


def test_parametrization_must_be_a_graph(product):
    chart = Chart("bad_level", ("x1", "x2", "x3", "x4", "s1", "y1", "y2", "y3", "s2"))
    mapping = {c: c for c in chart.coords}
    mapping["y4"] = "0"
    embedding = SmoothMap.from_mapping(chart, product.chart, mapping)
    with pytest.raises(SemanticError, match="fails validation"):
        level_set_of(product.momentum, product.mu, chart, embedding)


def test_product_conditions_and_kernel_identity(product):
    points = product.level.sample(3, SEED)
    conditions = check_contact_conditions(product.structure, product.action, product.momentum, product.mu, points)
    assert conditions.verdict == "pass"
    kernel = check_kernel_identity(
        product.structure, product.action, product.momentum, product.mu, product.level, points
    )
    assert kernel.verdict == "pass"
    assert all(p.ranks["orbit"] == 2 for p in kernel.points)


def test_product_reduction_verifies(product):
    points = product.level.sample(3, SEED)
    report = verify_reduction(product.quotient, product.structure, product.action, points, seed=SEED)
    assert report.verdict == "pass"
    assert report.details["dimensions"] == {"level": 8, "orbit": 2, "reduced": 6}
    assert report.details["reduced"]["verdict"] == "pass"


def test_wrong_reduced_form_is_caught(product):
    q = product.quotient
    wrong = QuotientPresentation(
        level=q.level,
        chart=q.chart,
        projection=q.projection,
        eta=parse_vform(["d(s1) - 2*x2*d(x1)", "d(s2) - y2*d(y1)"], q.chart),
    )
    report = verify_reduction(wrong, product.structure, product.action, product.level.sample(2, SEED))
    assert report.verdict == "fail"
    assert report.witness.startswith("component 1")


def test_sl2_kernel_singles_out_bracket_algebra(sl2):
    points = sl2.level.sample(3, SEED)
    args = (sl2.structure, sl2.action, sl2.momentum, sl2.mu, sl2.level, points)
    assert check_kernel_identity(*args, reduction_algebra="bracket").verdict == "pass"
    assert check_kernel_identity(*args, reduction_algebra="isotropy").verdict == "fail"


def test_sl2_probe_recommends_bracket_algebra(sl2):
    samples = sl2.lifted_level.sample(3, SEED)
    report = probe_reduction_group(sl2.symplectisation, sl2.lifted_action, sl2.lifted_momentum, sl2.mu, samples)
    assert report.verdict == "pass"
    assert report.recommended == "bracket"
    assert report.quotient_dims["bracket"]["contact"] == 3
    assert report.quotient_dims["isotropy"]["contact"] == 4
    assert any("cannot be contact" in flag for flag in report.flags)


def test_lifted_level_set_splits_off_scale(sl2):
    samples = sl2.lifted_level.sample(2, SEED)
    report = check_lifted_level_set(sl2.level, sl2.lifted_level, sl2.symplectisation, samples)
    assert report.verdict == "pass"
    assert all(p.ranks["lifted"] == p.ranks["base"] + 1 for p in report.points)


def test_level_lemma_holds_on_the_symplectisation(sl2):
    samples = sl2.lifted_level.sample(2, SEED)
    report = check_ksymplectic_level_lemma(
        sl2.symplectisation, sl2.lifted_action, sl2.lifted_momentum, sl2.mu, samples, SEED
    )
    assert report.verdict == "pass"
    assert report.flags == []
    assert all("ray orbit" in p.checks for p in report.points)


def test_symplectic_conditions_cross_check_contact(sl2):
    samples = sl2.lifted_level.sample(2, SEED)
    report = check_symplectic_conditions(
        sl2.symplectisation,
        sl2.lifted_action,
        sl2.lifted_momentum,
        sl2.mu,
        samples,
        base_action=sl2.action,
        base_momentum=sl2.momentum,
    )
    assert report.cross_check == {"agree": True, "points": 2}


def test_gl2_flags_orbit_that_is_not_locally_free(gl2):
    points = gl2.level.sample(2, SEED)
    report = check_kernel_identity(gl2.structure, gl2.action, gl2.momentum, gl2.mu, gl2.level, points)
    assert report.verdict == "pass"
    assert any(flag.startswith("not locally free: 3 generators") for flag in report.flags)
