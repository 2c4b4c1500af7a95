"""Tests for forms, vector fields, maps and the Cartan calculus."""

import pytest
import sympy
from sympy import Rational, Symbol

from components.exterior_calculus import (
    Form,
    KVectorField,
    SmoothMap,
    VectorField,
    contract_kv,
    d,
    iota,
    lie_bracket,
    lie_derivative,
    parse_form,
    parse_vector_field,
    parse_vform,
    pullback,
    wedge,
)
from components.symbolic_core import Chart, Point
from utils.errors import ChartMismatchError, DegreeError, NameResolutionError, ParseError, SemanticError

R3 = Chart("r3", ("x", "y", "z"))
WAVE = Chart("wave", ("u", "pt", "px", "st", "sx"))


def test_parse_form_with_wedges_and_coefficients():
    form = parse_form("x*d(y)^d(z) - d(z)^d(x)", R3)
    assert form.degree == 2
    x = Symbol("x")
    assert form.coefficient((1, 2)) == x
    assert form.coefficient((0, 2)) == 1
    assert form.coefficient((2, 1)) == -x


def test_parse_form_rejects_mixed_degrees_and_unknown_coordinates():
    with pytest.raises(DegreeError):
        parse_form("d(x) + d(x)^d(y)", R3)
    with pytest.raises(NameResolutionError):
        parse_form("d(w)", R3)


def test_wedge_distributes_over_parenthesized_sums():
    left = parse_form("(d(x) + d(y))^d(z)", R3)
    right = parse_form("d(x)^(d(y) + d(z))", R3)
    assert left.equals(parse_form("d(x)^d(z) + d(y)^d(z)", R3))
    assert right.equals(parse_form("d(x)^d(y) + d(x)^d(z)", R3))
    assert left.degree == right.degree == 2
    assert not left.is_zero


def test_wedge_of_a_differential_with_itself_keeps_its_degree():
    form = parse_form("d(x)^d(x)", R3)
    assert form.degree == 2
    assert form.is_zero
    with pytest.raises(DegreeError):
        parse_form("d(x)^d(x) + d(y)", R3)


def test_parse_form_rejects_powers_of_differentials():
    with pytest.raises(ParseError, match="wedge of differentials"):
        parse_form("d(x)^y", R3)


def test_parse_form_reports_columns_in_the_written_text():
    with pytest.raises(ParseError) as info:
        parse_form("d(x)^d(y) + )", R3)
    assert info.value.column == 13
    assert "__d_" not in str(info.value)


def test_parse_vform_degree_mismatch():
    with pytest.raises(DegreeError, match="VForm degree mismatch"):
        parse_vform(["d(x)", "d(x)^d(y)"], R3)


def test_parse_vform_keeps_zero_components():
    eta = parse_vform(["d(x)", "0"], R3)
    assert eta.k == 2
    assert eta.degree == 1
    assert eta[1].is_zero


def test_d_squared_vanishes():
    form = parse_form("x*y*d(z) + z^2*d(x)", R3)
    assert d(d(form)).is_zero


def test_d_of_contact_form():
    eta = parse_form("d(st) - pt*d(u)", WAVE)
    assert d(eta).equals(parse_form("d(u)^d(pt)", WAVE))


def test_wedge_is_graded_antisymmetric():
    a = parse_form("d(x)", R3)
    b = parse_form("d(y)", R3)
    assert wedge(a, b).equals(-wedge(b, a))
    assert wedge(a, a).is_zero


def test_iota_contracts_first_slot():
    omega = parse_form("d(x)^d(y)", R3)
    X = VectorField.coordinate(R3, "x")
    assert iota(X, omega).equals(parse_form("d(y)", R3))


def test_cartan_formula_on_functions_and_forms():
    X = parse_vector_field({"x": "y", "y": "-x"}, R3)
    f = Form.function(R3, Symbol("x") ** 2 + Symbol("y") ** 2)
    assert lie_derivative(X, f).is_zero
    eta = parse_form("d(z) - y*d(x)", R3)
    expected = iota(X, d(eta)) + d(iota(X, eta))
    assert lie_derivative(X, eta).equals(expected)


def test_lie_bracket_of_rotation_and_scaling_vanishes():
    rotation = parse_vector_field({"x": "-y", "y": "x"}, R3)
    scaling = parse_vector_field({"x": "x", "y": "y"}, R3)
    assert lie_bracket(rotation, scaling).is_zero
    shear = parse_vector_field({"x": "y"}, R3)
    assert lie_bracket(shear, scaling).is_zero
    assert lie_bracket(VectorField.coordinate(R3, "x"), shear).is_zero
    assert lie_bracket(VectorField.coordinate(R3, "y"), shear).equals(VectorField.coordinate(R3, "x"))


def test_pullback_along_section():
    level = Chart("level", ("q", "pt"))
    target = Chart("ambient", ("q1", "q2", "p1t", "p2t"))
    embedding = SmoothMap.from_mapping(level, target, {"q1": "q", "q2": 0, "p1t": "pt/2", "p2t": "-pt/2"})
    theta = parse_form("p1t*d(q1) + p2t*d(q2)", target)
    assert pullback(embedding, theta).equals(parse_form("pt/2*d(q)", level))


def test_pullback_commutes_with_d():
    source = Chart("polar", ("r", "a"))
    f = SmoothMap(source, R3, (Symbol("r") * sympy.cos(Symbol("a")), Symbol("r") * sympy.sin(Symbol("a")), 0))
    theta = parse_form("x*d(y) - y*d(x)", R3)
    assert d(pullback(f, theta)).equals(pullback(f, d(theta)))


def test_smooth_map_validation():
    with pytest.raises(SemanticError):
        SmoothMap.from_mapping(R3, R3, {"x": "x"})
    with pytest.raises(NameResolutionError):
        SmoothMap.from_mapping(R3, R3, {"x": "x", "y": "y", "z": "z", "w": "0"})


def test_smooth_map_apply_and_jacobian_at_a_point():
    f = SmoothMap.from_mapping(R3, R3, {"x": "x + y", "y": "y^2", "z": "z"})
    point = Point(R3, {"x": 1, "y": 2, "z": 3})
    image = f.apply_at(point)
    assert image["x"] == 3
    assert image["y"] == 4
    assert f.jacobian_at(point)[1] == [0, 4, 0]


def test_covector_and_matrix_evaluation():
    point = Point(WAVE, {"u": 1, "pt": Rational(1, 2), "px": 0, "st": 0, "sx": 0})
    eta = parse_form("d(st) - pt*d(u)", WAVE)
    assert eta.covector_at(point) == [Rational(-1, 2), 0, 0, 1, 0]
    omega = d(eta).matrix_at(point)
    assert omega[0][1] == 1
    assert omega[1][0] == -1


def test_contract_kv_sums_component_contractions():
    eta = parse_vform(["d(st) - pt*d(u)", "d(sx) - px*d(u)"], WAVE)
    X = KVectorField((VectorField.coordinate(WAVE, "st"), VectorField.coordinate(WAVE, "sx")))
    assert contract_kv(X, eta).scalar == 2


def test_charts_must_match():
    with pytest.raises(ChartMismatchError):
        parse_form("d(x)", R3) + parse_form("d(u)", WAVE)


def test_vector_field_component_count():
    with pytest.raises(SemanticError):
        VectorField(R3, (1, 2))


def test_to_text_is_readable():
    assert parse_form("d(st) - pt*d(u)", WAVE).to_text() == "(-pt)*d(u) + d(st)"
