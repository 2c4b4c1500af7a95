"""Tests for charts, expression parsing, evaluation, equality and sampling."""

import pytest
import sympy
from sympy import Rational, Symbol

from components.symbolic_core import (
    Chart,
    Point,
    as_number,
    bind,
    configure_equality,
    differentiate,
    evaluate,
    expr_equal,
    normalize,
    parse_expression,
    sample_points,
    substitute,
)
from utils.errors import EvaluationError, NameResolutionError, ParseError, SamplingError, SemanticError

WAVE = Chart("wave", ("u", "pt", "px", "st", "sx"), ("rho", "tau", "k"))


def test_chart_rejects_repeated_and_reserved_names():
    with pytest.raises(SemanticError):
        Chart("bad", ("x", "y"), ("x",))
    with pytest.raises(SemanticError):
        Chart("bad", ("d", "y"))
    with pytest.raises(NameResolutionError):
        WAVE.index("q")


def test_chart_extended_puts_new_coordinates_first():
    extended = WAVE.extended("Rxwave", ("s",))
    assert extended.coords == ("s", "u", "pt", "px", "st", "sx")
    assert extended.params == WAVE.params


def test_parse_expression_knows_coordinates_parameters_and_xor_powers():
    expr = parse_expression("pt^2/(2*rho) - px^2/(2*tau) + k*st", WAVE)
    pt, rho = Symbol("pt"), Symbol("rho")
    assert sympy.diff(expr, pt) == pt / rho


def test_parse_expression_rejects_unknown_names():
    with pytest.raises(NameResolutionError):
        parse_expression("pt + q", WAVE)
    with pytest.raises(NameResolutionError):
        parse_expression("F(u)", WAVE)


def test_parse_expression_reports_syntax_errors():
    with pytest.raises(ParseError):
        parse_expression("pt + * u", WAVE)


def test_syntax_error_columns_point_into_the_written_text():
    with pytest.raises(ParseError) as info:
        parse_expression("pt + )", WAVE)
    assert info.value.column == 6
    with pytest.raises(ParseError) as info:
        parse_expression("2pt", WAVE)
    assert info.value.column in (1, 2, 3)


@pytest.mark.parametrize("text", ["pt^(1/2)", "pt^u", "pt^(-3/2)", "2^(1/2)"])
def test_only_integer_powers_are_accepted(text):
    with pytest.raises(ParseError, match="integer powers"):
        parse_expression(text, WAVE)


def test_integer_powers_stay_exact():
    expr = parse_expression("pt^(-2) + u^(4/2)", WAVE)
    point = Point(WAVE, {"u": 3, "pt": 2, "px": 0, "st": 0, "sx": 0, "rho": 1, "tau": 1, "k": 1})
    assert evaluate(expr, point) == Rational(37, 4)


def test_opaque_partials_are_named_and_bound():
    chart = Chart("strings", ("q1", "q2"))
    expr = parse_expression("C(q1 - q2)", chart, {"C": 1})
    derivative = differentiate(expr, "q1", chart)
    assert "C_d1" in str(derivative)
    binding = bind("C", ["v"], "v^2/2")
    point = Point(chart, {"q1": 3, "q2": 1})
    assert evaluate(derivative, point, {"C": binding}) == 2


def test_evaluate_reports_unbound_opaque_and_division_by_zero():
    chart = Chart("line", ("x",))
    point = Point(chart, {"x": 0})
    with pytest.raises(EvaluationError, match="unbound"):
        evaluate(parse_expression("C(x)", chart, {"C": 1}), point)
    with pytest.raises(EvaluationError, match="division by zero"):
        evaluate(parse_expression("1/x", chart), point)


def test_evaluate_is_exact_on_rationals():
    chart = Chart("line", ("x",))
    value = evaluate(parse_expression("x^2 + 1/3", chart), Point(chart, {"x": "1/2"}))
    assert value == Rational(7, 12)


def test_as_number_keeps_rationals_exact():
    assert as_number("3/4") == Rational(3, 4)
    assert as_number(2) == Rational(2)
    assert isinstance(as_number(0.5), float)
    with pytest.raises(SemanticError):
        as_number(True)
    with pytest.raises(SemanticError):
        as_number("pi")


def test_point_requires_every_name():
    with pytest.raises(SemanticError):
        Point(WAVE, {"u": 1})
    with pytest.raises(NameResolutionError):
        Point(Chart("line", ("x",)), {"x": 1, "y": 2})


def test_substitute_requires_all_coordinates():
    chart = Chart("plane", ("x", "y"))
    expr = parse_expression("x*y", chart)
    assert substitute(expr, {"x": 2, "y": Symbol("y")}, chart) == 2 * Symbol("y")
    with pytest.raises(NameResolutionError):
        substitute(expr, {"x": 2}, chart)


def test_expr_equal_normal_form_and_probabilistic():
    x = Symbol("x")
    assert expr_equal((x + 1) ** 2, x ** 2 + 2 * x + 1).method == "normal form"
    assert not expr_equal(x, x + 1)
    trig = expr_equal(sympy.sin(x) ** 2 + sympy.cos(x) ** 2, 1)
    assert trig
    assert trig.method in ("normal form", "probabilistic")


def test_configure_equality_validates_point_count():
    assert configure_equality({"equality": {"probabilistic_points": 16}}) == 16
    with pytest.raises(SemanticError):
        configure_equality({"equality": {"probabilistic_points": 0}})
    configure_equality(None)


def test_normalize_cancels_rational_functions():
    x = Symbol("x")
    assert normalize((x ** 2 - 1) / (x - 1)) == x + 1


def test_sample_points_is_deterministic_and_avoids_zero_sets():
    chart = Chart("plane", ("x", "y"))
    opens = [parse_expression("x", chart), parse_expression("y - 1", chart)]
    first = sample_points(chart, 20, seed=7, open_conditions=opens)
    second = sample_points(chart, 20, seed=7, open_conditions=opens)
    assert first == second
    for point in first:
        assert point["x"] != 0
        assert point["y"] != 1
        assert isinstance(point["x"], Rational)


def test_sample_points_respects_fixed_values():
    points = sample_points(WAVE, 3, seed=1, fixed={"rho": 1, "tau": 1, "k": "1/10"})
    assert all(p["k"] == Rational(1, 10) for p in points)


def test_sample_points_gives_up_on_impossible_open_conditions():
    chart = Chart("line", ("x",))
    with pytest.raises(SamplingError):
        sample_points(chart, 1, seed=0, open_conditions=[sympy.Integer(0)], max_attempts=10)
