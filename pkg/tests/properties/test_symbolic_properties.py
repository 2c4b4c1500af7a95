"""Evaluation, equality and pullback properties on random polynomial data."""

import pytest
import sympy
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from components.exterior_calculus import Form, SmoothMap, VectorField, d, iota, lie_derivative, pullback
from components.symbolic_core import Chart, Point, evaluate, expr_equal

CHART = Chart("R3", ("x", "y", "z"))
X, Y, Z = CHART.symbols

PROPERTY_SETTINGS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])

coefficients = st.integers(min_value=-3, max_value=3)
rationals = st.fractions(min_value=-5, max_value=5, max_denominator=4)


@st.composite
def polynomials(draw, max_terms=3, max_exponent=2):
    exponents = st.integers(min_value=0, max_value=max_exponent)
    terms = draw(st.lists(st.tuples(coefficients, exponents, exponents, exponents), min_size=1, max_size=max_terms))
    return sum((c * X**a * Y**b * Z**e for c, a, b, e in terms), sympy.S.Zero)


@st.composite
def points(draw):
    return Point(CHART, {name: f"{v.numerator}/{v.denominator}" for name, v in zip(CHART.coords, draw(st.tuples(rationals, rationals, rationals)))})


@st.composite
def one_forms(draw):
    return Form.from_covector(CHART, [draw(polynomials()) for _ in range(3)])


@st.composite
def maps(draw):
    return SmoothMap(CHART, CHART, tuple(draw(polynomials(max_terms=2, max_exponent=1)) for _ in range(3)))


@PROPERTY_SETTINGS
@given(f=polynomials(), g=polynomials(), p=points())
def test_evaluation_is_a_ring_map(f, g, p):
    assert evaluate(f * g, p) == evaluate(f, p) * evaluate(g, p)
    assert evaluate(f + g, p) == evaluate(f, p) + evaluate(g, p)


@PROPERTY_SETTINGS
@given(f=polynomials(), g=polynomials())
def test_expanded_and_factored_forms_are_equal(f, g):
    product = f * g
    assert expr_equal(product, sympy.expand(product)).equal
    assert expr_equal(sympy.expand(product), product).equal
    assert not expr_equal(product + 1, product).equal


@pytest.mark.slow
@PROPERTY_SETTINGS
@given(V=st.tuples(polynomials(2), polynomials(2), polynomials(2)), a=one_forms())
def test_cartan_formula(V, a):
    field = VectorField(CHART, V)
    assert lie_derivative(field, a).equals(iota(field, d(a)) + d(iota(field, a)))


@pytest.mark.slow
@PROPERTY_SETTINGS
@given(f=maps(), a=one_forms())
def test_pullback_commutes_with_d(f, a):
    assert pullback(f, d(a)).equals(d(pullback(f, a)))


@pytest.mark.slow
@PROPERTY_SETTINGS
@given(f=maps(), g=maps(), a=one_forms())
def test_pullback_is_functorial(f, g, a):
    composite = SmoothMap(CHART, CHART, tuple(f.pull(c) for c in g.components))
    assert pullback(composite, a).equals(pullback(f, pullback(g, a)))


@PROPERTY_SETTINGS
@given(f=polynomials(), p=points())
def test_substitution_then_evaluation(f, p):
    shifted = f.xreplace({X: X + 1})
    moved = Point(CHART, {**p.values, "x": p["x"] + 1})
    assert evaluate(shifted, p) == evaluate(f, moved)
