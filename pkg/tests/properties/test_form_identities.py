"""Identities of d, wedge, interior products and brackets on random polynomial data."""

import pytest
import sympy
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from components.exterior_calculus import Form, VectorField, d, iota, lie_bracket, lie_derivative, wedge
from components.symbolic_core import Chart

CHART = Chart("R3", ("x", "y", "z"))
X, Y, Z = CHART.symbols

PROPERTY_SETTINGS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])

monomials = st.tuples(
    st.integers(min_value=-3, max_value=3),
    st.integers(min_value=0, max_value=2),
    st.integers(min_value=0, max_value=2),
    st.integers(min_value=0, max_value=2),
)


@st.composite
def polynomials(draw, max_terms=3):
    terms = draw(st.lists(monomials, min_size=1, max_size=max_terms))
    return sum((c * X**a * Y**b * Z**e for c, a, b, e in terms), sympy.S.Zero)


@st.composite
def one_forms(draw):
    return Form.from_covector(CHART, [draw(polynomials()) for _ in range(3)])


@st.composite
def vector_fields(draw):
    return VectorField(CHART, tuple(draw(polynomials(max_terms=2)) for _ in range(3)))


@pytest.mark.slow
@PROPERTY_SETTINGS
@given(f=polynomials())
def test_d_squared_vanishes_on_functions(f):
    assert d(d(Form.function(CHART, f))).is_zero


@pytest.mark.slow
@PROPERTY_SETTINGS
@given(a=one_forms())
def test_d_squared_vanishes_on_one_forms(a):
    assert d(d(a)).is_zero


@PROPERTY_SETTINGS
@given(a=one_forms(), b=one_forms())
def test_wedge_of_one_forms_is_antisymmetric(a, b):
    assert wedge(a, b).equals(-wedge(b, a))
    assert wedge(a, a).is_zero


@pytest.mark.slow
@PROPERTY_SETTINGS
@given(a=one_forms(), b=one_forms())
def test_leibniz_rule(a, b):
    assert d(wedge(a, b)).equals(wedge(d(a), b) - wedge(a, d(b)))


@PROPERTY_SETTINGS
@given(V=vector_fields(), a=one_forms(), b=one_forms())
def test_interior_product_is_a_derivation(V, a, b):
    left = iota(V, wedge(a, b))
    right = wedge(iota(V, a), b) - wedge(a, iota(V, b))
    assert left.equals(right)


@pytest.mark.slow
@PROPERTY_SETTINGS
@given(V=vector_fields(), a=one_forms())
def test_lie_derivative_commutes_with_d(V, a):
    assert lie_derivative(V, d(a)).equals(d(lie_derivative(V, a)))


@PROPERTY_SETTINGS
@given(U=vector_fields(), V=vector_fields())
def test_bracket_is_antisymmetric(U, V):
    assert lie_bracket(U, V).equals(-lie_bracket(V, U))


@pytest.mark.slow
@PROPERTY_SETTINGS
@given(U=vector_fields(), V=vector_fields(), W=vector_fields())
def test_jacobi_identity_for_vector_fields(U, V, W):
    total = lie_bracket(U, lie_bracket(V, W)) + lie_bracket(V, lie_bracket(W, U)) + lie_bracket(W, lie_bracket(U, V))
    assert total.is_zero


# Sizes used when the calculus is signed off as a whole.
FULL_SETTINGS = settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@pytest.mark.slow
@FULL_SETTINGS
@given(f=polynomials(), a=one_forms())
def test_d_squared_vanishes_at_full_size(f, a):
    assert d(d(Form.function(CHART, f))).is_zero
    assert d(d(a)).is_zero


@pytest.mark.slow
@settings(FULL_SETTINGS, max_examples=500)
@given(V=vector_fields(), a=one_forms())
def test_cartan_formula_agrees_with_coordinates(V, a):
    coefficients = [a.coefficient((i,)) for i in range(3)]
    expected = Form.from_covector(
        CHART,
        [
            V.apply(coefficients[i]) + sum(c * sympy.diff(v, x) for c, v in zip(coefficients, V.components))
            for i, x in enumerate(CHART.symbols)
        ],
    )
    assert lie_derivative(V, a).equals(expected)
    assert lie_derivative(V, a).equals(iota(V, d(a)) + d(iota(V, a)))
