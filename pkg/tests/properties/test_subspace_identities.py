"""Dimension identities of exact subspace arithmetic and Lie algebra brackets."""

from hypothesis import given, settings
from hypothesis import strategies as st

from components.lie_actions import LieAlgebra
from components.subspaces import Subspace

DIM = 4

vectors = st.lists(st.integers(min_value=-4, max_value=4), min_size=DIM, max_size=DIM)
subspaces = st.lists(vectors, min_size=0, max_size=3).map(lambda vs: Subspace.span(vs, DIM))


@settings(max_examples=60, deadline=None)
@given(U=subspaces, V=subspaces)
def test_grassmann_formula(U, V):
    assert (U + V).rank + U.intersect(V).rank == U.rank + V.rank


@settings(max_examples=60, deadline=None)
@given(U=subspaces, V=subspaces)
def test_sum_and_intersection_bound_both(U, V):
    assert (U + V).contains(U) and (U + V).contains(V)
    assert U.contains(U.intersect(V)) and V.contains(U.intersect(V))


@settings(max_examples=60, deadline=None)
@given(U=subspaces)
def test_annihilator_kernel_is_the_subspace(U):
    annihilator = U.annihilator()
    assert len(annihilator) == DIM - U.rank
    assert Subspace.kernel(annihilator, DIM).equals(U)


@settings(max_examples=60, deadline=None)
@given(U=subspaces)
def test_equal_spans_compare_equal(U):
    doubled = Subspace.span([[2 * c for c in v] for v in U.basis], DIM)
    assert doubled == U


@settings(max_examples=40, deadline=None)
@given(
    u=st.lists(st.integers(min_value=-3, max_value=3), min_size=2, max_size=2),
    v=st.lists(st.integers(min_value=-3, max_value=3), min_size=2, max_size=2),
)
def test_abelian_brackets_vanish(u, v):
    algebra = LieAlgebra.abelian(["a", "b"])
    assert algebra.bracket(u, v) == [0, 0]


@settings(max_examples=40, deadline=None)
@given(
    u=st.lists(st.integers(min_value=-3, max_value=3), min_size=3, max_size=3),
    v=st.lists(st.integers(min_value=-3, max_value=3), min_size=3, max_size=3),
    w=st.lists(st.integers(min_value=-3, max_value=3), min_size=3, max_size=3),
)
def test_jacobi_on_sl2_elements(u, v, w):
    sl2 = LieAlgebra.from_brackets(
        ["h", "e", "f"],
        {("h", "e"): {"e": 2}, ("h", "f"): {"f": -2}, ("e", "f"): {"h": 1}},
    )
    b = sl2.bracket
    total = [x + y + z for x, y, z in zip(b(u, b(v, w)), b(v, b(w, u)), b(w, b(u, v)))]
    assert total == [0, 0, 0]
    assert b(u, v) == [-c for c in b(v, u)]
