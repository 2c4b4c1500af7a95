"""Tests for exact subspaces of tangent spaces and Lie algebras."""

import pytest
from sympy import Rational

from components.subspaces import Subspace, intersect_all, matrix_rank, nullspace_rows, sum_all
from utils.errors import EvaluationError, SemanticError


def test_span_is_canonical():
    a = Subspace.span([[1, 1, 0], [0, 1, 0]], 3)
    b = Subspace.span([[1, 0, 0], [0, 2, 0]], 3)
    assert a == b
    assert a.rank == 2


def test_kernel_and_annihilator_are_inverse():
    kernel = Subspace.kernel([[1, -1, 0]], 3)
    assert kernel.rank == 2
    assert kernel.contains_vector([1, 1, 0])
    assert kernel.contains_vector([0, 0, 5])
    assert Subspace.kernel(kernel.annihilator(), 3) == kernel


def test_intersection_and_sum():
    xy = Subspace.span([[1, 0, 0], [0, 1, 0]], 3)
    yz = Subspace.span([[0, 1, 0], [0, 0, 1]], 3)
    assert xy.intersect(yz) == Subspace.span([[0, 1, 0]], 3)
    assert (xy + yz) == Subspace.full(3)
    assert intersect_all([xy, yz], 3).rank == 1
    assert sum_all([xy, yz], 3).rank == 3
    assert intersect_all([], 3) == Subspace.full(3)


def test_zero_subspace():
    zero = Subspace.zero(4)
    assert zero.rank == 0
    assert Subspace.full(4).contains(zero)
    assert zero.annihilator() == [[Rational(int(i == j)) for j in range(4)] for i in range(4)]


def test_equals_ignores_spanning_set():
    a = Subspace.span([[1, 2], [2, 4]], 2)
    b = Subspace.span([[Rational(1, 2), 1]], 2)
    assert a.equals(b)
    assert not a.equals(Subspace.full(2))


def test_image_under_linear_map():
    plane = Subspace.span([[1, 0, 0], [0, 1, 0]], 3)
    projection = [[1, 0, 0], [0, 0, 1]]
    assert plane.image(projection) == Subspace.span([[1, 0]], 2)


def test_describe_uses_coordinate_names():
    diagonal = Subspace.span([[1, 1, 0]], 3)
    assert diagonal.describe(["q1", "q2", "sx"]) == ["d/dq1 + d/dq2"]
    signed = Subspace.span([[1, -1, 0]], 3)
    assert signed.describe(["q1", "q2", "sx"]) == ["d/dq1 - d/dq2"]


def test_mixed_dimensions_are_rejected():
    with pytest.raises(SemanticError):
        Subspace.full(2).intersect(Subspace.full(3))
    with pytest.raises(SemanticError):
        Subspace.span([[1, 2, 3]], 2)


def test_exact_arithmetic_rejects_floats():
    with pytest.raises(EvaluationError):
        Subspace.span([[0.5, 1]], 2)


def test_rank_and_nullspace_helpers():
    assert matrix_rank([[1, 2], [2, 4]]) == 1
    assert matrix_rank([]) == 0
    basis = nullspace_rows([[0, 0, 0]], 3)
    assert len(basis) == 3
