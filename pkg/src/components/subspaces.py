"""
Exact linear subspaces of a tangent space (or of a Lie algebra).

A subspace is stored by the reduced row echelon form of a spanning set, so
two Subspace values are equal exactly when they are the same subspace.
All arithmetic is over the rationals through sympy matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, List, Optional, Sequence, Tuple

import sympy
from sympy import Matrix, Rational

from utils.errors import EvaluationError, SemanticError


def _rational(value: Any) -> Rational:
    value = sympy.sympify(value)
    if not value.is_Rational:
        raise EvaluationError(f"exact linear algebra needs rational entries, got {value}")
    return Rational(value)


def rref_rows(rows: Sequence[Sequence[Any]], dim: int) -> Tuple[Tuple[Rational, ...], ...]:
    """Nonzero rows of the reduced row echelon form."""
    cleaned = [[_rational(c) for c in row] for row in rows]
    for row in cleaned:
        if len(row) != dim:
            raise SemanticError(f"vector of length {len(row)} in a {dim}-dimensional space")
    cleaned = [row for row in cleaned if any(c != 0 for c in row)]
    if not cleaned:
        return ()
    reduced, pivots = Matrix(cleaned).rref()
    return tuple(tuple(reduced.row(i)) for i in range(len(pivots)))


def nullspace_rows(rows: Sequence[Sequence[Any]], dim: int) -> List[List[Rational]]:
    """Basis of {v : row . v = 0 for every row}."""
    cleaned = [[_rational(c) for c in row] for row in rows if any(c != 0 for c in row)]
    if not cleaned:
        return [[Rational(int(i == j)) for j in range(dim)] for i in range(dim)]
    return [list(v) for v in Matrix(cleaned).nullspace()]


def matrix_rank(rows: Sequence[Sequence[Any]]) -> int:
    cleaned = [[_rational(c) for c in row] for row in rows]
    if not cleaned or not cleaned[0]:
        return 0
    return Matrix(cleaned).rank()


@dataclass(frozen=True)
class Subspace:
    """Subspace of a ``dim``-dimensional space with canonical basis."""

    dim: int
    basis: Tuple[Tuple[Rational, ...], ...] = ()
    point: Optional[Any] = field(default=None, compare=False, repr=False)

    @classmethod
    def span(cls, vectors: Iterable[Sequence[Any]], dim: int, point: Any = None) -> "Subspace":
        return cls(dim, rref_rows(list(vectors), dim), point)

    @classmethod
    def kernel(cls, rows: Iterable[Sequence[Any]], dim: int, point: Any = None) -> "Subspace":
        """Solutions of the homogeneous system with the given coefficient rows."""
        return cls.span(nullspace_rows(list(rows), dim), dim, point)

    @classmethod
    def full(cls, dim: int, point: Any = None) -> "Subspace":
        return cls.span([[int(i == j) for j in range(dim)] for i in range(dim)], dim, point)

    @classmethod
    def zero(cls, dim: int, point: Any = None) -> "Subspace":
        return cls(dim, (), point)

    @property
    def rank(self) -> int:
        return len(self.basis)

    def vectors(self) -> List[List[Rational]]:
        return [list(v) for v in self.basis]

    def annihilator(self) -> List[List[Rational]]:
        """Rows of a system whose solution set is this subspace."""
        if not self.basis:
            return [[Rational(int(i == j)) for j in range(self.dim)] for i in range(self.dim)]
        return nullspace_rows(self.basis, self.dim)

    def _check(self, other: "Subspace") -> None:
        if other.dim != self.dim:
            raise SemanticError(f"subspaces of dimension {self.dim} and {other.dim} mixed")

    def __add__(self, other: "Subspace") -> "Subspace":
        self._check(other)
        return Subspace.span(list(self.basis) + list(other.basis), self.dim, self.point)

    def intersect(self, *others: "Subspace") -> "Subspace":
        rows = list(self.annihilator())
        for other in others:
            self._check(other)
            rows.extend(other.annihilator())
        return Subspace.kernel(rows, self.dim, self.point)

    def contains(self, other: "Subspace") -> bool:
        self._check(other)
        return (self + other).rank == self.rank

    def contains_vector(self, vector: Sequence[Any]) -> bool:
        return self.contains(Subspace.span([vector], self.dim))

    def equals(self, other: "Subspace") -> bool:
        """Rank A = rank B = rank(A + B)."""
        self._check(other)
        return self.rank == other.rank == (self + other).rank

    def image(self, matrix: Sequence[Sequence[Any]], point: Any = None) -> "Subspace":
        """Image under a linear map given by its rows (target x source)."""
        m = Matrix([[_rational(c) for c in row] for row in matrix])
        if m.cols != self.dim:
            raise SemanticError(f"map with {m.cols} columns applied to a {self.dim}-space")
        vectors = [list(m * Matrix(v)) for v in self.basis]
        return Subspace.span(vectors, m.rows, point)

    def describe(self, names: Sequence[str]) -> List[str]:
        """Readable basis, e.g. ``["d/dq1 + d/dq2"]``."""
        described = []
        for vector in self.basis:
            terms = []
            for coefficient, name in zip(vector, names):
                if coefficient == 0:
                    continue
                label = f"d/d{name}"
                if coefficient == 1:
                    terms.append(label)
                elif coefficient == -1:
                    terms.append(f"-{label}")
                else:
                    terms.append(f"({coefficient})*{label}")
            described.append(" + ".join(terms).replace("+ -", "- "))
        return described


def intersect_all(subspaces: Sequence[Subspace], dim: int) -> Subspace:
    if not subspaces:
        return Subspace.full(dim)
    return subspaces[0].intersect(*subspaces[1:])


def sum_all(subspaces: Sequence[Subspace], dim: int) -> Subspace:
    vectors: List[Sequence[Rational]] = []
    for subspace in subspaces:
        vectors.extend(subspace.basis)
    return Subspace.span(vectors, dim)
