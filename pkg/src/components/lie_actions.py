"""
Lie algebras, infinitesimal actions, coadjoint calculus and momentum maps.

Groups only appear through their Lie algebras and fundamental vector
fields. Structure constants are exact rationals with
[e_i, e_j] = sum_l c[i][j][l] e_l, and the coadjoint action is
(ad*_xi mu)_j = sum_i,l xi^i c[i][j][l] mu_l.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import sympy
from sympy import Expr, Rational, S

from components.exterior_calculus import VectorField, VForm, lie_bracket, lie_derivative
from components.subspaces import Subspace, intersect_all
from components.symbolic_core import Chart, Point, as_number, evaluate, expr_equal, normalize
from components.structures import KContact, KSymplectic
from schemas.reports import IsotropyReport, StructureReport
from utils.errors import ChartMismatchError, InvariantBreach, SemanticError

logger = logging.getLogger(__name__)

Vector = Sequence[Any]


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    """A finite-dimensional Lie algebra given by its structure constants."""

    names: Tuple[str, ...]
    constants: Tuple[Tuple[Tuple[Rational, ...], ...], ...]

    def __post_init__(self) -> None:
        n = len(self.names)
        if len(set(self.names)) != n:
            raise SemanticError(f"repeated basis names in {list(self.names)}")
        c = tuple(
            tuple(tuple(Rational(as_number(v)) for v in self.constants[i][j]) for j in range(n))
            for i in range(n)
        )
        object.__setattr__(self, "constants", c)
        for i in range(n):
            for j in range(n):
                for l in range(n):
                    if c[i][j][l] != -c[j][i][l]:
                        raise SemanticError(
                            f"structure constants are not antisymmetric at "
                            f"[{self.names[i]}, {self.names[j]}]"
                        )
        for i in range(n):
            for j in range(n):
                for m in range(n):
                    for r in range(n):
                        jacobi = sum(
                            c[i][j][l] * c[l][m][r] + c[j][m][l] * c[l][i][r] + c[m][i][l] * c[l][j][r]
                            for l in range(n)
                        )
                        if jacobi != 0:
                            raise SemanticError(
                                f"Jacobi identity fails for ({self.names[i]}, {self.names[j]}, {self.names[m]})"
                            )

    @classmethod
    def from_brackets(
        cls,
        names: Sequence[str],
        brackets: Mapping[Tuple[str, str], Mapping[str, Any]],
    ) -> "LieAlgebra":
        """Build from the nonzero brackets, e.g. {("e1", "e2"): {"e2": 2}}."""
        n = len(names)
        index = {name: i for i, name in enumerate(names)}
        c = [[[S.Zero] * n for _ in range(n)] for _ in range(n)]
        for (a, b), result in brackets.items():
            for name in (a, b, *result):
                if name not in index:
                    raise SemanticError(f"unknown algebra element '{name}' in bracket [{a}, {b}]")
            i, j = index[a], index[b]
            if i == j:
                raise SemanticError(f"bracket [{a}, {a}] must vanish")
            for name, value in result.items():
                c[i][j][index[name]] = Rational(as_number(value))
                c[j][i][index[name]] = -Rational(as_number(value))
        return cls(tuple(names), tuple(tuple(tuple(row) for row in block) for block in c))

    @classmethod
    def abelian(cls, names: Sequence[str]) -> "LieAlgebra":
        return cls.from_brackets(names, {})

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def is_abelian(self) -> bool:
        return all(v == 0 for block in self.constants for row in block for v in row)

    def basis_vector(self, name: str) -> List[Rational]:
        return [Rational(int(n == name)) for n in self.names]

    def bracket(self, u: Vector, v: Vector) -> List[Any]:
        n = self.dim
        return [
            sum(u[i] * v[j] * self.constants[i][j][l] for i in range(n) for j in range(n))
            for l in range(n)
        ]

    def is_subalgebra(self, W: Subspace) -> bool:
        return all(
            W.contains_vector(self.bracket(u, v))
            for a, u in enumerate(W.basis)
            for v in W.basis[a + 1:]
        )

    def describe(self, W: Subspace) -> List[List[str]]:
        return [[str(c) for c in v] for v in W.basis]


def ad_star(algebra: LieAlgebra, xi: Vector, mu: Vector) -> List[Any]:
    """Coadjoint action: <ad*_xi mu, nu> = <mu, [xi, nu]>."""
    n = algebra.dim
    if len(xi) != n or len(mu) != n:
        raise SemanticError(f"ad* needs vectors of length {n}")
    c = algebra.constants
    return [
        normalize(sympy.sympify(sum(xi[i] * c[i][j][l] * mu[l] for i in range(n) for l in range(n))))
        for j in range(n)
    ]


def _ad_star_rows(algebra: LieAlgebra, mu: Vector) -> List[List[Any]]:
    """A[j][i] = (ad*_{e_i} mu)_j, so ad*_xi mu = A xi."""
    n = algebra.dim
    c = algebra.constants
    return [[sum(c[i][j][l] * mu[l] for l in range(n)) for i in range(n)] for j in range(n)]


@dataclass(frozen=True, eq=False)
class CoadjointValue:
    """k rows of exact rationals, row alpha an element of the dual algebra."""

    rows: Tuple[Tuple[Rational, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(Rational(as_number(v)) for v in row) for row in self.rows)
        if len({len(r) for r in rows}) > 1:
            raise SemanticError("coadjoint rows of different lengths")
        object.__setattr__(self, "rows", rows)

    @property
    def k(self) -> int:
        return len(self.rows)

    @property
    def zero_rows(self) -> List[int]:
        return [a for a, row in enumerate(self.rows) if all(v == 0 for v in row)]

    def as_lists(self) -> List[List[str]]:
        return [[str(v) for v in row] for row in self.rows]


# ---------------------------------------------------------------------------
# Actions and momentum maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InfAction:
    """Fundamental vector fields, one per basis element of the algebra."""

    algebra: LieAlgebra
    chart: Chart
    fields: Tuple[VectorField, ...]
    sign: int = -1

    def __post_init__(self) -> None:
        if len(self.fields) != self.algebra.dim:
            raise SemanticError(
                f"{len(self.fields)} fundamental fields for a {self.algebra.dim}-dimensional algebra"
            )
        if self.sign not in (1, -1):
            raise SemanticError(f"sign convention must be +1 or -1, got {self.sign}")
        for X in self.fields:
            if X.chart != self.chart:
                raise ChartMismatchError(f"fundamental field on {X.chart.name}, action on {self.chart.name}")

    def fundamental(self, xi: Vector) -> VectorField:
        """xi_M = sum_i xi^i (e_i)_M."""
        result = VectorField.zero(self.chart)
        for coefficient, X in zip(xi, self.fields):
            if coefficient != 0:
                result = result + X.scale(coefficient)
        return result

    def orbit_at(self, x: Point, subalgebra: Optional[Subspace] = None, bindings: Any = None) -> Subspace:
        """Span of the fundamental fields of a subalgebra (default: all of it) at x."""
        if subalgebra is None:
            vectors = [X.at(x, bindings) for X in self.fields]
        else:
            vectors = [self.fundamental(list(v)).at(x, bindings) for v in subalgebra.basis]
        return Subspace.span(vectors, self.chart.dim, x)

    def check_brackets(self) -> StructureReport:
        """[(e_i)_M, (e_j)_M] = sign * c_ij^l (e_l)_M."""
        symbolic: Dict[str, bool] = {}
        witness = None
        n = self.algebra.dim
        for i in range(n):
            for j in range(i + 1, n):
                lhs = lie_bracket(self.fields[i], self.fields[j])
                rhs = self.fundamental([self.sign * v for v in self.algebra.constants[i][j]])
                ok = all(expr_equal(a, b) for a, b in zip(lhs.components, rhs.components))
                label = f"[{self.algebra.names[i]}, {self.algebra.names[j]}]"
                symbolic[label] = ok
                if not ok and witness is None:
                    witness = f"{label}_M = {lhs.as_strings()} does not match sign {self.sign:+d} convention"
        return StructureReport.build("action brackets", [], symbolic, symbolic_witness=witness)

    def lift(self, target: Chart) -> "InfAction":
        """Same fields on a chart with extra leading coordinates, zero along them."""
        extra = target.dim - self.chart.dim
        if extra < 0 or target.coords[extra:] != self.chart.coords:
            raise ChartMismatchError(f"chart {target.name} does not extend {self.chart.name}")
        fields = tuple(VectorField(target, (S.Zero,) * extra + X.components) for X in self.fields)
        return InfAction(self.algebra, target, fields, self.sign)


def lift_action(action: InfAction, ks: KSymplectic) -> InfAction:
    """The action on R^x × M, trivial along the scale coordinate."""
    return action.lift(ks.chart)


@dataclass(frozen=True, eq=False)
class Momentum:
    """Entry (alpha, i) is <J_alpha, e_i>."""

    chart: Chart
    algebra: LieAlgebra
    rows: Tuple[Tuple[Expr, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(normalize(sympy.sympify(e)) for e in row) for row in self.rows)
        for row in rows:
            if len(row) != self.algebra.dim:
                raise SemanticError(f"momentum row of length {len(row)} for a {self.algebra.dim}-dimensional algebra")
        object.__setattr__(self, "rows", rows)

    @property
    def k(self) -> int:
        return len(self.rows)

    def at(self, x: Point, bindings: Any = None) -> List[List[Any]]:
        return [[evaluate(e, x, bindings) for e in row] for row in self.rows]

    def differential_at(self, alpha: int, x: Point, bindings: Any = None) -> List[List[Any]]:
        """Rows d<J_alpha, e_i> at x, one per basis element."""
        return [
            [evaluate(sympy.diff(e, c), x, bindings) for c in self.chart.symbols]
            for e in self.rows[alpha]
        ]

    def as_strings(self) -> List[List[str]]:
        return [[str(e) for e in row] for row in self.rows]


def momentum_from_action(action: InfAction, kc: KContact) -> Momentum:
    """<J_alpha, e_i> = iota((e_i)_M) eta^alpha."""
    if action.chart != kc.chart:
        raise ChartMismatchError(f"action on {action.chart.name}, structure on {kc.chart.name}")
    rows = tuple(tuple(_contract(X, form) for X in action.fields) for form in kc.eta)
    return Momentum(kc.chart, action.algebra, rows)


def momentum_from_potential(action: InfAction, ks: KSymplectic) -> Momentum:
    """<J_alpha, e_i> = iota((e_i)_P) Theta^alpha for an exact k-symplectic form."""
    if ks.potential is None:
        raise SemanticError("an exact momentum map needs a k-symplectic potential")
    if action.chart != ks.chart:
        raise ChartMismatchError(f"action on {action.chart.name}, structure on {ks.chart.name}")
    rows = tuple(tuple(_contract(X, form) for X in action.fields) for form in ks.potential)
    return Momentum(ks.chart, action.algebra, rows)


def _contract(X: VectorField, form: Any) -> Expr:
    return sum((c * form.coefficient((i,)) for i, c in enumerate(X.components)), S.Zero)


def extend_momentum(J: Momentum, ks: KSymplectic) -> Momentum:
    """(s, x) -> s J(x) on the symplectised chart."""
    if ks.scale_coordinate is None:
        raise SemanticError("extend_momentum needs a symplectised structure with a scale coordinate")
    s = ks.chart.coordinate(ks.scale_coordinate)
    rows = tuple(tuple(s * e for e in row) for row in J.rows)
    return Momentum(ks.chart, J.algebra, rows)


def check_invariance(action: InfAction, structure: Union[KContact, KSymplectic]) -> StructureReport:
    """Lie derivatives of the structure forms along every fundamental field vanish."""
    forms: List[Tuple[str, VForm]]
    if isinstance(structure, KContact):
        forms = [("eta", structure.eta)]
    else:
        forms = [("omega", structure.omega)]
        if structure.potential is not None:
            forms.append(("Theta", structure.potential))
    if action.chart != structure.chart:
        raise ChartMismatchError(f"action on {action.chart.name}, structure on {structure.chart.name}")
    symbolic: Dict[str, bool] = {}
    witness = None
    for name, X in zip(action.algebra.names, action.fields):
        for label, vform in forms:
            for alpha, form in enumerate(lie_derivative(X, vform)):
                ok = all(expr_equal(c, 0) for c in form.terms.values())
                key = f"L_{name} {label}^{alpha + 1}"
                symbolic[key] = ok
                if not ok and witness is None:
                    witness = f"{key} = {form.to_text()}"
    return StructureReport.build("invariance", [], symbolic, symbolic_witness=witness)


def check_equivariance_inf(J: Momentum, action: InfAction, sign: int = -1) -> StructureReport:
    """(e_i)_M <J_alpha, e_j> = sign (ad*_{e_i} J_alpha)_j for all i, j, alpha."""
    if J.chart != action.chart:
        raise ChartMismatchError(f"momentum on {J.chart.name}, action on {action.chart.name}")
    algebra = action.algebra
    symbolic: Dict[str, bool] = {}
    witness = None
    for i, (name, X) in enumerate(zip(algebra.names, action.fields)):
        xi = algebra.basis_vector(name)
        for alpha, row in enumerate(J.rows):
            rhs = ad_star(algebra, xi, list(row))
            for j, entry in enumerate(row):
                ok = bool(expr_equal(X.apply(entry), sign * rhs[j]))
                key = f"{name}(J_{alpha + 1},{algebra.names[j]})"
                symbolic[key] = ok
                if not ok and witness is None:
                    witness = f"{key}: {normalize(X.apply(entry))} vs {normalize(sign * rhs[j])}"
    return StructureReport.build("equivariance", [], symbolic, symbolic_witness=witness)


# ---------------------------------------------------------------------------
# Isotropy
# ---------------------------------------------------------------------------


def kernel_of(algebra: LieAlgebra, mu: Vector) -> Subspace:
    return Subspace.kernel([list(mu)], algebra.dim)


def isotropy_of(algebra: LieAlgebra, mu: Vector) -> Subspace:
    """{xi : ad*_xi mu = 0}."""
    return Subspace.kernel(_ad_star_rows(algebra, mu), algebra.dim)


def _projective_rows(algebra: LieAlgebra, mu: Vector) -> List[List[Any]]:
    """2x2 minors of (ad*_xi mu, mu), linear in xi; none for mu = 0."""
    n = algebra.dim
    A = _ad_star_rows(algebra, mu)
    return [
        [mu[l] * A[j][i] - mu[j] * A[l][i] for i in range(n)]
        for j in range(n)
        for l in range(j + 1, n)
    ]


def projective_isotropy_of(algebra: LieAlgebra, mu: Vector) -> Subspace:
    """{xi : ad*_xi mu ^ mu = 0}."""
    return Subspace.kernel(_projective_rows(algebra, mu), algebra.dim)


def reduction_subalgebra(algebra: LieAlgebra, mu: Vector) -> Subspace:
    """ker mu ∩ g_[mu]."""
    return kernel_of(algebra, mu).intersect(projective_isotropy_of(algebra, mu))


def willett_condition(algebra: LieAlgebra, mu: Vector) -> bool:
    """ker mu + g_mu = g."""
    return (kernel_of(algebra, mu) + isotropy_of(algebra, mu)).rank == algebra.dim


def _kernel_rows(algebra: LieAlgebra, mu: Vector) -> List[List[Any]]:
    return [list(mu)]


def _stacked(algebra: LieAlgebra, mus: Sequence[Vector], rows_for: Any) -> Subspace:
    """One nullspace of all the defining rows at once."""
    rows: List[List[Any]] = []
    for mu in mus:
        rows.extend(rows_for(algebra, mu))
    return Subspace.kernel(rows, algebra.dim)


@dataclass(frozen=True)
class IsotropyData:
    """Subalgebras attached to a k-covector."""

    kernels: Tuple[Subspace, ...]
    isotropies: Tuple[Subspace, ...]
    projective: Tuple[Subspace, ...]
    kernel: Subspace
    isotropy: Subspace
    projective_isotropy: Subspace
    k_mu: Subspace
    k_bracket_mu: Subspace
    k_bracket_rows: Tuple[Subspace, ...]
    zero_rows: Tuple[int, ...]

    def reduction_algebra(self, which: str = "bracket") -> Subspace:
        if which == "bracket":
            return self.k_bracket_mu
        if which == "isotropy":
            return self.k_mu
        raise SemanticError(f"unknown reduction algebra '{which}' (expected bracket or isotropy)")

    def row_algebra(self, alpha: int, which: str = "bracket") -> Subspace:
        if which == "bracket":
            return self.k_bracket_rows[alpha]
        return self.kernels[alpha].intersect(self.isotropies[alpha])


def isotropy_data(algebra: LieAlgebra, mu: CoadjointValue) -> IsotropyData:
    """
    Every subalgebra derived from mu.

    Raises:
        InvariantBreach: intersections computed row-stacked and pairwise disagree
    """
    n = algebra.dim
    for row in mu.rows:
        if len(row) != n:
            raise SemanticError(f"coadjoint row of length {len(row)} for a {n}-dimensional algebra")
    kernels = tuple(kernel_of(algebra, row) for row in mu.rows)
    isotropies = tuple(isotropy_of(algebra, row) for row in mu.rows)
    projective = tuple(projective_isotropy_of(algebra, row) for row in mu.rows)

    kernel = intersect_all(kernels, n)
    isotropy = intersect_all(isotropies, n)
    projective_isotropy = intersect_all(projective, n)
    for label, pairwise, rows_for in (
        ("ker mu", kernel, _kernel_rows),
        ("g_mu", isotropy, _ad_star_rows),
        ("g_[mu]", projective_isotropy, _projective_rows),
    ):
        stacked = _stacked(algebra, mu.rows, rows_for)
        if not stacked.equals(pairwise):
            raise InvariantBreach(f"{label}: stacked and pairwise intersections differ")

    k_mu = kernel.intersect(isotropy)
    k_bracket_mu = kernel.intersect(projective_isotropy)
    if not k_bracket_mu.contains(k_mu):
        raise InvariantBreach("k_mu is not contained in k_[mu]")
    return IsotropyData(
        kernels=kernels,
        isotropies=isotropies,
        projective=projective,
        kernel=kernel,
        isotropy=isotropy,
        projective_isotropy=projective_isotropy,
        k_mu=k_mu,
        k_bracket_mu=k_bracket_mu,
        k_bracket_rows=tuple(a.intersect(b) for a, b in zip(kernels, projective)),
        zero_rows=tuple(mu.zero_rows),
    )


def isotropy(algebra: LieAlgebra, mu: CoadjointValue) -> IsotropyReport:
    """Isotropy report for a k-covector."""
    data = isotropy_data(algebra, mu)
    describe = algebra.describe
    flags = [f"row {a + 1} is zero: read as the fixed value 0" for a in data.zero_rows]
    closed = algebra.is_subalgebra(data.k_bracket_mu)
    if not closed:
        flags.append("k_[mu] is not closed under the bracket")
    return IsotropyReport(
        dimension=algebra.dim,
        basis_names=list(algebra.names),
        per_row=[
            {
                "kernel": describe(data.kernels[a]),
                "isotropy": describe(data.isotropies[a]),
                "projective_isotropy": describe(data.projective[a]),
                "k_bracket_mu": describe(data.k_bracket_rows[a]),
            }
            for a in range(mu.k)
        ],
        kernel=describe(data.kernel),
        isotropy=describe(data.isotropy),
        projective_isotropy=describe(data.projective_isotropy),
        k_mu=describe(data.k_mu),
        k_bracket_mu=describe(data.k_bracket_mu),
        dims={
            "kernel": data.kernel.rank,
            "isotropy": data.isotropy.rank,
            "projective_isotropy": data.projective_isotropy.rank,
            "k_mu": data.k_mu.rank,
            "k_bracket_mu": data.k_bracket_mu.rank,
        },
        willett=[willett_condition(algebra, row) for row in mu.rows],
        bracket_closed=closed,
        flags=flags,
    )
