"""
k-contact and k-symplectic structures.

Covers the definitional checks at sample points, Reeb fields, flat maps,
orthogonal complements, canonical (Darboux) models and symplectisation.
Regularity is certified at finitely many exact rational sample points;
reports record the seed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, List, Mapping, Optional, Sequence, Tuple

import sympy
from sympy import Expr, Matrix, Rational, S

from components.exterior_calculus import (
    Form,
    KVectorField,
    VectorField,
    VForm,
    SmoothMap,
    d,
    iota,
    lie_bracket,
    pullback,
    wedge,
)
from components.subspaces import Subspace, matrix_rank
from components.symbolic_core import (
    Binding,
    Chart,
    Point,
    evaluate,
    expr_equal,
    normalize,
    sample_points,
)
from schemas.reports import PointCheck, StructureReport
from utils.errors import ChartMismatchError, DegreeError, SemanticError

logger = logging.getLogger(__name__)

Bindings = Optional[Mapping[str, Binding]]


@dataclass(frozen=True)
class DarbouxLayout:
    """Roles of the coordinates when eta^a = dz^a - p_i^a dq^i."""

    q: Tuple[str, ...]
    p: Tuple[Tuple[str, ...], ...]
    z: Tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def k(self) -> int:
        return len(self.z)


@dataclass(frozen=True, eq=False)
class KContact:
    """A (candidate) k-contact form on a chart."""

    eta: VForm
    polarization: Tuple[VectorField, ...] = ()
    open_conditions: Tuple[Expr, ...] = ()
    darboux: Optional[DarbouxLayout] = None

    def __post_init__(self) -> None:
        if self.eta.degree != 1:
            raise DegreeError(f"a k-contact form has degree 1, got {self.eta.degree}")
        object.__setattr__(self, "polarization", tuple(self.polarization))
        object.__setattr__(self, "open_conditions", tuple(sympy.sympify(c) for c in self.open_conditions))
        for V in self.polarization:
            if V.chart != self.chart:
                raise ChartMismatchError(f"polarization field on chart {V.chart.name}")

    @property
    def chart(self) -> Chart:
        return self.eta.chart

    @property
    def k(self) -> int:
        return self.eta.k

    @cached_property
    def d_eta(self) -> VForm:
        return d(self.eta)

    def sample(self, count: int, seed: int, fixed: Optional[Mapping[str, Any]] = None, **kwargs: Any) -> List[Point]:
        return sample_points(self.chart, count, seed, self.open_conditions, fixed, **kwargs)


@dataclass(frozen=True, eq=False)
class KSymplectic:
    """A (candidate) k-symplectic form, optionally exact with a potential."""

    omega: VForm
    potential: Optional[VForm] = None
    open_conditions: Tuple[Expr, ...] = ()
    base: Optional[KContact] = None
    scale_coordinate: Optional[str] = None
    lifted_reeb: Tuple[VectorField, ...] = ()
    euler: Optional[VectorField] = None

    def __post_init__(self) -> None:
        if self.omega.degree != 2:
            raise DegreeError(f"a k-symplectic form has degree 2, got {self.omega.degree}")
        if self.potential is not None and self.potential.degree != 1:
            raise DegreeError("a k-symplectic potential has degree 1")
        object.__setattr__(self, "open_conditions", tuple(sympy.sympify(c) for c in self.open_conditions))

    @property
    def chart(self) -> Chart:
        return self.omega.chart

    @property
    def k(self) -> int:
        return self.omega.k

    @property
    def projection(self) -> Optional[SmoothMap]:
        if self.base is None:
            return None
        return SmoothMap(self.chart, self.base.chart, self.base.chart.symbols)

    def sample(self, count: int, seed: int, fixed: Optional[Mapping[str, Any]] = None, **kwargs: Any) -> List[Point]:
        return sample_points(self.chart, count, seed, self.open_conditions, fixed, **kwargs)


@dataclass(frozen=True, eq=False)
class ReebFields:
    """Reeb vector fields with the way they were obtained."""

    fields: Tuple[VectorField, ...]
    method: str
    verified: bool
    brackets_vanish: bool

    def as_kvector(self) -> KVectorField:
        return KVectorField(self.fields)


# ---------------------------------------------------------------------------
# Pointwise linear algebra
# ---------------------------------------------------------------------------


def contraction_rows(a: VForm, x: Point, bindings: Bindings = None) -> List[List[Any]]:
    """Rows of the map v -> (iota_v a^alpha)(x), stacked over alpha."""
    if a.degree == 1:
        return [form.covector_at(x, bindings) for form in a]
    if a.degree == 2:
        rows: List[List[Any]] = []
        for form in a:
            rows.extend(form.matrix_at(x, bindings))
        return rows
    raise DegreeError(f"kernel of a degree {a.degree} form")


def kernel_at(a: VForm, x: Point, bindings: Bindings = None) -> Subspace:
    """Exact kernel of a vector-valued 1- or 2-form at a point."""
    if x.chart != a.chart:
        raise ChartMismatchError(f"point on {x.chart.name}, form on {a.chart.name}")
    return Subspace.kernel(contraction_rows(a, x, bindings), a.chart.dim, x)


def _orthogonal(two_form: VForm, W: Subspace, x: Point, bindings: Bindings) -> Subspace:
    rows: List[List[Any]] = []
    for form in two_form:
        matrix = Matrix(form.matrix_at(x, bindings))
        for w in W.basis:
            rows.append(list(Matrix([list(w)]) * matrix))
    return Subspace.kernel(rows, two_form.chart.dim, x)


def orthogonal_deta(kc: KContact, W: Subspace, x: Point, bindings: Bindings = None) -> Subspace:
    """{v : d eta^a(w, v) = 0 for all w in W and all a}."""
    return _orthogonal(kc.d_eta, W, x, bindings)


def orthogonal_k(ks: KSymplectic, W: Subspace, x: Point, bindings: Bindings = None) -> Subspace:
    """{v : omega^a(w, v) = 0 for all w in W and all a}."""
    return _orthogonal(ks.omega, W, x, bindings)


def _describe(vector: Sequence[Any], chart: Chart) -> str:
    return Subspace.span([vector], chart.dim).describe(chart.coords)[0]


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


def verify_kcontact(
    kc: KContact,
    samples: Sequence[Point],
    seed: Optional[int] = None,
    bindings: Bindings = None,
) -> StructureReport:
    """Check the three defining conditions (and the polarization) at every sample."""
    n, k = kc.chart.dim, kc.k
    symbolic = {}
    for i, V in enumerate(kc.polarization):
        symbolic[f"polarization {i} in ker eta"] = all(
            expr_equal(iota(V, form).scalar, 0) for form in kc.eta
        )
    brackets = [
        lie_bracket(V, W)
        for a, V in enumerate(kc.polarization)
        for W in kc.polarization[a + 1:]
    ]

    points = []
    for index, x in enumerate(samples):
        ker_eta = kernel_at(kc.eta, x, bindings)
        ker_deta = kernel_at(kc.d_eta, x, bindings)
        both = ker_eta.intersect(ker_deta)
        checks = {
            "rank ker eta": ker_eta.rank == n - k,
            "rank ker d eta": ker_deta.rank == k,
            "trivial intersection": both.rank == 0,
            "ker eta nonzero": ker_eta.rank > 0,
        }
        witness = None
        if not checks["rank ker eta"]:
            witness = f"rank ker η = {ker_eta.rank} ≠ {n - k}"
        elif not checks["rank ker d eta"]:
            witness = f"rank ker dη = {ker_deta.rank} ≠ {k}"
        elif not checks["trivial intersection"]:
            witness = f"ker η ∩ ker dη contains {_describe(both.basis[0], kc.chart)}"
        elif not checks["ker eta nonzero"]:
            witness = "ker η = 0"
        if kc.polarization and witness is None:
            span = Subspace.span([V.at(x, bindings) for V in kc.polarization], n)
            involutive = all(span.contains_vector(B.at(x, bindings)) for B in brackets)
            checks["polarization involutive"] = involutive
            if not involutive:
                witness = "polarization bracket leaves the span"
        points.append(
            PointCheck(
                index=index,
                point=x.as_strings(),
                ranks={"ker eta": ker_eta.rank, "ker d eta": ker_deta.rank, "intersection": both.rank},
                checks=checks,
                verdict="fail" if witness else "pass",
                witness=witness,
            )
        )
    report = StructureReport.build("kcontact", points, symbolic, seed=seed)
    logger.debug(f"verify_kcontact on {kc.chart.name}: {report.verdict}")
    return report


def verify_ksymplectic(
    ks: KSymplectic,
    samples: Sequence[Point],
    seed: Optional[int] = None,
    bindings: Bindings = None,
) -> StructureReport:
    """d omega = 0 and d Theta = omega symbolically; ker omega = 0 at samples."""
    symbolic = {"d omega = 0": all(form.is_zero for form in d(ks.omega))}
    if ks.potential is not None:
        symbolic["d Theta = omega"] = d(ks.potential).equals(ks.omega)
    points = []
    for index, x in enumerate(samples):
        kernel = kernel_at(ks.omega, x, bindings)
        witness = None
        if kernel.rank:
            witness = f"rank ker ω = {kernel.rank} ≠ 0, contains {_describe(kernel.basis[0], ks.chart)}"
        points.append(
            PointCheck(
                index=index,
                point=x.as_strings(),
                ranks={"ker omega": kernel.rank},
                checks={"nondegenerate": kernel.rank == 0},
                verdict="fail" if witness else "pass",
                witness=witness,
            )
        )
    return StructureReport.build("ksymplectic", points, symbolic, seed=seed)


# ---------------------------------------------------------------------------
# Reeb fields
# ---------------------------------------------------------------------------


def _reeb_system(kc: KContact) -> Tuple[List[List[Expr]], int]:
    """Coefficient rows: k rows for eta, then columns of every d eta^b."""
    n = kc.chart.dim
    rows: List[List[Expr]] = []
    for form in kc.eta:
        rows.append([form.coefficient((i,)) for i in range(n)])
    for form in kc.d_eta:
        for j in range(n):
            rows.append([form.coefficient((i, j)) for i in range(n)])
    return rows, kc.k


def reeb_at(kc: KContact, x: Point, bindings: Bindings = None) -> List[List[Rational]]:
    """Pointwise Reeb vectors at x by an exact linear solve."""
    rows, k = _reeb_system(kc)
    numeric = Matrix([[evaluate(c, x, bindings) for c in row] for row in rows])
    vectors = []
    for alpha in range(k):
        rhs = Matrix([int(r == alpha) for r in range(k)] + [0] * (len(rows) - k))
        solution, params = numeric.gauss_jordan_solve(rhs)
        if params.shape[0]:
            raise SemanticError("Reeb fields are not unique: the form is not k-contact at this point")
        vectors.append(list(solution))
    return vectors


def solve_reeb(
    kc: KContact,
    point: Optional[Point] = None,
    seed: int = 0,
    bindings: Bindings = None,
) -> ReebFields:
    """
    Solve iota(R_a) eta^b = delta_a^b and iota(R_a) d eta = 0 symbolically.

    Independent equations are selected at a sample point, the square system
    is solved with Expr entries and the solution is checked against every
    equation. An inconclusive symbolic solve returns ``method="pointwise only"``
    with no fields; use ``reeb_at`` then.
    """
    n = kc.chart.dim
    rows, k = _reeb_system(kc)
    x = point if point is not None else kc.sample(1, seed)[0]
    numeric = [[evaluate(c, x, bindings) for c in row] for row in rows]

    chosen: List[int] = []
    for r in range(len(rows)):
        if matrix_rank([numeric[i] for i in chosen + [r]]) == len(chosen) + 1:
            chosen.append(r)
        if len(chosen) == n:
            break
    if len(chosen) < n:
        logger.warning(f"Reeb system on {kc.chart.name} has rank {len(chosen)} < {n}")
        return ReebFields((), "pointwise only", False, False)

    square = Matrix([rows[r] for r in chosen])
    fields = []
    try:
        for alpha in range(k):
            rhs = Matrix([S.One if r == alpha else S.Zero for r in chosen])
            solution = square.LUsolve(rhs)
            fields.append(VectorField(kc.chart, tuple(normalize(c) for c in solution)))
    except (ValueError, ZeroDivisionError) as e:
        logger.warning(f"Symbolic Reeb solve failed on {kc.chart.name}: {e}")
        return ReebFields((), "pointwise only", False, False)

    verified = all(
        expr_equal(iota(R, eta_b).scalar, int(a == b))
        for a, R in enumerate(fields)
        for b, eta_b in enumerate(kc.eta)
    ) and all(
        all(expr_equal(c, 0) for c in iota(R, deta_b).terms.values())
        for R in fields
        for deta_b in kc.d_eta
    )
    if not verified:
        logger.warning(f"Symbolic Reeb solution on {kc.chart.name} failed verification")
        return ReebFields((), "pointwise only", False, False)
    brackets_vanish = all(
        lie_bracket(R, Q).is_zero or all(expr_equal(c, 0) for c in lie_bracket(R, Q).components)
        for a, R in enumerate(fields)
        for Q in fields[a + 1:]
    )
    return ReebFields(tuple(fields), "symbolic", True, brackets_vanish)


# ---------------------------------------------------------------------------
# Flat maps
# ---------------------------------------------------------------------------


def flat_eta(kc: KContact, X: KVectorField) -> Tuple[Form, Expr]:
    """(sum_a iota(X_a) d eta^a, sum_a iota(X_a) eta^a)."""
    if X.k != kc.k:
        raise SemanticError(f"k mismatch: {X.k} fields for a {kc.k}-contact form")
    one_form = Form.zero(kc.chart, 1)
    scalar: Expr = S.Zero
    for X_a, eta_a, deta_a in zip(X, kc.eta, kc.d_eta):
        one_form = one_form + iota(X_a, deta_a)
        scalar += iota(X_a, eta_a).scalar
    return one_form, normalize(scalar)


def flat_omega(ks: KSymplectic, X: KVectorField) -> Form:
    """sum_a iota(X_a) omega^a."""
    if X.k != ks.k:
        raise SemanticError(f"k mismatch: {X.k} fields for a {ks.k}-symplectic form")
    result = Form.zero(ks.chart, 1)
    for X_a, omega_a in zip(X, ks.omega):
        result = result + iota(X_a, omega_a)
    return result


# ---------------------------------------------------------------------------
# Symplectisation and canonical models
# ---------------------------------------------------------------------------


def symplectize(kc: KContact, coordinate: str = "s") -> KSymplectic:
    """
    Exact k-symplectic structure on R^x × M.

    Theta = s pr*eta, omega = d Theta, lifted Reeb fields (0, R_a) and the
    Euler field s d/ds are attached; s != 0 becomes an open condition.
    """
    M = kc.chart
    while coordinate in M.coords or coordinate in M.params:
        coordinate += "_"
    P = M.extended(f"Rx{M.name}", (coordinate,))
    s = P.coordinate(coordinate)
    projection = SmoothMap(P, M, M.symbols)
    theta = VForm(tuple(pullback(projection, form).scale(s) for form in kc.eta))
    omega = d(theta)
    reeb = solve_reeb(kc)
    lifted = tuple(VectorField(P, (S.Zero,) + R.components) for R in reeb.fields)
    euler = VectorField.from_mapping(P, {coordinate: s})
    return KSymplectic(
        omega=omega,
        potential=theta,
        open_conditions=(s,) + tuple(kc.open_conditions),
        base=kc,
        scale_coordinate=coordinate,
        lifted_reeb=lifted,
        euler=euler,
    )


def canonical_kcontact(n: int, k: int) -> KContact:
    """Darboux model: eta^a = dz^a - p_i^a dq^i with polarization <d/dp_i^a>."""
    q = tuple(f"q{i}" for i in range(1, n + 1))
    p = tuple(tuple(f"p{i}_{a}" for a in range(1, k + 1)) for i in range(1, n + 1))
    z = tuple(f"z{a}" for a in range(1, k + 1))
    chart = Chart(f"canonical_{n}_{k}_contact", q + tuple(c for row in p for c in row) + z)
    forms = []
    for a in range(k):
        form = Form.differential(chart, z[a])
        for i in range(n):
            form = form - Form.differential(chart, q[i]).scale(chart.coordinate(p[i][a]))
        forms.append(form)
    polarization = tuple(VectorField.coordinate(chart, c) for row in p for c in row)
    return KContact(VForm(tuple(forms)), polarization=polarization, darboux=DarbouxLayout(q, p, z))


def canonical_ksymplectic(n: int, k: int, convention: str = "dtheta") -> KSymplectic:
    """
    Canonical model on the k-cotangent bundle.

    ``"dtheta"``: Theta = p dq and omega = d Theta = -dq^dp.
    ``"darboux"``: Theta = -p dq and omega = dq^dp.
    """
    if convention not in ("dtheta", "darboux"):
        raise SemanticError(f"unknown sign convention '{convention}'")
    q = tuple(f"q{i}" for i in range(1, n + 1))
    p = tuple(tuple(f"p{i}_{a}" for a in range(1, k + 1)) for i in range(1, n + 1))
    chart = Chart(f"canonical_{n}_{k}_symplectic", q + tuple(c for row in p for c in row))
    sign = 1 if convention == "dtheta" else -1
    thetas = []
    for a in range(k):
        form = Form.zero(chart, 1)
        for i in range(n):
            form = form + Form.differential(chart, q[i]).scale(sign * chart.coordinate(p[i][a]))
        thetas.append(form)
    theta = VForm(tuple(thetas))
    return KSymplectic(omega=d(theta), potential=theta)


def top_form(kc: KContact, alpha: int = 0) -> Form:
    """eta^a ^ (d eta^a)^m for the largest m fitting the chart."""
    result = kc.eta[alpha]
    power = 0
    while result.degree + 2 <= kc.chart.dim:
        result = wedge(result, kc.d_eta[alpha])
        power += 1
    return result
