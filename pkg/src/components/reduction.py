"""
Momentum level sets and the pointwise checks behind k-contact reduction.

Level sets are preimages of the rays R^x mu^alpha. Every tangent space,
orbit and kernel is computed exactly at rational sample points, and
subspace equalities are decided by rank. Level-set charts are graphs over
a subset of the parent coordinates, so a parent point restricts to its
chart point and a parent vector restricts to its chart vector.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import sympy
from sympy import Expr, S

from components.exterior_calculus import SmoothMap, VForm, VectorField, d, pullback
from components.lie_actions import (
    CoadjointValue,
    InfAction,
    IsotropyData,
    Momentum,
    isotropy_data,
)
from components.structures import (
    KContact,
    KSymplectic,
    kernel_at,
    orthogonal_deta,
    orthogonal_k,
    solve_reeb,
    verify_kcontact,
)
from components.subspaces import Subspace, intersect_all, sum_all
from components.symbolic_core import (
    Chart,
    Point,
    evaluate,
    expr_equal,
    normalize,
    sample_points,
)
from schemas.reports import (
    ConditionPoint,
    ConditionReport,
    PointCheck,
    ProbePoint,
    ProbeReport,
    StructureReport,
    SubspaceSummary,
)
from utils.errors import ChartMismatchError, OffLevelSetError, SemanticError

logger = logging.getLogger(__name__)

FIXED_VALUE_FLAG = "row {row} of mu is zero: the ray is read as the fixed value 0"


# ---------------------------------------------------------------------------
# Level sets
# ---------------------------------------------------------------------------


def level_equations(J: Momentum, mu: CoadjointValue) -> Tuple[List[Expr], List[Expr], List[str]]:
    """Defining equalities, open conditions and flags of J^{-1}(R^x mu)."""
    if mu.k != J.k:
        raise SemanticError(f"mu has {mu.k} rows, the momentum map has k = {J.k}")
    n = J.algebra.dim
    equalities: List[Expr] = []
    opens: List[Expr] = []
    flags: List[str] = []
    for alpha, (row, m) in enumerate(zip(J.rows, mu.rows)):
        if len(m) != n:
            raise SemanticError(f"mu row {alpha + 1} has length {len(m)}, the algebra has dimension {n}")
        if all(v == 0 for v in m):
            flags.append(FIXED_VALUE_FLAG.format(row=alpha + 1))
            equalities.extend(row)
            continue
        for j in range(n):
            for l in range(j + 1, n):
                equalities.append(normalize(row[j] * m[l] - row[l] * m[j]))
        distinguished = next(i for i, v in enumerate(m) if v != 0)
        opens.append(row[distinguished])
    equalities = [e for e in (normalize(e) for e in equalities) if e != 0]
    return equalities, opens, flags


def _single_row(J: Momentum, mu: CoadjointValue, alpha: int) -> Tuple[Momentum, CoadjointValue]:
    return Momentum(J.chart, J.algebra, (J.rows[alpha],)), CoadjointValue((mu.rows[alpha],))


@dataclass(frozen=True, eq=False)
class LevelSet:
    """J^{-1}(R^{x k} mu) with an optional graph parametrization."""

    momentum: Momentum
    mu: CoadjointValue
    equalities: Tuple[Expr, ...]
    open_conditions: Tuple[Expr, ...]
    chart: Optional[Chart] = None
    embedding: Optional[SmoothMap] = None
    chart_open_conditions: Tuple[Expr, ...] = ()
    flags: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def parent(self) -> Chart:
        return self.momentum.chart

    def contains(self, x: Point, bindings: Any = None) -> bool:
        if x.chart != self.parent:
            return False
        return all(evaluate(e, x, bindings) == 0 for e in self.equalities) and all(
            evaluate(c, x, bindings) != 0 for c in self.open_conditions
        )

    def require(self, x: Point, bindings: Any = None) -> None:
        if not self.contains(x, bindings):
            raise OffLevelSetError(f"point {x.as_strings()} is not on the level set")

    def chart_point(self, x: Point) -> Point:
        if self.chart is None:
            raise SemanticError("level set has no parametrizing chart")
        return x.restrict(self.chart)

    def sample(
        self,
        count: int,
        seed: int,
        fixed: Optional[Mapping[str, Any]] = None,
        bindings: Any = None,
        **kwargs: Any,
    ) -> List[Point]:
        """Parent points on the level set, drawn on the parametrizing chart."""
        if self.chart is None or self.embedding is None:
            raise SemanticError("sampling a level set needs a parametrizing chart and embedding")
        fixed = {k: v for k, v in (fixed or {}).items() if k in self.chart.coords + self.chart.params}
        points = sample_points(self.chart, count, seed, self.chart_open_conditions, fixed, bindings, **kwargs)
        return [self.embedding.apply_at(y, bindings) for y in points]

    def tangent_at(self, x: Point, bindings: Any = None) -> Subspace:
        return tangent_level_set(self.momentum, self.mu, x, bindings, level=self)

    def embedding_image_at(self, x: Point, bindings: Any = None) -> Subspace:
        """Image of the differential of the embedding at x."""
        if self.embedding is None:
            raise SemanticError("level set has no embedding")
        y = self.chart_point(x)
        jac = self.embedding.jacobian_at(y, bindings)
        columns = [[row[c] for row in jac] for c in range(self.chart.dim)]
        return Subspace.span(columns, self.parent.dim, x)

    def restrict_vector(self, vector: Sequence[Any]) -> List[Any]:
        """Chart components of a parent vector tangent to the level set."""
        return [vector[self.parent.index(c)] for c in self.chart.coords]

    def restrict_subspace(self, W: Subspace) -> Subspace:
        return Subspace.span([self.restrict_vector(v) for v in W.basis], self.chart.dim)

    def certify(self, samples: Sequence[Point], seed: Optional[int] = None, bindings: Any = None) -> StructureReport:
        """Weak regularity at samples: tangent rank equals the chart dimension and contains di."""
        points = []
        for index, x in enumerate(samples):
            tangent = self.tangent_at(x, bindings)
            image = self.embedding_image_at(x, bindings)
            checks = {
                "tangent rank = chart dim": tangent.rank == self.chart.dim,
                "embedding tangent": tangent.contains(image) and image.rank == self.chart.dim,
            }
            witness = None
            if not checks["tangent rank = chart dim"]:
                witness = f"tangent rank {tangent.rank} ≠ chart dimension {self.chart.dim}"
            elif not checks["embedding tangent"]:
                witness = f"embedding differential has rank {image.rank} or leaves the tangent space"
            points.append(
                PointCheck(
                    index=index,
                    point=x.as_strings(),
                    ranks={"tangent": tangent.rank, "embedding": image.rank},
                    checks=checks,
                    verdict="fail" if witness else "pass",
                    witness=witness,
                )
            )
        return StructureReport.build("level set", points, seed=seed, flags=list(self.flags))

    def lift(self, ks: KSymplectic, J_lifted: Momentum) -> "LevelSet":
        """The level set of s J on R^x × M, parametrized by (s, chart)."""
        if ks.scale_coordinate is None:
            raise SemanticError("lifting a level set needs a symplectised structure")
        chart = embedding = None
        if self.chart is not None and self.embedding is not None:
            s = ks.scale_coordinate
            chart = self.chart.extended(f"Rx{self.chart.name}", (s,))
            embedding = SmoothMap(chart, ks.chart, (chart.coordinate(s),) + self.embedding.components)
        return level_set_of(
            J_lifted,
            self.mu,
            chart,
            embedding,
            open_conditions=tuple(self.chart_open_conditions) + ((ks.chart.coordinate(ks.scale_coordinate),)),
        )


def level_set_of(
    J: Momentum,
    mu: CoadjointValue,
    chart: Optional[Chart] = None,
    embedding: Optional[SmoothMap] = None,
    open_conditions: Sequence[Expr] = (),
) -> LevelSet:
    """
    Build and validate the level set of J through the rays of mu.

    Raises:
        SemanticError: the parametrization is not a graph over parent
            coordinates or a defining equality does not pull back to zero
    """
    equalities, opens, flags = level_equations(J, mu)
    parent = J.chart
    if chart is None and not equalities:
        chart = parent
        embedding = SmoothMap.identity(parent)
    if chart is not None:
        if embedding is None or embedding.source != chart or embedding.target != parent:
            raise SemanticError(f"level-set chart {chart.name} needs an embedding into {parent.name}")
        for c in chart.coords:
            if c not in parent.coords or not expr_equal(embedding.components[parent.index(c)], chart.coordinate(c)):
                raise SemanticError(
                    f"level-set chart {chart.name} must be a graph over parent coordinates; '{c}' is not kept"
                )
        for e in equalities:
            pulled = embedding.pull(e)
            if not expr_equal(pulled, 0):
                raise SemanticError(f"parametrization fails validation: {e} pulls back to {normalize(pulled)}")
        chart_opens = tuple(normalize(embedding.pull(c)) for c in opens) + tuple(
            sympy.sympify(c) for c in open_conditions
        )
    else:
        chart_opens = tuple(sympy.sympify(c) for c in open_conditions)
    return LevelSet(
        momentum=J,
        mu=mu,
        equalities=tuple(equalities),
        open_conditions=tuple(opens),
        chart=chart,
        embedding=embedding,
        chart_open_conditions=chart_opens,
        flags=tuple(flags),
    )


def _level_rows(J: Momentum, mu: CoadjointValue, x: Point, bindings: Any) -> List[List[Any]]:
    rows: List[List[Any]] = []
    n = J.algebra.dim
    for alpha, m in enumerate(mu.rows):
        D = J.differential_at(alpha, x, bindings)
        if all(v == 0 for v in m):
            rows.extend(D)
            continue
        for j in range(n):
            for l in range(j + 1, n):
                rows.append([m[l] * a - m[j] * b for a, b in zip(D[j], D[l])])
    return rows


def tangent_level_set(
    J: Momentum,
    mu: CoadjointValue,
    x: Point,
    bindings: Any = None,
    level: Optional[LevelSet] = None,
) -> Subspace:
    """
    {v : T_x J_alpha(v) in R mu^alpha for all alpha}.

    Raises:
        OffLevelSetError: x violates a defining equality or open condition
    """
    level = level or level_set_of(J, mu)
    level.require(x, bindings)
    return Subspace.kernel(_level_rows(J, mu, x, bindings), J.chart.dim, x)


def tangent_row_level_set(J: Momentum, mu: CoadjointValue, alpha: int, x: Point, bindings: Any = None) -> Subspace:
    """Tangent space of the single-row level set J_alpha^{-1}(R^x mu^alpha)."""
    J_a, mu_a = _single_row(J, mu, alpha)
    return Subspace.kernel(_level_rows(J_a, mu_a, x, bindings), J.chart.dim, x)


def fixed_value_tangent(J: Momentum, x: Point, bindings: Any = None) -> Subspace:
    """Tangent space of J^{-1}(J(x)): the kernel of T_x J."""
    rows: List[List[Any]] = []
    for alpha in range(J.k):
        rows.extend(J.differential_at(alpha, x, bindings))
    return Subspace.kernel(rows, J.chart.dim, x)


def orbit_tangent(action: InfAction, subalgebra: Subspace, x: Point, bindings: Any = None) -> Subspace:
    """Span of the fundamental fields of a subalgebra at x."""
    return action.orbit_at(x, subalgebra, bindings)


def _summary(W: Subspace, chart: Chart) -> SubspaceSummary:
    return SubspaceSummary(rank=W.rank, basis=W.describe(chart.coords))


# ---------------------------------------------------------------------------
# Reduction conditions
# ---------------------------------------------------------------------------


def _conditions_at(
    index: int,
    x: Point,
    J: Momentum,
    mu: CoadjointValue,
    action: InfAction,
    data: IsotropyData,
    row_kernels: Sequence[Subspace],
    kernel_label: str,
    reduction_algebra: str,
    bindings: Any,
    extra: Optional[Dict[str, Subspace]] = None,
) -> ConditionPoint:
    chart = J.chart
    tangent = tangent_level_set(J, mu, x, bindings)
    orbit = orbit_tangent(action, data.reduction_algebra(reduction_algebra), x, bindings)
    subspaces = {"T level": tangent, "T(K x)": orbit}
    equalities: Dict[str, bool] = {}
    pieces = []
    for alpha in range(mu.k):
        row_tangent = tangent_row_level_set(J, mu, alpha, x, bindings)
        row_orbit = orbit_tangent(action, data.row_algebra(alpha), x, bindings)
        subspaces[f"T level_{alpha + 1}"] = row_tangent
        subspaces[f"{kernel_label}_{alpha + 1}"] = row_kernels[alpha]
        subspaces[f"T(K_{alpha + 1} x)"] = row_orbit
        rhs = sum_all([row_kernels[alpha], tangent, row_orbit], chart.dim)
        equalities[f"first condition, row {alpha + 1}"] = row_tangent.equals(rhs)
        pieces.append(row_kernels[alpha] + row_orbit)
    rhs = intersect_all(pieces + [tangent], chart.dim)
    subspaces["second condition rhs"] = rhs
    equalities["second condition"] = orbit.equals(rhs)
    for label, W in (extra or {}).items():
        subspaces[label] = W
    return ConditionPoint(
        index=index,
        point=x.as_strings(),
        subspaces={k: _summary(W, chart) for k, W in subspaces.items()},
        equalities=equalities,
        verdict="pass" if all(equalities.values()) else "fail",
    )


def check_contact_conditions(
    kc: KContact,
    action: InfAction,
    J: Momentum,
    mu: CoadjointValue,
    samples: Sequence[Point],
    seed: Optional[int] = None,
    bindings: Any = None,
    reduction_algebra: str = "bracket",
) -> ConditionReport:
    """Both sufficient reduction conditions with ker eta^a ∩ ker d eta^a at every sample."""
    if action.chart != kc.chart or J.chart != kc.chart:
        raise ChartMismatchError("structure, action and momentum must share a chart")
    data = isotropy_data(J.algebra, mu)
    points = []
    for index, x in enumerate(samples):
        row_kernels = [
            kernel_at(VForm((eta_a,)), x, bindings).intersect(kernel_at(VForm((deta_a,)), x, bindings))
            for eta_a, deta_a in zip(kc.eta, kc.d_eta)
        ]
        points.append(
            _conditions_at(index, x, J, mu, action, data, row_kernels, "ker eta ∩ ker d eta", reduction_algebra, bindings)
        )
    flags = [FIXED_VALUE_FLAG.format(row=a + 1) for a in data.zero_rows]
    report = ConditionReport.build("contact", points, seed=seed, reduction_algebra=reduction_algebra, flags=flags)
    logger.debug(f"Contact conditions on {kc.chart.name}: {report.verdict}")
    return report


def check_symplectic_conditions(
    ks: KSymplectic,
    action: InfAction,
    J: Momentum,
    mu: CoadjointValue,
    samples: Sequence[Point],
    seed: Optional[int] = None,
    bindings: Any = None,
    reduction_algebra: str = "bracket",
    base_action: Optional[InfAction] = None,
    base_momentum: Optional[Momentum] = None,
) -> ConditionReport:
    """
    The symplectic form of the reduction conditions, with ker omega^a.

    ``reduction_algebra="isotropy"`` puts k_mu instead of k_[mu] on the
    orbit side of the second condition. When the structure is a
    symplectisation and the base action and momentum are given, each
    sample (s, x) is also checked with the contact checker at x and the
    verdicts are compared.
    """
    if action.chart != ks.chart or J.chart != ks.chart:
        raise ChartMismatchError("structure, action and momentum must share a chart")
    data = isotropy_data(J.algebra, mu)
    points = []
    agreements: List[bool] = []
    for index, p in enumerate(samples):
        row_kernels = [kernel_at(VForm((omega_a,)), p, bindings) for omega_a in ks.omega]
        tangent = tangent_level_set(J, mu, p, bindings)
        null = tangent.intersect(orthogonal_k(ks, tangent, p, bindings))
        orbit = orbit_tangent(action, data.reduction_algebra(reduction_algebra), p, bindings)
        point = _conditions_at(
            index, p, J, mu, action, data, row_kernels, "ker omega", reduction_algebra, bindings,
            extra={"ker j*omega": null},
        )
        point.equalities["orbit inside ker j*omega"] = null.contains(orbit)
        point.verdict = "pass" if all(point.equalities.values()) else "fail"
        points.append(point)
        if ks.base is not None and base_action is not None and base_momentum is not None:
            x = p.restrict(ks.base.chart)
            base = check_contact_conditions(
                ks.base, base_action, base_momentum, mu, [x], bindings=bindings, reduction_algebra=reduction_algebra
            )
            first_second = {k: v for k, v in point.equalities.items() if k != "orbit inside ker j*omega"}
            agreements.append(base.points[0].equalities == first_second)
    flags = [FIXED_VALUE_FLAG.format(row=a + 1) for a in data.zero_rows]
    cross = None
    if agreements:
        cross = {"agree": all(agreements), "points": len(agreements)}
        if not all(agreements):
            flags.append("contact and symplectic checkers disagree")
    return ConditionReport.build(
        "symplectic", points, seed=seed, reduction_algebra=reduction_algebra, flags=flags, cross_check=cross
    )


# ---------------------------------------------------------------------------
# Kernel identity and lemmas
# ---------------------------------------------------------------------------


def check_kernel_identity(
    kc: KContact,
    action: InfAction,
    J: Momentum,
    mu: CoadjointValue,
    level: LevelSet,
    samples: Sequence[Point],
    seed: Optional[int] = None,
    bindings: Any = None,
    reduction_algebra: str = "bracket",
) -> StructureReport:
    """
    ker i*eta ∩ ker i*d eta equals the orbit of the reduction algebra.

    The contact level-set lemma (orbit of g_[mu] = T(Gx) ∩ T level, and
    T level = (T(Gx) ∩ ker eta)^{⊥ d eta}) is recorded per sample in
    ``details["contact_lemma"]``.
    """
    if level.chart is None or level.embedding is None:
        raise SemanticError("the kernel identity needs a parametrized level set")
    data = isotropy_data(J.algebra, mu)
    algebra = data.reduction_algebra(reduction_algebra)
    pulled = pullback(level.embedding, kc.eta)
    pulled_d = d(pulled)
    points = []
    lemma = []
    flags = list(level.flags)
    for index, x in enumerate(samples):
        level.require(x, bindings)
        y = level.chart_point(x)
        left = kernel_at(pulled, y, bindings).intersect(kernel_at(pulled_d, y, bindings))
        orbit = orbit_tangent(action, algebra, x, bindings)
        tangent = tangent_level_set(J, mu, x, bindings, level=level)
        inside = tangent.contains(orbit)
        right = level.restrict_subspace(orbit) if inside else None
        holds = right is not None and left.equals(right)
        witness = None
        if not inside:
            witness = "orbit of the reduction algebra leaves the level set"
        elif not holds:
            witness = f"rank ker i*η ∩ ker i*dη = {left.rank}, orbit rank = {right.rank}"
        points.append(
            PointCheck(
                index=index,
                point=x.as_strings(),
                ranks={"kernel": left.rank, "orbit": orbit.rank},
                checks={"identity": holds},
                verdict="pass" if holds else "fail",
                witness=witness,
            )
        )
        full_orbit = action.orbit_at(x, None, bindings)
        projective_orbit = orbit_tangent(action, data.projective_isotropy, x, bindings)
        ker_eta = kernel_at(kc.eta, x, bindings)
        W = full_orbit.intersect(ker_eta)
        item1 = projective_orbit.equals(full_orbit.intersect(tangent))
        item2 = tangent.equals(orthogonal_deta(kc, W, x, bindings))
        lemma.append({"index": index, "orbit": item1, "orthogonal": item2})
        if not (item1 and item2):
            flags.append(f"sample {index}: contact level-set lemma fails (orbit {item1}, orthogonal {item2})")
    generators = algebra.rank
    ranks = {p.ranks["orbit"] for p in points}
    if ranks and max(ranks) < generators:
        flags.append(f"not locally free: {generators} generators span an orbit of rank {max(ranks)}")
    return StructureReport.build(
        "kernel identity",
        points,
        seed=seed,
        flags=flags,
        details={"reduction_algebra": reduction_algebra, "contact_lemma": lemma},
    )


def check_ksymplectic_level_lemma(
    ks: KSymplectic,
    action: InfAction,
    J: Momentum,
    mu: CoadjointValue,
    samples: Sequence[Point],
    seed: Optional[int] = None,
    bindings: Any = None,
) -> StructureReport:
    """
    Orthogonality characterizations of momentum level sets.

    Fixed value (any k): T J^{-1}(J(p)) = T(Gp)^{⊥k} and the orbit of the
    isotropy of J(p) is T(Gp) ∩ T J^{-1}(J(p)). Ray (k = 1, exact form):
    T J^{-1}(R^x mu) = (T(Gp) ∩ ker Theta)^{⊥ω} and the orbit of g_[mu] is
    T(Gp) ∩ T J^{-1}(R^x mu).
    """
    ray = ks.k == 1 and ks.potential is not None
    flags = [] if ray else ["ray characterization checked only for exact structures with k = 1"]
    points = []
    for index, p in enumerate(samples):
        orbit = action.orbit_at(p, None, bindings)
        fixed = fixed_value_tangent(J, p, bindings)
        value = CoadjointValue(tuple(tuple(row) for row in J.at(p, bindings)))
        fixed_isotropy = isotropy_data(J.algebra, value).isotropy
        checks = {
            "fixed value orthogonal": fixed.equals(orthogonal_k(ks, orbit, p, bindings)),
            "fixed value orbit": orbit_tangent(action, fixed_isotropy, p, bindings).equals(orbit.intersect(fixed)),
        }
        if ray:
            tangent = tangent_level_set(J, mu, p, bindings)
            W = orbit.intersect(kernel_at(ks.potential, p, bindings))
            projective = isotropy_data(J.algebra, mu).projective_isotropy
            checks["ray orthogonal"] = tangent.equals(orthogonal_k(ks, W, p, bindings))
            checks["ray orbit"] = orbit_tangent(action, projective, p, bindings).equals(orbit.intersect(tangent))
        failed = [name for name, ok in checks.items() if not ok]
        points.append(
            PointCheck(
                index=index,
                point=p.as_strings(),
                ranks={"orbit": orbit.rank, "fixed level": fixed.rank},
                checks=checks,
                verdict="fail" if failed else "pass",
                witness=f"{failed[0]} fails" if failed else None,
            )
        )
    return StructureReport.build("k-symplectic level lemma", points, seed=seed, flags=flags)


def check_lifted_level_set(
    level: LevelSet,
    lifted: LevelSet,
    ks: KSymplectic,
    samples: Sequence[Point],
    seed: Optional[int] = None,
    bindings: Any = None,
) -> StructureReport:
    """T_(s,x) of the lifted level set = <d/ds> ⊕ T_x of the base level set."""
    if ks.scale_coordinate is None:
        raise SemanticError("the lifted level set lives on a symplectised structure")
    s_index = ks.chart.index(ks.scale_coordinate)
    points = []
    for index, p in enumerate(samples):
        x = p.restrict(level.parent)
        base = level.tangent_at(x, bindings)
        lifted_base = [[0] * (s_index + 1) + list(v) for v in base.basis]
        scale = [[int(i == s_index) for i in range(ks.chart.dim)]]
        expected = Subspace.span(scale + lifted_base, ks.chart.dim)
        tangent = lifted.tangent_at(p, bindings)
        ok = tangent.equals(expected)
        points.append(
            PointCheck(
                index=index,
                point=p.as_strings(),
                ranks={"lifted": tangent.rank, "base": base.rank},
                checks={"direct sum": ok},
                verdict="pass" if ok else "fail",
                witness=None if ok else f"lifted rank {tangent.rank} ≠ 1 + {base.rank}",
            )
        )
    return StructureReport.build("lifted level set", points, seed=seed)


# ---------------------------------------------------------------------------
# Quotients
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuotientPresentation:
    """Reduced chart with the projection from the level-set chart and the claimed reduced form."""

    level: LevelSet
    chart: Chart
    projection: SmoothMap
    eta: VForm
    section: Optional[SmoothMap] = None
    hamiltonian: Optional[Expr] = None
    open_conditions: Tuple[Expr, ...] = ()

    def __post_init__(self) -> None:
        if self.level.chart is None:
            raise SemanticError("a quotient presentation needs a parametrized level set")
        if self.projection.source != self.level.chart or self.projection.target != self.chart:
            raise ChartMismatchError(
                f"projection must map {self.level.chart.name} to {self.chart.name}"
            )
        if self.eta.chart != self.chart:
            raise ChartMismatchError(f"reduced form on {self.eta.chart.name}, reduced chart {self.chart.name}")
        if self.section is not None and (
            self.section.source != self.chart or self.section.target != self.level.chart
        ):
            raise ChartMismatchError(f"section must map {self.chart.name} to {self.level.chart.name}")

    @property
    def structure(self) -> KContact:
        return KContact(self.eta, open_conditions=self.open_conditions)


def verify_reduction(
    q: QuotientPresentation,
    kc: KContact,
    action: InfAction,
    samples: Sequence[Point],
    seed: Optional[int] = None,
    bindings: Any = None,
    reduction_algebra: str = "bracket",
) -> StructureReport:
    """
    Check a claimed reduced k-contact form against the level set.

    Verifies pi* eta_red = i* eta symbolically, the reduced form at the
    projected samples, the dimension count against a constant orbit rank,
    and, with a section, that projected Reeb fields are the reduced ones.
    """
    level = q.level
    data = isotropy_data(level.momentum.algebra, level.mu)
    algebra = data.reduction_algebra(reduction_algebra)

    pulled_red = pullback(q.projection, q.eta)
    pulled = pullback(level.embedding, kc.eta)
    symbolic: Dict[str, bool] = {}
    witness = None
    for alpha, (a, b) in enumerate(zip(pulled_red, pulled)):
        ok = a.equals(b)
        symbolic[f"pi* eta_red^{alpha + 1} = i* eta^{alpha + 1}"] = ok
        if not ok and witness is None:
            witness = f"component {alpha + 1}: pi* eta_red = {a.to_text()} but i* eta = {b.to_text()}"

    flags = list(level.flags)
    orbit_ranks = []
    points = []
    reduced_points = []
    for index, x in enumerate(samples):
        level.require(x, bindings)
        y = level.chart_point(x)
        orbit = orbit_tangent(action, algebra, x, bindings)
        orbit_ranks.append(orbit.rank)
        jac = q.projection.jacobian_at(y, bindings)
        fibre = Subspace.kernel(jac, level.chart.dim)
        along_fibres = fibre.contains(level.restrict_subspace(orbit))
        surjective = Subspace.span(jac, level.chart.dim).rank == q.chart.dim
        checks = {"orbit in fibres": along_fibres, "projection submersive": surjective}
        failed = [k for k, ok in checks.items() if not ok]
        points.append(
            PointCheck(
                index=index,
                point=x.as_strings(),
                ranks={"orbit": orbit.rank, "fibre": fibre.rank},
                checks=checks,
                verdict="fail" if failed else "pass",
                witness=f"{failed[0]} fails" if failed else None,
            )
        )
        reduced_points.append(q.projection.apply_at(y, bindings))

    details: Dict[str, Any] = {}
    if orbit_ranks:
        if len(set(orbit_ranks)) > 1:
            symbolic["constant orbit rank"] = False
            witness = witness or f"non-free locus: orbit ranks {sorted(set(orbit_ranks))} at samples"
        else:
            rank = orbit_ranks[0]
            if algebra.rank > rank:
                flags.append(f"not locally free: {algebra.rank} generators span an orbit of rank {rank}")
            expected = level.chart.dim - rank
            symbolic["dimension"] = q.chart.dim == expected
            details["dimensions"] = {"level": level.chart.dim, "orbit": rank, "reduced": q.chart.dim}
            if q.chart.dim != expected and witness is None:
                witness = f"reduced dimension {q.chart.dim} ≠ {level.chart.dim} - {rank}"

    reduced = verify_kcontact(q.structure, reduced_points, seed=seed, bindings=bindings)
    details["reduced"] = {"verdict": reduced.verdict, "witness": reduced.witness}
    symbolic["reduced form is k-contact"] = reduced.passed
    if not reduced.passed and witness is None:
        witness = f"reduced form: {reduced.witness}"

    if q.section is not None:
        consistent, message = _reeb_consistency(q, kc)
        details["reeb"] = message
        symbolic["Reeb fields project"] = consistent
        if not consistent and witness is None:
            witness = message

    return StructureReport.build(
        "reduction",
        points,
        symbolic,
        seed=seed,
        symbolic_witness=witness,
        flags=flags,
        details=details,
    )


def _reeb_consistency(q: QuotientPresentation, kc: KContact) -> Tuple[bool, str]:
    level = q.level
    parent = solve_reeb(kc)
    reduced = solve_reeb(q.structure)
    if not parent.fields or not reduced.fields:
        return True, "Reeb fields available pointwise only; consistency skipped"
    J_pi = q.projection.jacobian()
    for alpha, (R, R_red) in enumerate(zip(parent.fields, reduced.fields)):
        tangent = all(expr_equal(level.embedding.pull(R.apply(e)), 0) for e in level.equalities)
        if not tangent:
            return False, f"Reeb field {alpha + 1} is not tangent to the level set"
        R_hat = sympy.Matrix([level.embedding.pull(R.component(c)) for c in level.chart.coords])
        projected = J_pi * R_hat
        for j, coord in enumerate(q.chart.coords):
            on_section = q.section.pull(projected[j])
            if not expr_equal(on_section, R_red.component(coord)):
                return False, (
                    f"projected Reeb field {alpha + 1} has {coord}-component {normalize(on_section)}, "
                    f"reduced Reeb field has {R_red.component(coord)}"
                )
    return True, "projected Reeb fields match the reduced ones"


# ---------------------------------------------------------------------------
# Reduction-group probe
# ---------------------------------------------------------------------------


def probe_reduction_group(
    ks: KSymplectic,
    action: InfAction,
    J: Momentum,
    mu: CoadjointValue,
    samples: Sequence[Point],
    seed: Optional[int] = None,
    bindings: Any = None,
) -> ProbeReport:
    """Compare ker j*omega on the ray level set with the orbits of k_mu and k_[mu]."""
    if ks.potential is None:
        raise SemanticError("the reduction-group probe needs an exact k-symplectic form")
    data = isotropy_data(J.algebra, mu)
    points = []
    level_dims = set()
    bracket_ranks = set()
    isotropy_ranks = set()
    for index, p in enumerate(samples):
        tangent = tangent_level_set(J, mu, p, bindings)
        null = tangent.intersect(orthogonal_k(ks, tangent, p, bindings))
        bracket = orbit_tangent(action, data.k_bracket_mu, p, bindings)
        iso = orbit_tangent(action, data.k_mu, p, bindings)
        by_bracket = null.equals(bracket)
        by_isotropy = null.equals(iso)
        matches = {
            (True, True): "both",
            (True, False): "bracket",
            (False, True): "isotropy",
            (False, False): "neither",
        }[(by_bracket, by_isotropy)]
        level_dims.add(tangent.rank)
        bracket_ranks.add(bracket.rank)
        isotropy_ranks.add(iso.rank)
        points.append(
            ProbePoint(
                index=index,
                point=p.as_strings(),
                level_dim=tangent.rank,
                kernel_rank=null.rank,
                bracket_orbit_rank=bracket.rank,
                isotropy_orbit_rank=iso.rank,
                matches=matches,
                strictly_contains_isotropy=null.contains(iso) and null.rank > iso.rank,
            )
        )
    found = {p.matches for p in points}
    if found <= {"both"}:
        recommended = "both"
    elif found <= {"bracket", "both"}:
        recommended = "bracket"
    elif found <= {"isotropy", "both"}:
        recommended = "isotropy"
    else:
        recommended = "neither"

    flags: List[str] = []
    quotient_dims: Dict[str, Dict[str, Any]] = {}
    if len(level_dims) == 1:
        level_dim = level_dims.pop()
        for label, ranks in (("bracket", bracket_ranks), ("isotropy", isotropy_ranks)):
            if len(ranks) != 1:
                flags.append(f"{label} orbit rank varies over samples")
                continue
            dim = level_dim - next(iter(ranks))
            entry: Dict[str, Any] = {"symplectic": dim, "symplectic_parity": "even" if dim % 2 == 0 else "odd"}
            if ks.scale_coordinate is not None:
                contact = dim - 1
                entry["contact"] = contact
                entry["contact_parity"] = "odd" if contact % 2 else "even"
                if ks.k == 1 and contact % 2 == 0:
                    flags.append(f"{label} quotient of dimension {contact} cannot be contact")
            if ks.k == 1 and dim % 2:
                flags.append(f"{label} quotient of dimension {dim} cannot be symplectic")
            quotient_dims[label] = entry
    verdict = "pass" if points and all(p.matches in ("bracket", "both") for p in points) else "fail"
    return ProbeReport(
        verdict=verdict,
        samples=len(points),
        seed=seed,
        recommended=recommended,
        points=points,
        quotient_dims=quotient_dims,
        flags=flags,
    )
