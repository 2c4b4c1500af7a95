"""
Hamiltonian k-vector fields of k-contact and k-symplectic systems.

Field equations are solved symbolically with the undetermined gauge part
represented by opaque functions of all chart coordinates, one per gauge
slot ``X<alpha>.<coord>``. Numerical work (section integration for k = 2
and flow comparisons) is float64 and lives at the bottom of the module.
"""

from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from sympy import Expr, Matrix, S, Symbol

from components.exterior_calculus import (
    Form,
    KVectorField,
    SmoothMap,
    VectorField,
    d,
    lie_bracket,
    lie_derivative,
)
from components.lie_actions import InfAction, isotropy_data
from components.reduction import LevelSet, QuotientPresentation
from components.structures import (
    KContact,
    KSymplectic,
    ReebFields,
    flat_eta,
    flat_omega,
    solve_reeb,
)
from components.subspaces import matrix_rank
from components.symbolic_core import (
    Binding,
    Chart,
    Point,
    apply_bindings,
    evaluate,
    expr_equal,
    normalize,
    opaque_function,
)
from schemas.reports import StructureReport
from utils.errors import (
    CFLViolation,
    ChartMismatchError,
    GaugeError,
    IntegrationError,
    SemanticError,
)

logger = logging.getLogger(__name__)

Structure = Union[KContact, KSymplectic]
Bindings = Optional[Mapping[str, Binding]]

SLOT_PATTERN = re.compile(r"^X(\d+)\.([A-Za-z_][A-Za-z0-9_]*)$")


# ---------------------------------------------------------------------------
# Systems and Hamiltonian k-vector fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HamiltonianSystem:
    """A structure with a Hamiltonian function on its chart."""

    structure: Structure
    h: Expr
    bindings: Optional[Mapping[str, Binding]] = None

    def __post_init__(self) -> None:
        h = normalize(sympy.sympify(self.h))
        names = set(self.chart.coords + self.chart.params)
        stray = sorted(s.name for s in h.free_symbols if s.name not in names)
        if stray:
            raise ChartMismatchError(f"Hamiltonian uses {stray}, not names of chart {self.chart.name}")
        object.__setattr__(self, "h", h)

    @property
    def chart(self) -> Chart:
        return self.structure.chart

    @property
    def k(self) -> int:
        return self.structure.k

    @property
    def is_contact(self) -> bool:
        return isinstance(self.structure, KContact)

    @cached_property
    def reeb(self) -> ReebFields:
        if not self.is_contact:
            raise SemanticError("Reeb fields belong to k-contact systems")
        return solve_reeb(self.structure, bindings=self.bindings)


@dataclass(frozen=True, eq=False)
class HamKVF:
    """A Hamiltonian k-vector field with its gauge bookkeeping."""

    fields: KVectorField
    method: str
    gauge: Mapping[str, Expr]
    free_slots: Tuple[str, ...]
    constraints: Tuple[str, ...]
    gauge_dimension: int

    @property
    def chart(self) -> Chart:
        return self.fields.chart

    def __getitem__(self, alpha: int) -> VectorField:
        return self.fields[alpha]

    def as_strings(self) -> List[Dict[str, str]]:
        return self.fields.as_strings()


def slot_name(alpha: int, coord: str) -> str:
    return f"X{alpha + 1}.{coord}"


def gauge_function(chart: Chart, alpha: int, coord: str) -> Expr:
    """Opaque function of every chart coordinate standing for a free gauge slot."""
    return opaque_function(f"g{alpha + 1}_{coord}", chart.dim)(*chart.symbols)


def _parse_gauge(gauge: Optional[Mapping[str, Any]], k: int, chart: Chart) -> Dict[Tuple[int, str], Expr]:
    parsed: Dict[Tuple[int, str], Expr] = {}
    for slot, value in (gauge or {}).items():
        match = SLOT_PATTERN.match(slot)
        if not match:
            raise GaugeError(f"gauge slot '{slot}' is not of the form X<alpha>.<coordinate>")
        alpha, coord = int(match.group(1)) - 1, match.group(2)
        if not 0 <= alpha < k:
            raise GaugeError(f"gauge slot '{slot}': alpha must lie in 1..{k}")
        if coord not in chart.coords:
            raise GaugeError(f"gauge slot '{slot}': '{coord}' is not a coordinate of {chart.name}")
        parsed[(alpha, coord)] = sympy.sympify(value)
    return parsed


def _build(chart: Chart, components: List[Dict[str, Expr]]) -> KVectorField:
    return KVectorField(
        tuple(VectorField(chart, tuple(c[coord] for coord in chart.coords)) for c in components)
    )


def solve_hdw_contact(
    kc: KContact,
    h: Any,
    gauge: Optional[Mapping[str, Any]] = None,
    bindings: Bindings = None,
    seed: int = 0,
) -> HamKVF:
    """
    Solve the k-contact Hamilton-De Donder-Weyl equations for a k-vector field.

    With a Darboux layout the components follow the coordinate formulas:
    (X_a)^{q_i} = dh/dp_i^a, the summed constraints fix one slot per sum
    and everything else is gauge. Without a layout the linear system
    iota(X_a) d eta^a = dh - (R_a h) eta^a, iota(X_a) eta^a = -h is solved.

    Raises:
        GaugeError: an assignment contradicts a summed constraint
    """
    h = normalize(sympy.sympify(h))
    assignment = _parse_gauge(gauge, kc.k, kc.chart)
    if kc.darboux is not None:
        return _darboux_contact(kc, h, assignment)
    reeb = solve_reeb(kc, seed=seed, bindings=bindings)
    if not reeb.fields:
        raise SemanticError("solving the field equations off Darboux charts needs symbolic Reeb fields")
    chart = kc.chart
    rows: List[List[Expr]] = []
    rhs: List[Expr] = []
    correction = Form.zero(chart, 1)
    for R, eta_a in zip(reeb.fields, kc.eta):
        correction = correction + eta_a.scale(R.apply(h))
    for j, x in enumerate(chart.symbols):
        rows.append([deta_a.coefficient((i, j)) for deta_a in kc.d_eta for i in range(chart.dim)])
        rhs.append(sympy.diff(h, x) - correction.coefficient((j,)))
    rows.append([eta_a.coefficient((i,)) for eta_a in kc.eta for i in range(chart.dim)])
    rhs.append(-h)
    sample = kc.sample(1, seed, bindings=bindings)[0]
    return _linear_solve(chart, kc.k, rows, rhs, assignment, sample, bindings)


def _darboux_contact(kc: KContact, h: Expr, assignment: Dict[Tuple[int, str], Expr]) -> HamKVF:
    layout, chart, k = kc.darboux, kc.chart, kc.k
    components: List[Dict[str, Expr]] = [{} for _ in range(k)]
    for alpha in range(k):
        for i, q in enumerate(layout.q):
            if (alpha, q) in assignment:
                raise GaugeError(f"{slot_name(alpha, q)} is fixed by the field equations")
            components[alpha][q] = sympy.diff(h, chart.coordinate(layout.p[i][alpha]))

    dh_dz = [sympy.diff(h, chart.coordinate(z)) for z in layout.z]
    sums: List[Tuple[List[Tuple[int, str]], Expr, str]] = []
    for i, q in enumerate(layout.q):
        target = -(sympy.diff(h, chart.coordinate(q)) + sum(
            chart.coordinate(layout.p[i][a]) * dh_dz[a] for a in range(k)
        ))
        slots = [(a, layout.p[i][a]) for a in range(k)]
        sums.append((slots, target, f"sum_a (X_a)^{{{layout.p[i][0]}..}} = -(dh/d{q} + p dh/dz)"))
    target_z = sum(
        chart.coordinate(layout.p[i][a]) * sympy.diff(h, chart.coordinate(layout.p[i][a]))
        for i in range(layout.n)
        for a in range(k)
    ) - h
    sums.append(([(a, layout.z[a]) for a in range(k)], target_z, "sum_a (X_a)^{z^a} = p dh/dp - h"))

    free: List[str] = []
    gauge_used: Dict[str, Expr] = {}
    constraints: List[str] = []
    for slots, target, label in sums:
        open_slots = [s for s in slots if s not in assignment]
        fixed = sum((assignment[s] for s in slots if s in assignment), S.Zero)
        for s in slots:
            if s in assignment:
                components[s[0]][s[1]] = assignment[s]
                gauge_used[slot_name(*s)] = assignment[s]
        if not open_slots:
            if not expr_equal(fixed, target):
                raise GaugeError(
                    f"inconsistent gauge assignment: {' + '.join(slot_name(*s) for s in slots)} "
                    f"= {normalize(fixed)} but the field equations require {normalize(target)}"
                )
            constraints.append(label)
            continue
        *others, last = open_slots
        opaque_sum = S.Zero
        for s in others:
            g = gauge_function(chart, *s)
            components[s[0]][s[1]] = g
            gauge_used[slot_name(*s)] = g
            free.append(slot_name(*s))
            opaque_sum += g
        components[last[0]][last[1]] = target - fixed - opaque_sum
        constraints.append(label)

    for alpha in range(k):
        for coord in chart.coords:
            if coord in components[alpha]:
                continue
            if (alpha, coord) in assignment:
                value = assignment[(alpha, coord)]
            else:
                value = gauge_function(chart, alpha, coord)
                free.append(slot_name(alpha, coord))
            components[alpha][coord] = value
            gauge_used[slot_name(alpha, coord)] = value

    dimension = k * chart.dim - (layout.n * k + layout.n + 1)
    return HamKVF(
        fields=_build(chart, components),
        method="darboux",
        gauge=gauge_used,
        free_slots=tuple(free),
        constraints=tuple(constraints),
        gauge_dimension=dimension,
    )


def _linear_solve(
    chart: Chart,
    k: int,
    rows: List[List[Expr]],
    rhs: List[Expr],
    assignment: Dict[Tuple[int, str], Expr],
    sample: Point,
    bindings: Bindings,
) -> HamKVF:
    """Pivot at a sample point, solve the square part exactly, verify every equation."""
    n = chart.dim
    slots = [(a, c) for a in range(k) for c in chart.coords]
    numeric = [[evaluate(c, sample, bindings) for c in row] for row in rows]
    full_rank = matrix_rank(numeric)

    unknown = [u for u, s in enumerate(slots) if s not in assignment]
    reduced = [[row[u] for u in unknown] for row in numeric]
    chosen: List[int] = []
    for r in range(len(rows)):
        if matrix_rank([reduced[i] for i in chosen + [r]]) == len(chosen) + 1:
            chosen.append(r)
    pivots = list(Matrix([reduced[r] for r in chosen]).rref()[1]) if chosen else []
    pivot_slots = [unknown[p] for p in pivots]

    values: Dict[int, Expr] = {}
    free: List[str] = []
    gauge_used: Dict[str, Expr] = {}
    for u, s in enumerate(slots):
        if s in assignment:
            values[u] = assignment[s]
            gauge_used[slot_name(*s)] = assignment[s]
        elif u not in pivot_slots:
            values[u] = gauge_function(chart, *s)
            gauge_used[slot_name(*s)] = values[u]
            free.append(slot_name(*s))

    if pivot_slots:
        square = Matrix([[rows[r][u] for u in pivot_slots] for r in chosen])
        vector = Matrix([rhs[r] - sum((rows[r][u] * v for u, v in values.items()), S.Zero) for r in chosen])
        solution = square.LUsolve(vector)
        for u, value in zip(pivot_slots, solution):
            values[u] = normalize(value)

    for r, row in enumerate(rows):
        residual = sum((c * values[u] for u, c in enumerate(row)), S.Zero) - rhs[r]
        if not expr_equal(residual, 0):
            message = f"field equation {r + 1} leaves residual {normalize(residual)}"
            if assignment:
                raise GaugeError(f"inconsistent gauge assignment: {message}")
            raise SemanticError(f"no Hamiltonian k-vector field: {message}")

    components = [{c: values[a * n + i] for i, c in enumerate(chart.coords)} for a in range(k)]
    return HamKVF(
        fields=_build(chart, components),
        method="general",
        gauge=gauge_used,
        free_slots=tuple(free),
        constraints=(),
        gauge_dimension=k * n - full_rank,
    )


def solve_hdw_ksymplectic(
    ks: KSymplectic,
    h: Any,
    gauge: Optional[Mapping[str, Any]] = None,
    bindings: Bindings = None,
    seed: int = 0,
) -> HamKVF:
    """Solve sum_a iota(X_a) omega^a = dh."""
    h = normalize(sympy.sympify(h))
    chart = ks.chart
    assignment = _parse_gauge(gauge, ks.k, chart)
    rows = [[omega_a.coefficient((i, j)) for omega_a in ks.omega for i in range(chart.dim)] for j in range(chart.dim)]
    rhs = [sympy.diff(h, x) for x in chart.symbols]
    sample = ks.sample(1, seed, bindings=bindings)[0]
    return _linear_solve(chart, ks.k, rows, rhs, assignment, sample, bindings)


def _form_zero(form: Form) -> bool:
    return all(expr_equal(c, 0) for c in form.terms.values())


def _fields_of(X: Union[HamKVF, KVectorField]) -> KVectorField:
    return X.fields if isinstance(X, HamKVF) else X


def verify_hdw(structure: Structure, h: Any, X: Union[HamKVF, KVectorField], bindings: Bindings = None) -> StructureReport:
    """
    Check a k-vector field against the field equations.

    For k-contact structures both the contraction form and the Lie
    derivative form are checked and ``details["formulations_agree"]``
    records whether they reach the same verdict.
    """
    X = _fields_of(X)
    h = normalize(sympy.sympify(h))
    chart = structure.chart
    if X.chart != chart:
        raise ChartMismatchError(f"k-vector field on {X.chart.name}, structure on {chart.name}")
    dh = d(Form.function(chart, h))
    symbolic: Dict[str, bool] = {}
    residuals: Dict[str, str] = {}

    if isinstance(structure, KSymplectic):
        first = flat_omega(structure, X) - dh
        symbolic["iota X omega = dh"] = _form_zero(first)
        residuals["iota X omega = dh"] = first.to_text()
        details: Dict[str, Any] = {}
    else:
        reeb = solve_reeb(structure, bindings=bindings)
        if not reeb.fields:
            raise SemanticError("verifying the field equations needs symbolic Reeb fields")
        correction = Form.zero(chart, 1)
        for R, eta_a in zip(reeb.fields, structure.eta):
            correction = correction + eta_a.scale(R.apply(h))
        one_form, scalar = flat_eta(structure, X)
        first = one_form - (dh - correction)
        lie = correction
        for X_a, eta_a in zip(X, structure.eta):
            lie = lie + lie_derivative(X_a, eta_a)
        names = ("iota X d eta = dh - (R h) eta", "iota X eta = -h", "L_X eta = -(R h) eta")
        symbolic[names[0]] = _form_zero(first)
        symbolic[names[1]] = bool(expr_equal(scalar + h, 0))
        symbolic[names[2]] = _form_zero(lie)
        residuals = {names[0]: first.to_text(), names[1]: str(normalize(scalar + h)), names[2]: lie.to_text()}
        contraction = symbolic[names[0]] and symbolic[names[1]]
        alternative = symbolic[names[2]] and symbolic[names[1]]
        details = {"formulations_agree": contraction == alternative}

    failed = [name for name, ok in symbolic.items() if not ok]
    witness = f"{failed[0]}: residual {residuals[failed[0]]}" if failed else None
    return StructureReport.build("hdw", symbolic=symbolic, symbolic_witness=witness, details=details)


def integrability_check(
    X: Union[HamKVF, KVectorField],
    on: Optional[Mapping[str, Any]] = None,
    coordinates: Optional[Sequence[str]] = None,
) -> StructureReport:
    """
    [X_a, X_b] = 0 for all a < b.

    ``on`` restricts the bracket residuals to a submanifold given by
    coordinate substitutions. ``coordinates`` restricts to the subsystem
    along those coordinates, whose components must depend on them only.
    """
    X = _fields_of(X)
    chart = X.chart
    subs = {chart.coordinate(c): sympy.sympify(v) for c, v in (on or {}).items()}
    symbolic: Dict[str, bool] = {}
    witness = None

    if coordinates:
        indices = [chart.index(c) for c in coordinates]
        allowed = {chart.symbols[i] for i in indices}
        restricted = [[X_a.components[i].xreplace(subs) for i in indices] for X_a in X]
        outside = set(chart.symbols) - allowed
        closed = True
        for a, comps in enumerate(restricted):
            for coord, c in zip(coordinates, comps):
                stray = sorted(s.name for s in c.free_symbols & outside)
                if stray and closed:
                    closed = False
                    witness = f"component X{a + 1}^{coord} depends on {stray} outside the subsystem"
        symbolic["closed subsystem"] = closed
        symbols = [chart.symbols[i] for i in indices]

        def bracket(A: List[Expr], B: List[Expr]) -> List[Expr]:
            return [
                sum((A[m] * sympy.diff(B[c], symbols[m]) - B[m] * sympy.diff(A[c], symbols[m]) for m in range(len(symbols))), S.Zero)
                for c in range(len(symbols))
            ]

        pairs = [(a, b, bracket(restricted[a], restricted[b])) for a in range(X.k) for b in range(a + 1, X.k)]
        labels = list(coordinates)
    else:
        pairs = [
            (a, b, [c.xreplace(subs) for c in lie_bracket(X[a], X[b]).components])
            for a in range(X.k)
            for b in range(a + 1, X.k)
        ]
        labels = list(chart.coords)

    for a, b, components in pairs:
        name = f"[X{a + 1}, X{b + 1}] = 0"
        ok = True
        for coord, c in zip(labels, components):
            if not expr_equal(c, 0):
                ok = False
                if witness is None:
                    witness = f"{name} fails: {coord}-component {normalize(c)}"
                break
        symbolic[name] = ok
    return StructureReport.build("integrability", symbolic=symbolic, symbolic_witness=witness)


# ---------------------------------------------------------------------------
# Field equations of one-field, two-variable systems
# ---------------------------------------------------------------------------


def _two_variable_layout(structure: Structure) -> Tuple[str, Tuple[str, str], Tuple[str, str]]:
    layout = getattr(structure, "darboux", None)
    if layout is None or layout.n != 1 or layout.k != 2:
        raise SemanticError("a one-field Darboux layout with k = 2 is required (coordinates u, p^t, p^x, s^t, s^x)")
    return layout.q[0], (layout.p[0][0], layout.p[0][1]), (layout.z[0], layout.z[1])


def jet_symbols(u: str) -> Dict[str, Symbol]:
    """Symbols for u and its first and second derivatives in (t, x)."""
    return {name: Symbol(f"{u}_{name}") for name in ("t", "x", "tt", "tx", "xx")}


def eliminate_momenta(system: HamiltonianSystem) -> Expr:
    """
    Second-order field equation of a one-field k = 2 Darboux system.

    Solves u_t = dh/dp^t, u_x = dh/dp^x for the momenta and substitutes
    into p^t_t + p^x_x = -(dh/du + p^t dh/ds^t + p^x dh/ds^x). The result
    is an expression in u and the jet symbols ``u_t, u_x, u_tt, u_tx,
    u_xx``, normalized so that u_tt has coefficient 1 when possible.
    """
    u, (pt, px), (st, sx) = _two_variable_layout(system.structure)
    chart, h = system.chart, system.h
    U, P_t, P_x, S_t, S_x = (chart.coordinate(c) for c in (u, pt, px, st, sx))
    jets = jet_symbols(u)

    solutions = sympy.solve(
        [sympy.diff(h, P_t) - jets["t"], sympy.diff(h, P_x) - jets["x"]], [P_t, P_x], dict=True
    )
    if len(solutions) != 1 or P_t not in solutions[0] or P_x not in solutions[0]:
        raise SemanticError("the momenta cannot be eliminated: dh/dp is not invertible")
    momentum_t, momentum_x = solutions[0][P_t], solutions[0][P_x]

    def total(f: Expr, direction: str) -> Expr:
        if f.has(S_t) or f.has(S_x):
            raise SemanticError("the field equation depends on the action variables s")
        first, second = (jets["t"], (jets["tt"], jets["tx"])) if direction == "t" else (jets["x"], (jets["tx"], jets["xx"]))
        return sympy.diff(f, U) * first + sympy.diff(f, jets["t"]) * second[0] + sympy.diff(f, jets["x"]) * second[1]

    source = sympy.diff(h, U) + P_t * sympy.diff(h, S_t) + P_x * sympy.diff(h, S_x)
    source = source.xreplace({P_t: momentum_t, P_x: momentum_x})
    if source.has(S_t) or source.has(S_x):
        raise SemanticError("the field equation depends on the action variables s")
    equation = sympy.expand(total(momentum_t, "t") + total(momentum_x, "x") + source)
    lead = equation.coeff(jets["tt"])
    if lead != 0 and not lead.free_symbols & set(jets.values()):
        equation = equation / lead
    return normalize(equation)


# ---------------------------------------------------------------------------
# Dynamics on quotients
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProjectedDynamics:
    """Reduced k-vector field, reduced Hamiltonian and the checks behind them."""

    fields: Optional[KVectorField]
    hamiltonian: Optional[Expr]
    report: StructureReport


def project_dynamics(
    X: Union[HamKVF, KVectorField],
    q: QuotientPresentation,
    kc: KContact,
    h: Any,
    action: InfAction,
    reduction_algebra: str = "bracket",
) -> ProjectedDynamics:
    """
    Push a Hamiltonian k-vector field through the quotient projection.

    Checks tangency to the level set, invariance under the reduction
    algebra, invariance of h, that the pushed components do not depend
    on fibre coordinates, pi* h_red = i* h and that the pushed field
    satisfies the reduced field equations.
    """
    X = _fields_of(X)
    if q.section is None:
        raise SemanticError("projecting dynamics needs a section of the quotient projection")
    level = q.level
    embed, project, section = level.embedding, q.projection, q.section
    h = normalize(sympy.sympify(h))
    algebra = isotropy_data(level.momentum.algebra, level.mu).reduction_algebra(reduction_algebra)
    generators = [action.fundamental(v) for v in algebra.basis]

    symbolic: Dict[str, bool] = {}
    witness: Optional[str] = None

    def record(name: str, ok: bool, message: str) -> None:
        nonlocal witness
        symbolic[name] = ok
        if not ok and witness is None:
            witness = message

    tangent = True
    for a, X_a in enumerate(X):
        for f in level.equalities:
            if not expr_equal(embed.pull(X_a.apply(f)), 0):
                tangent = False
                record("X tangent to level set", False, f"X{a + 1}({f}) does not vanish on the level set")
                break
    symbolic.setdefault("X tangent to level set", tangent)

    invariant = True
    for xi_M in generators:
        for a, X_a in enumerate(X):
            bracket = lie_bracket(xi_M, X_a)
            if not all(expr_equal(embed.pull(c), 0) for c in bracket.components):
                invariant = False
                record("X invariant", False, f"[xi_M, X{a + 1}] does not vanish on the level set")
    symbolic.setdefault("X invariant", invariant)
    record(
        "h invariant",
        all(expr_equal(xi_M.apply(h), 0) for xi_M in generators),
        "h is not invariant under the reduction algebra",
    )

    jacobian = project.jacobian()
    reduced_components: List[Dict[str, Expr]] = []
    projectable = True
    for a, X_a in enumerate(X):
        lifted = Matrix([embed.pull(X_a.component(c)) for c in level.chart.coords])
        pushed = jacobian * lifted
        comps: Dict[str, Expr] = {}
        for j, coord in enumerate(q.chart.coords):
            reduced = normalize(section.pull(pushed[j]))
            if projectable and not expr_equal(project.pull(reduced), pushed[j]):
                projectable = False
                record(
                    "components projectable",
                    False,
                    f"X{a + 1} is not projectable: its {coord}-component depends on fibre coordinates",
                )
            comps[coord] = reduced
        reduced_components.append(comps)
    symbolic.setdefault("components projectable", projectable)

    h_level = embed.pull(h)
    h_red = normalize(section.pull(h_level))
    record("pi* h_red = i* h", bool(expr_equal(project.pull(h_red), h_level)), "pi* h_red differs from i* h")
    if q.hamiltonian is not None:
        record(
            "h_red matches the stated reduced Hamiltonian",
            bool(expr_equal(h_red, q.hamiltonian)),
            f"computed h_red = {h_red}, stated {q.hamiltonian}",
        )

    Y = _build(q.chart, reduced_components)
    hdw = verify_hdw(q.structure, h_red, Y)
    record("reduced field satisfies HDW", hdw.passed, f"reduced field: {hdw.witness}")
    report = StructureReport.build(
        "dynamics projection",
        symbolic=symbolic,
        symbolic_witness=witness,
        details={"h_red": str(h_red), "reduced_field": Y.as_strings()},
    )
    return ProjectedDynamics(Y if projectable else None, h_red, report)


# ---------------------------------------------------------------------------
# Numerical integration
# ---------------------------------------------------------------------------


def _numeric(expr: Expr, params: Mapping[str, float], bindings: Bindings) -> Expr:
    expr = apply_bindings(sympy.sympify(expr), bindings)
    return expr.xreplace({Symbol(k): sympy.Float(v) for k, v in params.items()})


def _vectorized(expr: Expr, args: Sequence[Symbol]) -> Callable[..., np.ndarray]:
    fn = sympy.lambdify(list(args), expr, "numpy")

    def call(*values: np.ndarray) -> np.ndarray:
        result = fn(*values)
        return np.broadcast_to(np.asarray(result, dtype=float), np.shape(values[0])).copy()

    return call


def profile(text: Union[str, Expr], variable: str = "x") -> Callable[[np.ndarray], np.ndarray]:
    """Initial-data profile such as ``"sin(x)"`` as a numpy function."""
    x = Symbol(variable)
    names = {variable: x, "pi": sympy.pi, "sin": sympy.sin, "cos": sympy.cos, "exp": sympy.exp}
    expr = sympy.parse_expr(text, local_dict=names) if isinstance(text, str) else sympy.sympify(text)
    stray = sorted(s.name for s in expr.free_symbols if s != x)
    if stray:
        raise SemanticError(f"initial profile '{text}' uses unknown names {stray}")
    return _vectorized(expr, [x])


@dataclass(frozen=True)
class GridSpec:
    """Periodic grid: nx nodes on [0, length) and nt steps up to final_time."""

    nx: int
    nt: int
    final_time: float = 1.0
    length: float = 2 * math.pi

    def __post_init__(self) -> None:
        if self.nx < 3 or self.nt < 1 or self.final_time <= 0 or self.length <= 0:
            raise SemanticError(f"grid {self.nx}x{self.nt} over T={self.final_time} is not usable")

    @classmethod
    def parse(cls, text: str, final_time: float = 1.0, length: float = 2 * math.pi) -> "GridSpec":
        match = re.fullmatch(r"\s*(\d+)\s*[xX×]\s*(\d+)\s*", text)
        if not match:
            raise SemanticError(f"grid '{text}' is not of the form NxM")
        return cls(int(match.group(1)), int(match.group(2)), final_time, length)

    @property
    def dx(self) -> float:
        return self.length / self.nx

    @property
    def dt(self) -> float:
        return self.final_time / self.nt

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.nx * factor, self.nt * factor, self.final_time, self.length)

    def with_time_step(self, dt: float, strict: bool = False) -> "GridSpec":
        """
        Grid with time step dt: nt = ceil(T / dt).

        With ``strict`` the step count is already fixed and dt must agree with it.
        """
        if dt <= 0:
            raise SemanticError(f"time step {dt} must be positive")
        ratio = self.final_time / dt
        steps = round(ratio) if abs(ratio - round(ratio)) < 1e-9 * ratio else math.ceil(ratio)
        if strict and steps != self.nt:
            raise SemanticError(
                f"time step {dt} gives {steps} steps over T={self.final_time}, the grid has {self.nt}"
            )
        return GridSpec(self.nx, steps, self.final_time, self.length)


@dataclass
class SectionGrid:
    """Values of an integral section on a periodic (t, x) grid."""

    t: np.ndarray
    x: np.ndarray
    coords: Tuple[str, ...]
    values: np.ndarray
    energy: np.ndarray
    residuals: np.ndarray
    boundary: str = "periodic"

    def __post_init__(self) -> None:
        if self.values.shape != (len(self.t), len(self.x), len(self.coords)):
            raise SemanticError(f"grid values of shape {self.values.shape} do not match the axes")
        if not np.all(np.isfinite(self.values)):
            raise IntegrationError("grid holds non-finite values")

    @property
    def residual(self) -> float:
        return float(self.residuals.max()) if self.residuals.size else 0.0

    def field(self, coord: str) -> np.ndarray:
        return self.values[:, :, self.coords.index(coord)]

    def write_csv(self, path: Union[str, Path]) -> None:
        """Rows t, x, then every chart coordinate, 17 significant digits."""
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["t", "x", *self.coords])
            for n, t in enumerate(self.t):
                for j, x in enumerate(self.x):
                    writer.writerow([f"{t:.17g}", f"{x:.17g}", *(f"{v:.17g}" for v in self.values[n, j])])

    def write_residuals_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["t", "residual", "energy"])
            for n, t in enumerate(self.t):
                residual = self.residuals[n - 1] if 0 < n <= len(self.residuals) else float("nan")
                writer.writerow([f"{t:.17g}", f"{residual:.17g}", f"{self.energy[n]:.17g}"])

    def summary(self) -> Dict[str, Any]:
        return {
            "nx": len(self.x),
            "nt": len(self.t) - 1,
            "final_time": float(self.t[-1]),
            "residual": self.residual,
            "energy_initial": float(self.energy[0]),
            "energy_final": float(self.energy[-1]),
        }


def _central(f: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(f, -1) - np.roll(f, 1)) / (2 * dx)


def integrate_k2(
    system: HamiltonianSystem,
    initial: Mapping[str, Union[str, Expr]],
    grid: GridSpec,
    params: Optional[Mapping[str, float]] = None,
) -> SectionGrid:
    """
    Method-of-lines integration of a one-field k = 2 Darboux system.

    p^x is recovered from u_x through dh/dp^x = u_x, s^x is gauge-fixed to
    zero and (u, p^t, s^t) evolve under

        u_t   = dh/dp^t
        p^t_t = -(dh/du + p^t dh/ds^t + p^x dh/ds^x) - D_x p^x
        s^t_t = p^t dh/dp^t + p^x dh/dp^x - h

    with periodic central differences in x and classical RK4 in t.

    Raises:
        CFLViolation: dt exceeds dx / c
        IntegrationError: the solution stops being finite
    """
    u, (pt, px), (st, sx) = _two_variable_layout(system.structure)
    chart = system.chart
    params = dict(params or {})
    missing = [p for p in chart.params if p not in params]
    if missing:
        raise SemanticError(f"integration needs values for parameters {missing}")
    U, P_t, P_x, S_t, S_x = (chart.coordinate(c) for c in (u, pt, px, st, sx))
    h = _numeric(system.h, params, system.bindings)

    u_x = Symbol("_u_x")
    solved = sympy.solve(sympy.diff(h, P_x) - u_x, P_x)
    if len(solved) != 1:
        raise SemanticError("dh/dp^x = u_x must determine p^x uniquely")
    momentum_x = solved[0]

    speed_squared = sympy.nsimplify(-sympy.diff(h, P_t, 2) / sympy.diff(h, P_x, 2))
    if speed_squared.free_symbols or not speed_squared.is_positive:
        raise SemanticError(f"the wave speed squared {speed_squared} must be a positive constant")
    c = math.sqrt(float(speed_squared))
    if grid.dt > grid.dx / c:
        raise CFLViolation(f"dt = {grid.dt:.6g} exceeds dx/c = {grid.dx / c:.6g}", suggested_dt=0.9 * grid.dx / c)

    args = (U, P_t, P_x, S_t, S_x)
    h_pt = sympy.diff(h, P_t)
    h_px = sympy.diff(h, P_x)
    velocity = _vectorized(h_pt, args)
    source_pt = _vectorized(-(sympy.diff(h, U) + P_t * sympy.diff(h, S_t) + P_x * sympy.diff(h, S_x)), args)
    source_st = _vectorized(P_t * h_pt + P_x * h_px - h, args)
    density = _vectorized(P_t * h_pt - h.xreplace({S_t: 0, S_x: 0}), args)
    recover_px = _vectorized(momentum_x, (u_x, U, P_t, S_t, S_x))

    x = np.arange(grid.nx) * grid.dx
    t = np.arange(grid.nt + 1) * grid.dt
    state = np.stack([profile(initial.get(name, "0"))(x) for name in (u, pt, st)])
    zero = np.zeros_like(x)

    def momenta(s: np.ndarray) -> np.ndarray:
        return recover_px(_central(s[0], grid.dx), s[0], s[1], s[2], zero)

    def rhs(s: np.ndarray) -> np.ndarray:
        p_x = momenta(s)
        fields = (s[0], s[1], p_x, s[2], zero)
        return np.stack([
            velocity(*fields),
            source_pt(*fields) - _central(p_x, grid.dx),
            source_st(*fields),
        ])

    values = np.empty((grid.nt + 1, grid.nx, 5))
    derivatives = np.empty((grid.nt + 1, 3, grid.nx))
    energy = np.empty(grid.nt + 1)

    def store(n: int, s: np.ndarray) -> None:
        p_x = momenta(s)
        values[n] = np.stack([s[0], s[1], p_x, s[2], zero], axis=1)
        derivatives[n] = rhs(s)
        energy[n] = float(np.sum(density(s[0], s[1], p_x, s[2], zero)) * grid.dx)

    store(0, state)
    dt = grid.dt
    for n in range(grid.nt):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * dt * k1)
        k3 = rhs(state + 0.5 * dt * k2)
        k4 = rhs(state + dt * k3)
        state = state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(state)):
            raise IntegrationError(f"non-finite values at step {n + 1} (t = {t[n + 1]:.6g})")
        store(n + 1, state)

    evolved = values[:, :, [0, 1, 3]].transpose(0, 2, 1)
    if grid.nt >= 2:
        centered = (evolved[2:] - evolved[:-2]) / (2 * dt)
        residuals = np.abs(centered - derivatives[1:-1]).max(axis=(1, 2))
    else:
        residuals = np.zeros(0)
    logger.debug(f"Integrated {grid.nx}x{grid.nt} grid, residual {residuals.max() if residuals.size else 0.0:.3e}")
    return SectionGrid(t=t, x=x, coords=(u, pt, px, st, sx), values=values, energy=energy, residuals=residuals)


def damped_standing_wave(t: Any, x: Any, c: float, k: float) -> np.ndarray:
    """Decaying mode e^{-kt/2}(cos wt + k/(2w) sin wt) sin x with w = sqrt(c^2 - k^2/4)."""
    omega = math.sqrt(c * c - k * k / 4)
    t = np.asarray(t, dtype=float)
    return np.exp(-k * t / 2) * (np.cos(omega * t) + k / (2 * omega) * np.sin(omega * t)) * np.sin(x)


def convergence_order(steps: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(step)."""
    if len(steps) < 2 or len(steps) != len(errors):
        raise SemanticError("convergence order needs at least two matching refinements")
    slope, _ = np.polyfit(np.log(np.asarray(steps, dtype=float)), np.log(np.asarray(errors, dtype=float)), 1)
    return float(slope)


def convergence_study(
    system: HamiltonianSystem,
    initial: Mapping[str, Union[str, Expr]],
    grid: GridSpec,
    params: Mapping[str, float],
    exact: Optional[Callable[[float, np.ndarray], np.ndarray]] = None,
    refinements: int = 3,
) -> Dict[str, Any]:
    """Errors and residuals over successive halvings of dx and dt."""
    steps: List[float] = []
    errors: List[float] = []
    residuals: List[float] = []
    spec = grid
    for _ in range(refinements + 1):
        section = integrate_k2(system, initial, spec, params)
        steps.append(spec.dx)
        residuals.append(section.residual)
        if exact is not None:
            errors.append(float(np.abs(section.field(section.coords[0])[-1] - exact(section.t[-1], section.x)).max()))
        spec = spec.refined()
    result: Dict[str, Any] = {"steps": steps, "residuals": residuals, "residual_order": convergence_order(steps, residuals)}
    if exact is not None:
        result["errors"] = errors
        result["error_order"] = convergence_order(steps, errors)
    return result


def integrate_flow(
    X: VectorField,
    start: Point,
    final_time: float,
    dt: float,
    bindings: Bindings = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """RK4 trajectory of a vector field; parameters are taken from the start point."""
    if start.chart != X.chart:
        raise ChartMismatchError(f"start point on {start.chart.name}, field on {X.chart.name}")
    params = {p: float(start[p]) for p in X.chart.params}
    functions = [_vectorized(_numeric(c, params, bindings), X.chart.symbols) for c in X.components]
    steps = int(round(final_time / dt))
    times = np.arange(steps + 1) * dt
    trajectory = np.empty((steps + 1, X.chart.dim))
    state = np.array([float(v) for v in start.coordinate_values()])

    def rhs(s: np.ndarray) -> np.ndarray:
        return np.array([float(f(*s)) for f in functions])

    trajectory[0] = state
    for n in range(steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * dt * k1)
        k3 = rhs(state + 0.5 * dt * k2)
        k4 = rhs(state + dt * k3)
        state = state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(state)):
            raise IntegrationError(f"non-finite flow at step {n + 1}")
        trajectory[n + 1] = state
    return times, trajectory


def compare_reduced_flow(
    X: VectorField,
    Y: VectorField,
    level: LevelSet,
    projection: SmoothMap,
    start: Point,
    final_time: float = 1.0,
    dt: float = 1e-3,
    bindings: Bindings = None,
) -> Dict[str, Any]:
    """Max |pi(flow of X) - flow of Y| with the reduced flow started at pi(start)."""
    level.require(start, bindings)
    y0 = level.chart_point(start)
    reduced_start = projection.apply_at(y0, bindings)
    _, parent = integrate_flow(X, start, final_time, dt, bindings)
    times, reduced = integrate_flow(Y, reduced_start, final_time, dt, bindings)
    params = {p: float(start[p]) for p in level.chart.params}
    columns = [level.parent.index(c) for c in level.chart.coords]
    maps = [_vectorized(_numeric(c, params, bindings), level.chart.symbols) for c in projection.components]
    restricted = parent[:, columns]
    projected = np.stack([f(*restricted.T) for f in maps], axis=1)
    error = float(np.abs(projected - reduced).max())
    return {"max_error": error, "steps": len(times) - 1, "dt": dt, "final_time": final_time}
