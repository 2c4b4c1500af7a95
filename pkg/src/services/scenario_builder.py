"""
Scenario builder: turns a validated scenario document into engine objects.

Everything symbolic is built at load time, so malformed forms, charts or
parametrizations are rejected here. Nothing is verified: a claimed reduced
form that is wrong still loads and fails later in the pipeline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Mapping, Optional, Sequence, Union

from sympy import Expr

from components.exterior_calculus import SmoothMap, parse_vector_field, parse_vform
from components.lie_actions import (
    CoadjointValue,
    InfAction,
    LieAlgebra,
    Momentum,
    extend_momentum,
    lift_action,
    momentum_from_action,
    momentum_from_potential,
)
from components.reduction import LevelSet, QuotientPresentation, level_set_of
from components.structures import (
    DarbouxLayout,
    KContact,
    KSymplectic,
    canonical_kcontact,
    canonical_ksymplectic,
    symplectize,
)
from components.symbolic_core import Binding, Chart, bind, expr_equal, parse_expression
from schemas.scenario import Expectation, QuotientSpec, ScenarioDocument, StructureSpec
from utils.errors import NameResolutionError, SemanticError

logger = logging.getLogger(__name__)

Structure = Union[KContact, KSymplectic]


class NotApplicable(Exception):
    """A stage input is missing from the scenario."""


@dataclass(frozen=True, eq=False)
class Scenario:
    """A worked example as engine objects, ready for the pipeline."""

    document: ScenarioDocument
    chart: Chart
    structure: Structure
    opaque: Mapping[str, int] = field(default_factory=dict)
    bindings: Mapping[str, Binding] = field(default_factory=dict)
    action: Optional[InfAction] = None
    momentum: Optional[Momentum] = None
    stated_momentum: Optional[Momentum] = None
    mu: Optional[CoadjointValue] = None
    level: Optional[LevelSet] = None
    quotient: Optional[QuotientPresentation] = None
    hamiltonian: Optional[Expr] = None
    gauge: Mapping[str, Expr] = field(default_factory=dict)

    @property
    def id(self) -> str:
        return self.document.id

    @property
    def title(self) -> str:
        return self.document.title

    @property
    def source(self) -> str:
        return self.document.source

    @property
    def expected(self) -> Dict[str, Expectation]:
        return self.document.expected

    def require(self, *names: str) -> None:
        """Raise NotApplicable naming the first missing input."""
        for name in names:
            if name == "kcontact":
                if not isinstance(self.structure, KContact):
                    raise NotApplicable("needs a k-contact structure")
            elif name == "ksymplectic":
                if not isinstance(self.structure, KSymplectic):
                    raise NotApplicable("needs a k-symplectic structure")
            elif name in ("dynamics", "simulate", "probe"):
                if getattr(self.document, name) is None:
                    raise NotApplicable(f"scenario has no {name} section")
            elif getattr(self, name) is None:
                raise NotApplicable(f"scenario has no {name.replace('_', ' ')}")

    # Symplectisation of a k-contact scenario and everything lifted to it

    @cached_property
    def symplectisation(self) -> KSymplectic:
        self.require("kcontact")
        coordinate = self.document.probe.scale_coordinate if self.document.probe else "s"
        return symplectize(self.structure, coordinate)

    @cached_property
    def lifted_action(self) -> InfAction:
        self.require("action")
        return lift_action(self.action, self.symplectisation)

    @cached_property
    def lifted_momentum(self) -> Momentum:
        self.require("momentum")
        return extend_momentum(self.momentum, self.symplectisation)

    @cached_property
    def lifted_level(self) -> LevelSet:
        self.require("level")
        return self.level.lift(self.symplectisation, self.lifted_momentum)


# ---------------------------------------------------------------------------
# Building
# ---------------------------------------------------------------------------


def _parse_all(texts: Sequence[Any], chart: Chart, opaque: Mapping[str, int]) -> tuple:
    return tuple(parse_expression(t, chart, opaque) for t in texts)


def _build_structure(spec: StructureSpec, chart: Chart, opaque: Mapping[str, int]) -> Structure:
    opens = _parse_all(spec.open, chart, opaque)
    if spec.type == "canonical_kcontact":
        kc = canonical_kcontact(spec.n, spec.k)
        _same_coordinates(kc.chart, chart)
        return kc
    if spec.type == "canonical_ksymplectic":
        ks = canonical_ksymplectic(spec.n, spec.k, spec.convention)
        _same_coordinates(ks.chart, chart)
        return ks
    polarization = tuple(parse_vector_field(v, chart, opaque) for v in spec.polarization)
    if spec.type == "kcontact":
        darboux = None
        if spec.darboux is not None:
            d = spec.darboux
            for name in d.q + [c for row in d.p for c in row] + d.z:
                chart.index(name)
            darboux = DarbouxLayout(tuple(d.q), tuple(tuple(row) for row in d.p), tuple(d.z))
        eta = parse_vform(spec.eta, chart, opaque)
        if darboux is not None and darboux.k != eta.k:
            raise SemanticError(f"Darboux layout has {darboux.k} action coordinates for a {eta.k}-contact form")
        return KContact(eta, polarization=polarization, open_conditions=opens, darboux=darboux)
    omega = parse_vform(spec.omega, chart, opaque)
    potential = parse_vform(spec.potential, chart, opaque) if spec.potential else None
    return KSymplectic(omega, potential=potential, open_conditions=opens)


def _same_coordinates(built: Chart, declared: Chart) -> None:
    if built.coords != declared.coords:
        raise SemanticError(
            f"canonical model has coordinates {list(built.coords)}, the scenario declares {list(declared.coords)}"
        )


def _sub_chart(name: str, coords: Sequence[str], parent: Chart) -> Chart:
    return Chart(name, tuple(coords), parent.params)


def _build_map(source: Chart, target: Chart, mapping: Mapping[str, Any], opaque: Mapping[str, int]) -> SmoothMap:
    parsed = {c: parse_expression(v, source, opaque) for c, v in mapping.items()}
    return SmoothMap.from_mapping(source, target, parsed)


def _build_level(document: ScenarioDocument, chart: Chart, J: Momentum, mu: CoadjointValue) -> LevelSet:
    spec = document.level_set
    opaque = document.opaque
    if spec is None:
        return level_set_of(J, mu)
    level_chart = _sub_chart(spec.chart.name, spec.chart.coords, chart)
    stray = sorted(set(spec.embedding) - set(chart.coords))
    if stray:
        raise NameResolutionError(f"level-set embedding names unknown coordinates {stray}")
    mapping: Dict[str, Any] = {}
    for c in chart.coords:
        if c in spec.embedding:
            mapping[c] = spec.embedding[c]
        elif c in level_chart.coords:
            mapping[c] = c
        else:
            raise SemanticError(f"level-set embedding gives no value for '{c}'")
    embedding = _build_map(level_chart, chart, mapping, opaque)
    opens = _parse_all(spec.open, level_chart, opaque)
    return level_set_of(J, mu, level_chart, embedding, open_conditions=opens)


def _build_quotient(spec: QuotientSpec, level: LevelSet, chart: Chart, opaque: Mapping[str, int]) -> QuotientPresentation:
    if level.chart is None:
        raise SemanticError("a quotient needs a level set with a chart")
    reduced = _sub_chart(spec.chart.name, spec.chart.coords, chart)
    projection = _build_map(level.chart, reduced, spec.projection, opaque)
    section = _build_map(reduced, level.chart, spec.section, opaque) if spec.section else None
    eta = parse_vform(spec.eta, reduced, opaque)
    hamiltonian = parse_expression(spec.hamiltonian, reduced, opaque) if spec.hamiltonian else None
    return QuotientPresentation(
        level=level,
        chart=reduced,
        projection=projection,
        eta=eta,
        section=section,
        hamiltonian=hamiltonian,
        open_conditions=_parse_all(spec.open, reduced, opaque),
    )


def build_scenario(document: ScenarioDocument) -> Scenario:
    """
    Build all engine objects of a scenario.

    Raises:
        InputError: any type invariant is violated (chart names, form
            degrees, action and momentum shapes, level-set parametrization)
    """
    try:
        chart = Chart(document.chart.name, tuple(document.chart.coords), tuple(document.chart.params))
        opaque = dict(document.opaque)
        bindings = {name: bind(name, b.vars, b.body) for name, b in document.bindings.items()}
        unknown = sorted(set(bindings) - set(opaque))
        if unknown:
            raise NameResolutionError(f"bindings for undeclared opaque symbols {unknown}")
        structure = _build_structure(document.structure, chart, opaque)

        action = momentum = stated = mu = level = quotient = hamiltonian = None
        if document.action is not None:
            spec = document.action
            algebra = LieAlgebra.from_brackets(spec.algebra.basis, spec.algebra.pairs())
            fields = tuple(parse_vector_field(spec.fields[name], structure.chart, opaque) for name in algebra.names)
            action = InfAction(algebra, structure.chart, fields, spec.sign)
            if isinstance(structure, KContact):
                momentum = momentum_from_action(action, structure)
            elif structure.potential is not None:
                momentum = momentum_from_potential(action, structure)
            if document.momentum is not None:
                rows = tuple(_parse_all(row, structure.chart, opaque) for row in document.momentum)
                stated = Momentum(structure.chart, algebra, rows)
                if momentum is None:
                    momentum = stated
        elif document.momentum is not None:
            raise SemanticError("a stated momentum needs an action")

        if document.mu is not None:
            mu = CoadjointValue(tuple(tuple(row) for row in document.mu))
            if momentum is None:
                raise SemanticError("mu needs a momentum map")
            if mu.k != momentum.k:
                raise SemanticError(f"mu has {mu.k} rows for a momentum map with {momentum.k} components")
            level = _build_level(document, structure.chart, momentum, mu)
            if document.quotient is not None:
                quotient = _build_quotient(document.quotient, level, structure.chart, opaque)

        gauge = {}
        if document.dynamics is not None:
            hamiltonian = parse_expression(document.dynamics.hamiltonian, structure.chart, opaque)
            gauge = {slot: parse_expression(value, structure.chart, opaque) for slot, value in document.dynamics.gauge.items()}
    except Exception as e:
        logger.error(f"Failed to build scenario {document.id}: {e}")
        raise

    logger.debug(f"Built scenario {document.id} on chart {structure.chart.name}")
    return Scenario(
        document=document,
        chart=structure.chart,
        structure=structure,
        opaque=opaque,
        bindings=bindings,
        action=action,
        momentum=momentum,
        stated_momentum=stated,
        mu=mu,
        level=level,
        quotient=quotient,
        hamiltonian=hamiltonian,
        gauge=gauge,
    )


def stated_momentum_matches(scenario: Scenario) -> Optional[bool]:
    """Whether the stated momentum rows equal the computed ones, if both exist."""
    if scenario.stated_momentum is None or scenario.momentum is scenario.stated_momentum:
        return None
    return all(
        expr_equal(a, b)
        for row_a, row_b in zip(scenario.momentum.rows, scenario.stated_momentum.rows)
        for a, b in zip(row_a, row_b)
    ) and scenario.momentum.k == scenario.stated_momentum.k
