"""Schemas for scenario files: the document form of a worked example."""

from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Scalar = Union[str, int, float]


class ChartSpec(BaseModel):
    """Coordinates and parameters of a chart."""

    name: str = Field(..., description="Chart name")
    coords: List[str] = Field(..., description="Ordered coordinate names")
    params: List[str] = Field(default_factory=list, description="Parameter names, held constant")


class SubChartSpec(BaseModel):
    """A chart whose parameters are inherited from the ambient chart."""

    name: str = Field(..., description="Chart name")
    coords: List[str] = Field(..., description="Ordered coordinate names")


class BindingSpec(BaseModel):
    """Concrete body for an opaque symbol, used by numerical stages."""

    vars: List[str] = Field(..., description="Formal arguments")
    body: str = Field(..., description="Expression in the formal arguments")


class DarbouxSpec(BaseModel):
    """Roles of the coordinates when eta^a = dz^a - p_i^a dq^i."""

    q: List[str] = Field(..., description="Base coordinates")
    p: List[List[str]] = Field(..., description="Momenta, one row of k names per base coordinate")
    z: List[str] = Field(..., description="Action coordinates, one per component")


class StructureSpec(BaseModel):
    """A k-contact or k-symplectic structure, explicit or canonical."""

    type: Literal["kcontact", "ksymplectic", "canonical_kcontact", "canonical_ksymplectic"] = Field(
        ..., description="Kind of structure"
    )
    eta: List[str] = Field(default_factory=list, description="Components of the k-contact form")
    omega: List[str] = Field(default_factory=list, description="Components of the k-symplectic form")
    potential: List[str] = Field(default_factory=list, description="Optional potential Theta with d Theta = omega")
    polarization: List[Dict[str, str]] = Field(default_factory=list, description="Vector fields spanning a polarization")
    open: List[str] = Field(default_factory=list, description="Open conditions f != 0")
    darboux: Optional[DarbouxSpec] = Field(default=None, description="Darboux roles of the coordinates")
    symplectise: bool = Field(default=False, description="Also verify the symplectisation")
    n: Optional[int] = Field(default=None, ge=1, description="Base dimension of a canonical model")
    k: Optional[int] = Field(default=None, ge=1, description="Number of components of a canonical model")
    convention: Literal["dtheta", "darboux"] = Field(default="dtheta", description="Sign convention of canonical k-symplectic models")

    @model_validator(mode="after")
    def _check_kind(self) -> "StructureSpec":
        if self.type == "kcontact" and not self.eta:
            raise ValueError("a kcontact structure needs eta")
        if self.type == "ksymplectic" and not self.omega:
            raise ValueError("a ksymplectic structure needs omega")
        if self.type.startswith("canonical") and (self.n is None or self.k is None):
            raise ValueError(f"a {self.type} structure needs n and k")
        return self


class AlgebraSpec(BaseModel):
    """Lie algebra by basis names and nonzero brackets."""

    basis: List[str] = Field(..., min_length=1, description="Basis names")
    brackets: Dict[str, Dict[str, Scalar]] = Field(
        default_factory=dict, description='Nonzero brackets keyed "a,b", e.g. {"e1,e2": {"e2": 2}}'
    )

    @field_validator("brackets")
    @classmethod
    def _pair_keys(cls, value: Dict[str, Dict[str, Scalar]]) -> Dict[str, Dict[str, Scalar]]:
        for key in value:
            if len([part for part in key.split(",") if part.strip()]) != 2:
                raise ValueError(f"bracket key '{key}' must name two basis elements as 'a,b'")
        return value

    def pairs(self) -> Dict[tuple, Dict[str, Scalar]]:
        result = {}
        for key, values in self.brackets.items():
            a, b = (part.strip() for part in key.split(","))
            result[(a, b)] = values
        return result


class ActionSpec(BaseModel):
    """Infinitesimal action by fundamental vector fields."""

    algebra: AlgebraSpec = Field(..., description="The acting Lie algebra")
    fields: Dict[str, Dict[str, str]] = Field(..., description="Fundamental field of each basis element")
    sign: Literal[-1, 1] = Field(default=-1, description="Bracket sign convention of the fundamental fields")


class LevelSetSpec(BaseModel):
    """Parametrization of the momentum level set as a graph."""

    chart: SubChartSpec = Field(..., description="Level-set chart, a subset of the parent coordinates")
    embedding: Dict[str, str] = Field(
        default_factory=dict, description="Parent coordinates not kept by the chart, as functions on it"
    )
    open: List[str] = Field(default_factory=list, description="Open conditions on the level-set chart")


class QuotientSpec(BaseModel):
    """Reduced chart, projection from the level set and the claimed reduced form."""

    chart: SubChartSpec = Field(..., description="Reduced chart")
    projection: Dict[str, str] = Field(..., description="Reduced coordinates as functions on the level-set chart")
    section: Dict[str, str] = Field(default_factory=dict, description="Level-set coordinates as functions on the reduced chart")
    eta: List[str] = Field(..., description="Claimed reduced k-contact form")
    hamiltonian: Optional[str] = Field(default=None, description="Claimed reduced Hamiltonian")
    open: List[str] = Field(default_factory=list, description="Open conditions on the reduced chart")


class IntegrabilitySpec(BaseModel):
    """Restriction under which the Hamiltonian k-vector field is expected to be integrable."""

    on: Dict[str, str] = Field(default_factory=dict, description="Submanifold as coordinate substitutions")
    coordinates: List[str] = Field(default_factory=list, description="Coordinate subsystem")


class FlowSpec(BaseModel):
    """Numerical comparison of unreduced and reduced flows."""

    start: Dict[str, Scalar] = Field(..., description="Start point on the level-set chart, parameters included")
    component: int = Field(default=1, ge=1, description="Which field of the k-vector field to integrate")
    final_time: float = Field(default=1.0, gt=0, description="Integration horizon")
    dt: float = Field(default=1e-3, gt=0, description="RK4 step")
    tolerance: float = Field(default=1e-6, gt=0, description="Largest accepted projected difference")


class DynamicsSpec(BaseModel):
    """Hamiltonian with gauge choices and dynamics checks."""

    hamiltonian: str = Field(..., description="Hamiltonian function")
    gauge: Dict[str, Scalar] = Field(default_factory=dict, description='Gauge slots "X<alpha>.<coord>" and their values')
    integrability: Optional[IntegrabilitySpec] = Field(default=None, description="Expected restricted integrability")
    flow: Optional[FlowSpec] = Field(default=None, description="Reduced-flow comparison")


class SimulateSpec(BaseModel):
    """Method-of-lines integration of a one-field k = 2 system."""

    initial: Dict[str, str] = Field(..., description="Initial profiles in x for u, p^t and s^t")
    params: Dict[str, Scalar] = Field(default_factory=dict, description="Numerical values of the chart parameters")
    grid: Optional[str] = Field(default=None, description="Grid as <nx>x<nt>; default integrator.grid")
    final_time: Optional[float] = Field(default=None, gt=0, description="Integration horizon; default integrator.final_time")
    exact: Optional[Literal["damped_standing_wave"]] = Field(default=None, description="Analytic solution to compare against")
    refinements: int = Field(default=3, ge=1, description="Halvings in the convergence study")
    tolerance: float = Field(default=1e-3, gt=0, description="Largest accepted error on the target grid")
    min_order: float = Field(default=1.9, description="Smallest accepted convergence order")


class ProbeSpec(BaseModel):
    """Reduction-group probe on the symplectisation."""

    scale_coordinate: str = Field(default="s", description="Name of the symplectisation coordinate")


class Expectation(BaseModel):
    """Expected summary entries of a stage, with the location they come from."""

    model_config = ConfigDict(extra="allow")

    source: str = Field(..., description="Where the expectation comes from")

    @property
    def values(self) -> Dict[str, Any]:
        return dict(self.model_extra or {})


class ScenarioDocument(BaseModel):
    """A complete scenario file."""

    id: str = Field(..., pattern=r"^[a-z0-9_]+$", description="Registry identifier")
    title: str = Field(..., description="Human-readable title")
    source: str = Field(default="", description="Where the example comes from")
    chart: ChartSpec = Field(..., description="Ambient chart")
    opaque: Dict[str, int] = Field(default_factory=dict, description="Opaque symbols and their argument counts")
    bindings: Dict[str, BindingSpec] = Field(default_factory=dict, description="Concrete bodies of opaque symbols")
    structure: StructureSpec = Field(..., description="The geometric structure")
    action: Optional[ActionSpec] = Field(default=None, description="Infinitesimal symmetry action")
    momentum: Optional[List[List[str]]] = Field(default=None, description="Stated momentum rows, checked against the computed map")
    mu: Optional[List[List[Scalar]]] = Field(default=None, description="Momentum value, one row per component")
    level_set: Optional[LevelSetSpec] = Field(default=None, description="Level-set parametrization")
    quotient: Optional[QuotientSpec] = Field(default=None, description="Quotient presentation")
    probe: Optional[ProbeSpec] = Field(default=None, description="Run the reduction-group probe")
    dynamics: Optional[DynamicsSpec] = Field(default=None, description="Hamiltonian dynamics")
    simulate: Optional[SimulateSpec] = Field(default=None, description="Numerical integration")
    expected: Dict[str, Expectation] = Field(default_factory=dict, description="Expected stage outcomes")

    @model_validator(mode="after")
    def _check_references(self) -> "ScenarioDocument":
        if self.action is not None:
            missing = [name for name in self.action.algebra.basis if name not in self.action.fields]
            extra = sorted(set(self.action.fields) - set(self.action.algebra.basis))
            if missing or extra:
                raise ValueError(f"action fields must match the algebra basis (missing {missing}, extra {extra})")
        if self.level_set is not None and self.mu is None:
            raise ValueError("a level set needs mu")
        if self.quotient is not None and self.level_set is None:
            raise ValueError("a quotient needs a level set")
        if self.mu is not None and self.action is not None:
            width = len(self.action.algebra.basis)
            for row in self.mu:
                if len(row) != width:
                    raise ValueError(f"mu row of length {len(row)} for a {width}-dimensional algebra")
        return self
