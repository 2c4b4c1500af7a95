"""
Exterior calculus on a coordinate chart.

Forms are stored sparsely over strictly increasing index tuples with
normalized coefficients. Sign conventions:

- d(f dx^I) = (df/dx^j) dx^j ^ dx^I
- the interior product contracts the first slot
- for a 2-form the evaluated matrix is A[i][j] = coefficient of dx^i ^ dx^j
  for i < j, extended antisymmetrically, so omega(v, w) = v^T A w
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import sympy
from sympy import Expr, Matrix, S, Symbol

from components.symbolic_core import (
    Binding,
    Chart,
    Number,
    Point,
    evaluate,
    expr_equal,
    normalize,
    parse_expression,
    substitute,
)
from utils.errors import (
    ChartMismatchError,
    DegreeError,
    NameResolutionError,
    ParseError,
    SemanticError,
)

Indices = Tuple[int, ...]

_DIFFERENTIAL = re.compile(r"\bd\(\s*([A-Za-z_][A-Za-z0-9_]*)\s*\)")
_WEDGE = re.compile(r"(\bd\(\s*[A-Za-z_][A-Za-z0-9_]*\s*\))\s*\^\s*(?=d\()")


def _sort_with_sign(indices: Sequence[int]) -> Tuple[int, Optional[Indices]]:
    """Sign of the sorting permutation, or (0, None) for a repeated index."""
    if len(set(indices)) != len(indices):
        return 0, None
    inversions = sum(
        1
        for a in range(len(indices))
        for b in range(a + 1, len(indices))
        if indices[a] > indices[b]
    )
    return (-1 if inversions % 2 else 1), tuple(sorted(indices))


def _same_chart(a: Chart, b: Chart, what: str) -> None:
    if a != b:
        raise ChartMismatchError(f"{what}: chart {a.name} vs chart {b.name}")


@dataclass(frozen=True, eq=False)
class Form:
    """Differential form of fixed degree on a chart."""

    chart: Chart
    degree: int
    terms: Mapping[Indices, Expr] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.degree < 0:
            raise DegreeError(f"negative form degree {self.degree}")
        collected: Dict[Indices, Expr] = {}
        for indices, coefficient in self.terms.items():
            indices = tuple(indices)
            if len(indices) != self.degree:
                raise DegreeError(
                    f"index tuple {indices} in a form of degree {self.degree}"
                )
            if any(not 0 <= i < self.chart.dim for i in indices):
                raise NameResolutionError(f"index tuple {indices} outside chart {self.chart.name}")
            sign, canonical = _sort_with_sign(indices)
            if canonical is None:
                continue
            collected[canonical] = collected.get(canonical, S.Zero) + sign * sympy.sympify(coefficient)
        normalized = {}
        for indices in sorted(collected):
            coefficient = normalize(collected[indices])
            if coefficient != 0:
                normalized[indices] = coefficient
        if normalized and self.degree > self.chart.dim:
            raise DegreeError(f"degree {self.degree} exceeds chart dimension {self.chart.dim}")
        object.__setattr__(self, "terms", normalized)

    @classmethod
    def zero(cls, chart: Chart, degree: int) -> "Form":
        return cls(chart, degree, {})

    @classmethod
    def function(cls, chart: Chart, f: Any) -> "Form":
        return cls(chart, 0, {(): f})

    @classmethod
    def differential(cls, chart: Chart, coord: str) -> "Form":
        return cls(chart, 1, {(chart.index(coord),): S.One})

    @classmethod
    def from_covector(cls, chart: Chart, coefficients: Sequence[Any]) -> "Form":
        return cls(chart, 1, {(i,): c for i, c in enumerate(coefficients)})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def scalar(self) -> Expr:
        """Value of a 0-form."""
        if self.degree != 0:
            raise DegreeError(f"form of degree {self.degree} is not a function")
        return self.terms.get((), S.Zero)

    def coefficient(self, indices: Sequence[int]) -> Expr:
        sign, canonical = _sort_with_sign(indices)
        if canonical is None:
            return S.Zero
        return sign * self.terms.get(canonical, S.Zero)

    def _combine(self, other: "Form", factor: int) -> "Form":
        _same_chart(self.chart, other.chart, "form sum")
        if self.degree != other.degree:
            raise DegreeError(f"adding forms of degree {self.degree} and {other.degree}")
        terms = dict(self.terms)
        for indices, c in other.terms.items():
            terms[indices] = terms.get(indices, S.Zero) + factor * c
        return Form(self.chart, self.degree, terms)

    def __add__(self, other: "Form") -> "Form":
        return self._combine(other, 1)

    def __sub__(self, other: "Form") -> "Form":
        return self._combine(other, -1)

    def __neg__(self) -> "Form":
        return self.scale(-1)

    def scale(self, f: Any) -> "Form":
        f = sympy.sympify(f)
        return Form(self.chart, self.degree, {i: f * c for i, c in self.terms.items()})

    def map_coefficients(self, fn: Any) -> "Form":
        return Form(self.chart, self.degree, {i: fn(c) for i, c in self.terms.items()})

    def equals(self, other: "Form") -> bool:
        if self.chart != other.chart or self.degree != other.degree:
            return False
        return all(expr_equal(c, 0) for c in (self - other).terms.values())

    def covector_at(self, point: Point, bindings: Optional[Mapping[str, Binding]] = None) -> List[Number]:
        if self.degree != 1:
            raise DegreeError(f"covector of a degree {self.degree} form")
        row: List[Number] = [sympy.Rational(0)] * self.chart.dim
        for (i,), c in self.terms.items():
            row[i] = evaluate(c, point, bindings)
        return row

    def matrix_at(self, point: Point, bindings: Optional[Mapping[str, Binding]] = None) -> List[List[Number]]:
        if self.degree != 2:
            raise DegreeError(f"matrix of a degree {self.degree} form")
        n = self.chart.dim
        matrix: List[List[Number]] = [[sympy.Rational(0)] * n for _ in range(n)]
        for (i, j), c in self.terms.items():
            value = evaluate(c, point, bindings)
            matrix[i][j] = value
            matrix[j][i] = -value
        return matrix

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for indices, c in self.terms.items():
            wedge = "^".join(f"d({self.chart.coords[i]})" for i in indices)
            if not wedge:
                parts.append(f"({c})")
            elif c == 1:
                parts.append(wedge)
            else:
                parts.append(f"({c})*{wedge}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"Form[{self.chart.name}, deg {self.degree}]({self.to_text()})"


@dataclass(frozen=True, eq=False)
class VForm:
    """R^k-valued form: k component forms of equal degree on one chart."""

    components: Tuple[Form, ...]

    def __post_init__(self) -> None:
        components = tuple(self.components)
        if not components:
            raise SemanticError("a vector-valued form needs at least one component")
        chart = components[0].chart
        for form in components[1:]:
            _same_chart(chart, form.chart, "vector-valued form")
        degrees = [form.degree for form in components]
        if len(set(degrees)) != 1:
            raise DegreeError(f"VForm degree mismatch: component degrees {degrees}")
        object.__setattr__(self, "components", components)

    @property
    def chart(self) -> Chart:
        return self.components[0].chart

    @property
    def degree(self) -> int:
        return self.components[0].degree

    @property
    def k(self) -> int:
        return len(self.components)

    def __getitem__(self, alpha: int) -> Form:
        return self.components[alpha]

    def __iter__(self) -> Any:
        return iter(self.components)

    def equals(self, other: "VForm") -> bool:
        return self.k == other.k and all(a.equals(b) for a, b in zip(self, other))

    def to_text(self) -> List[str]:
        return [form.to_text() for form in self.components]

    def __repr__(self) -> str:
        return f"VForm({self.to_text()})"


AnyForm = Union[Form, VForm]


# ---------------------------------------------------------------------------
# Vector fields and maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VectorField:
    """Vector field with one component per chart coordinate."""

    chart: Chart
    components: Tuple[Expr, ...]

    def __post_init__(self) -> None:
        components = tuple(normalize(c) for c in self.components)
        if len(components) != self.chart.dim:
            raise SemanticError(
                f"vector field with {len(components)} components on the "
                f"{self.chart.dim}-dimensional chart {self.chart.name}"
            )
        object.__setattr__(self, "components", components)

    @classmethod
    def from_mapping(cls, chart: Chart, mapping: Mapping[str, Any]) -> "VectorField":
        components = [S.Zero] * chart.dim
        for coord, value in mapping.items():
            components[chart.index(coord)] = sympy.sympify(value)
        return cls(chart, tuple(components))

    @classmethod
    def zero(cls, chart: Chart) -> "VectorField":
        return cls(chart, (S.Zero,) * chart.dim)

    @classmethod
    def coordinate(cls, chart: Chart, coord: str) -> "VectorField":
        return cls.from_mapping(chart, {coord: 1})

    def component(self, coord: str) -> Expr:
        return self.components[self.chart.index(coord)]

    def apply(self, f: Any) -> Expr:
        """Directional derivative X(f)."""
        f = sympy.sympify(f)
        return sympy.Add(
            *[c * sympy.diff(f, x) for c, x in zip(self.components, self.chart.symbols) if c != 0]
        )

    def __add__(self, other: "VectorField") -> "VectorField":
        _same_chart(self.chart, other.chart, "vector field sum")
        return VectorField(self.chart, tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        _same_chart(self.chart, other.chart, "vector field difference")
        return VectorField(self.chart, tuple(a - b for a, b in zip(self.components, other.components)))

    def __neg__(self) -> "VectorField":
        return self.scale(-1)

    def scale(self, f: Any) -> "VectorField":
        f = sympy.sympify(f)
        return VectorField(self.chart, tuple(f * c for c in self.components))

    def map_components(self, fn: Any) -> "VectorField":
        return VectorField(self.chart, tuple(fn(c) for c in self.components))

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.components)

    def equals(self, other: "VectorField") -> bool:
        return self.chart == other.chart and all(
            expr_equal(a, b) for a, b in zip(self.components, other.components)
        )

    def at(self, point: Point, bindings: Optional[Mapping[str, Binding]] = None) -> List[Number]:
        return [evaluate(c, point, bindings) for c in self.components]

    def as_strings(self) -> Dict[str, str]:
        return {x: str(c) for x, c in zip(self.chart.coords, self.components) if c != 0}

    def __repr__(self) -> str:
        return f"VectorField[{self.chart.name}]({self.as_strings()})"


@dataclass(frozen=True, eq=False)
class KVectorField:
    """Ordered k-tuple of vector fields on one chart."""

    fields: Tuple[VectorField, ...]

    def __post_init__(self) -> None:
        fields = tuple(self.fields)
        if not fields:
            raise SemanticError("a k-vector field needs k >= 1 components")
        for X in fields[1:]:
            _same_chart(fields[0].chart, X.chart, "k-vector field")
        object.__setattr__(self, "fields", fields)

    @property
    def chart(self) -> Chart:
        return self.fields[0].chart

    @property
    def k(self) -> int:
        return len(self.fields)

    def __getitem__(self, alpha: int) -> VectorField:
        return self.fields[alpha]

    def __iter__(self) -> Any:
        return iter(self.fields)

    def __add__(self, other: "KVectorField") -> "KVectorField":
        return KVectorField(tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other: "KVectorField") -> "KVectorField":
        return KVectorField(tuple(a - b for a, b in zip(self, other)))

    def as_strings(self) -> List[Dict[str, str]]:
        return [X.as_strings() for X in self.fields]


@dataclass(frozen=True, eq=False)
class SmoothMap:
    """Map between charts: one source-coordinate expression per target coordinate."""

    source: Chart
    target: Chart
    components: Tuple[Expr, ...]

    def __post_init__(self) -> None:
        components = tuple(sympy.sympify(c) for c in self.components)
        if len(components) != self.target.dim:
            raise SemanticError(
                f"map {self.source.name} -> {self.target.name} has {len(components)} "
                f"components for {self.target.dim} target coordinates"
            )
        object.__setattr__(self, "components", components)

    @classmethod
    def from_mapping(cls, source: Chart, target: Chart, mapping: Mapping[str, Any]) -> "SmoothMap":
        missing = [c for c in target.coords if c not in mapping]
        if missing:
            raise SemanticError(f"map to {target.name} misses components for {missing}")
        extra = sorted(set(mapping) - set(target.coords))
        if extra:
            raise NameResolutionError(f"map to {target.name} names unknown coordinates {extra}")
        return cls(source, target, tuple(sympy.sympify(mapping[c]) for c in target.coords))

    @classmethod
    def identity(cls, chart: Chart) -> "SmoothMap":
        return cls(chart, chart, chart.symbols)

    @property
    def substitutions(self) -> Dict[Symbol, Expr]:
        return dict(zip(self.target.symbols, self.components))

    def pull(self, expr: Any) -> Expr:
        """Composite expr ∘ self, an expression in source coordinates."""
        return substitute(sympy.sympify(expr), self.substitutions, self.target)

    def compose(self, inner: "SmoothMap") -> "SmoothMap":
        """self ∘ inner."""
        _same_chart(inner.target, self.source, "map composition")
        return SmoothMap(inner.source, self.target, tuple(inner.pull(c) for c in self.components))

    def jacobian(self) -> Matrix:
        return Matrix(
            [[sympy.diff(c, x) for x in self.source.symbols] for c in self.components]
        )

    def jacobian_at(self, point: Point, bindings: Optional[Mapping[str, Binding]] = None) -> List[List[Number]]:
        return [[evaluate(entry, point, bindings) for entry in row] for row in self.jacobian().tolist()]

    def apply_at(self, point: Point, bindings: Optional[Mapping[str, Binding]] = None) -> Point:
        values: Dict[str, Any] = {
            c: evaluate(e, point, bindings) for c, e in zip(self.target.coords, self.components)
        }
        for p in self.target.params:
            values[p] = point[p]
        return Point(self.target, values)

    def pushforward(self, X: VectorField) -> List[Expr]:
        """Components of dF(X) in target directions, as source-coordinate expressions."""
        _same_chart(X.chart, self.source, "pushforward")
        return [X.apply(c) for c in self.components]

    def as_strings(self) -> Dict[str, str]:
        return {c: str(e) for c, e in zip(self.target.coords, self.components)}


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def wedge(a: Form, b: Form) -> Form:
    """Graded-antisymmetric product."""
    _same_chart(a.chart, b.chart, "wedge")
    terms: Dict[Indices, Expr] = {}
    for I, f in a.terms.items():
        for J, g in b.terms.items():
            sign, K = _sort_with_sign(I + J)
            if K is None:
                continue
            terms[K] = terms.get(K, S.Zero) + sign * f * g
    degree = a.degree + b.degree
    return Form(a.chart, degree, terms)


def _d_form(a: Form) -> Form:
    terms: Dict[Indices, Expr] = {}
    for I, f in a.terms.items():
        for j, x in enumerate(a.chart.symbols):
            if j in I:
                continue
            df = sympy.diff(f, x)
            if df == 0:
                continue
            sign, K = _sort_with_sign((j,) + I)
            terms[K] = terms.get(K, S.Zero) + sign * df
    return Form(a.chart, a.degree + 1, terms)


def d(a: AnyForm) -> AnyForm:
    """Exterior derivative, componentwise on vector-valued forms."""
    if isinstance(a, VForm):
        return VForm(tuple(_d_form(f) for f in a))
    return _d_form(a)


def _iota_form(X: VectorField, a: Form) -> Form:
    _same_chart(X.chart, a.chart, "interior product")
    if a.degree == 0:
        raise DegreeError("interior product of a 0-form is undefined")
    terms: Dict[Indices, Expr] = {}
    for I, f in a.terms.items():
        for r, i in enumerate(I):
            if X.components[i] == 0:
                continue
            rest = I[:r] + I[r + 1:]
            terms[rest] = terms.get(rest, S.Zero) + (-1) ** r * X.components[i] * f
    return Form(a.chart, a.degree - 1, terms)


def iota(X: VectorField, a: AnyForm) -> AnyForm:
    """Interior product on the first slot."""
    if isinstance(a, VForm):
        return VForm(tuple(_iota_form(X, f) for f in a))
    return _iota_form(X, a)


def _lie_form(X: VectorField, a: Form) -> Form:
    _same_chart(X.chart, a.chart, "Lie derivative")
    if a.degree == 0:
        return Form.function(a.chart, X.apply(a.scalar))
    return _iota_form(X, _d_form(a)) + _d_form(_iota_form(X, a))


def lie_derivative(X: VectorField, a: AnyForm) -> AnyForm:
    """Lie derivative through Cartan's formula."""
    if isinstance(a, VForm):
        return VForm(tuple(_lie_form(X, f) for f in a))
    return _lie_form(X, a)


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y]^i = X(Y^i) - Y(X^i)."""
    _same_chart(X.chart, Y.chart, "Lie bracket")
    return VectorField(
        X.chart,
        tuple(X.apply(y) - Y.apply(x) for x, y in zip(X.components, Y.components)),
    )


def contract_kv(X: KVectorField, theta: VForm) -> Form:
    """Sum over alpha of iota(X_alpha, theta^alpha)."""
    if X.k != theta.k:
        raise SemanticError(f"k mismatch: k-vector field has k={X.k}, form has k={theta.k}")
    result = Form.zero(theta.chart, theta.degree - 1) if theta.degree > 0 else None
    if result is None:
        raise DegreeError("contraction of a vector-valued 0-form")
    for field_, form in zip(X, theta):
        result = result + _iota_form(field_, form)
    return result


def _pullback_form(f: SmoothMap, a: Form) -> Form:
    _same_chart(a.chart, f.target, "pullback")
    differentials = [
        _d_form(Form.function(f.source, c)) for c in f.components
    ]
    result = Form.zero(f.source, a.degree)
    for I, c in a.terms.items():
        term = Form.function(f.source, f.pull(c))
        for i in I:
            term = wedge(term, differentials[i])
        result = result + term
    return result


def pullback(f: SmoothMap, a: AnyForm) -> AnyForm:
    """Pullback along a smooth map."""
    if isinstance(a, VForm):
        return VForm(tuple(_pullback_form(f, form) for form in a))
    return _pullback_form(f, a)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _wedges_as_products(expr: Expr) -> Expr:
    """Rewrite ``a ** w`` with a form-valued exponent as the ordered product ``a * w``."""
    if expr.is_Atom:
        return expr
    args = [_wedges_as_products(arg) for arg in expr.args]
    if expr.is_Pow and not args[1].is_commutative:
        return sympy.Mul(*args)
    return expr.func(*args)


def _differential_factors(factor: Expr, chart: Chart, text: str) -> List[int]:
    if factor.is_Symbol and factor.name.startswith("__d_"):
        return [chart.index(factor.name[len("__d_"):])]
    if factor.is_Pow and factor.base.is_Symbol and factor.exp.is_Integer and factor.exp > 0:
        return _differential_factors(factor.base, chart, text) * int(factor.exp)
    raise ParseError(f"cannot read '{factor}' as a wedge of differentials in form '{text}'")


def parse_form(
    text: str,
    chart: Chart,
    opaque: Optional[Mapping[str, int]] = None,
    degree: Optional[int] = None,
) -> Form:
    """
    Parse a form such as ``"d(st) - p1t*d(q1)"`` or ``"d(q)^d(p)"``.

    Coordinate differentials are written ``d(x)``, wedge products ``^``.
    A wedge distributes over parenthesized sums: ``(d(a) + d(b))^d(c)``.
    """
    source = text = str(text)
    wedged = _WEDGE.sub(r"\1*", text)
    while wedged != text:
        text, wedged = wedged, _WEDGE.sub(r"\1*", wedged)
    differentials: Dict[str, Symbol] = {}

    def placeholder(match: "re.Match[str]") -> str:
        coord = match.group(1)
        chart.index(coord)
        name = f"__d_{coord}"
        differentials[name] = Symbol(name, commutative=False)
        return name

    rewritten = _DIFFERENTIAL.sub(placeholder, text)
    expr = parse_expression(rewritten, chart, opaque, extra_names=differentials, display=source)
    expr = sympy.expand(_wedges_as_products(expr))
    terms: Dict[Indices, Expr] = {}
    degrees = set()
    for term in sympy.Add.make_args(expr):
        if term == 0:
            continue
        commutative, ordered = term.args_cnc()
        indices: List[int] = []
        for factor in ordered:
            indices.extend(_differential_factors(factor, chart, source))
        degrees.add(len(indices))
        sign, canonical = _sort_with_sign(indices)
        if canonical is None:
            continue
        terms[canonical] = terms.get(canonical, S.Zero) + sign * sympy.Mul(*commutative)
    if len(degrees) > 1:
        raise DegreeError(f"mixed degrees {sorted(degrees)} in form '{source}'")
    found = degrees.pop() if degrees else (degree if degree is not None else 0)
    if degree is not None and found != degree:
        raise DegreeError(f"form '{source}' has degree {found}, expected {degree}")
    return Form(chart, found, terms)


def parse_vform(
    texts: Sequence[str],
    chart: Chart,
    opaque: Optional[Mapping[str, int]] = None,
) -> VForm:
    forms = [parse_form(t, chart, opaque) for t in texts]
    nonzero = {f.degree for f in forms if not f.is_zero}
    if len(nonzero) > 1:
        raise DegreeError(
            f"VForm degree mismatch: component degrees {[f.degree for f in forms]}"
        )
    if nonzero:
        common = nonzero.pop()
        forms = [f if f.degree == common else Form.zero(chart, common) for f in forms]
    return VForm(tuple(forms))


def parse_vector_field(
    mapping: Mapping[str, Any],
    chart: Chart,
    opaque: Optional[Mapping[str, int]] = None,
) -> VectorField:
    return VectorField.from_mapping(
        chart, {coord: parse_expression(v, chart, opaque) for coord, v in mapping.items()}
    )
