"""
Exact symbolic scalar expressions on coordinate charts.

Expressions are plain sympy expressions built from rational constants,
chart symbols, the four arithmetic operations, integer powers and
applications of opaque functions. Opaque functions stand for the
undetermined functions of a model (couplings, gauge functions); their
partial derivatives are again opaque functions named ``C_d1``, ``C_d1_d2``
and so on, so the expression class is closed under differentiation.

Everything here is immutable and safe to share between threads.
"""

from __future__ import annotations

import ast
import logging
import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import combinations_with_replacement
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from sympy import Expr, Float, Function, Integer, Lambda, Rational, S, Symbol
from sympy.core.function import AppliedUndef, ArgumentIndexError
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    rationalize,
    standard_transformations,
)

from utils.errors import (
    EvaluationError,
    NameResolutionError,
    ParseError,
    SamplingError,
    SemanticError,
)

logger = logging.getLogger(__name__)

NAME_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
RESERVED_NAMES = frozenset({"d"})
DEFAULT_PROBABILISTIC_POINTS = 64
PROBABILISTIC_TOLERANCE = 1e-9
_probabilistic_points = DEFAULT_PROBABILISTIC_POINTS

_TRANSFORMATIONS = standard_transformations + (convert_xor, rationalize)
_GLOBALS = {
    "Integer": Integer,
    "Float": Float,
    "Rational": Rational,
    "Symbol": Symbol,
    "Function": Function,
}

Number = Union[Rational, float]


# ---------------------------------------------------------------------------
# Charts and points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chart:
    """A coordinate chart: ordered coordinates plus named parameters."""

    name: str
    coords: Tuple[str, ...]
    params: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "params", tuple(self.params))
        names = self.coords + self.params
        for name in names:
            if not NAME_PATTERN.match(name) or name in RESERVED_NAMES:
                raise SemanticError(f"chart {self.name}: invalid name '{name}'")
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise SemanticError(
                f"chart {self.name}: coordinate and parameter names must be distinct, "
                f"repeated {duplicates}"
            )

    @property
    def dim(self) -> int:
        return len(self.coords)

    @cached_property
    def symbols(self) -> Tuple[Symbol, ...]:
        return tuple(Symbol(c) for c in self.coords)

    @cached_property
    def param_symbols(self) -> Tuple[Symbol, ...]:
        return tuple(Symbol(p) for p in self.params)

    @cached_property
    def _positions(self) -> Dict[str, int]:
        return {c: i for i, c in enumerate(self.coords)}

    def index(self, coord: Union[str, Symbol]) -> int:
        name = coord.name if isinstance(coord, Symbol) else coord
        try:
            return self._positions[name]
        except KeyError:
            raise NameResolutionError(
                f"'{name}' is not a coordinate of chart {self.name}"
            ) from None

    def coordinate(self, coord: Union[str, Symbol]) -> Symbol:
        return self.symbols[self.index(coord)]

    def symbol(self, name: str) -> Symbol:
        if name in self.coords or name in self.params:
            return Symbol(name)
        raise NameResolutionError(f"'{name}' is not a name of chart {self.name}")

    def extended(self, name: str, leading: Sequence[str]) -> "Chart":
        """Chart with extra coordinates placed before the existing ones."""
        return Chart(name, tuple(leading) + self.coords, self.params)


def as_number(value: Any) -> Number:
    """Coerce a user value to an exact rational, or a float for float input."""
    if isinstance(value, bool):
        raise SemanticError(f"not a number: {value!r}")
    if isinstance(value, int):
        return Rational(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            return Rational(value.strip())
        except (TypeError, ValueError):
            raise SemanticError(f"not a rational literal: {value!r}") from None
    if isinstance(value, sympy.Basic):
        if value.is_Rational:
            return Rational(value)
        if value.is_Number:
            return float(value)
    if isinstance(value, (np.integer,)):
        return Rational(int(value))
    if isinstance(value, (np.floating,)):
        return float(value)
    raise SemanticError(f"not a number: {value!r}")


@dataclass(frozen=True, eq=False)
class Point:
    """Assignment of a value to every coordinate and parameter of a chart."""

    chart: Chart
    values: Mapping[str, Number] = field(default_factory=dict)

    def __post_init__(self) -> None:
        names = self.chart.coords + self.chart.params
        extra = sorted(set(self.values) - set(names))
        if extra:
            raise NameResolutionError(
                f"point on chart {self.chart.name} assigns unknown names {extra}"
            )
        missing = [n for n in names if n not in self.values]
        if missing:
            raise SemanticError(
                f"point on chart {self.chart.name} misses values for {missing}"
            )
        object.__setattr__(
            self, "values", {n: as_number(self.values[n]) for n in names}
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Point):
            return NotImplemented
        return self.chart == other.chart and dict(self.values) == dict(other.values)

    def __getitem__(self, name: str) -> Number:
        return self.values[name]

    @cached_property
    def substitutions(self) -> Dict[Symbol, Expr]:
        return {
            Symbol(n): (Float(v) if isinstance(v, float) else v)
            for n, v in self.values.items()
        }

    @property
    def is_exact(self) -> bool:
        return all(not isinstance(v, float) for v in self.values.values())

    def coordinate_values(self) -> List[Number]:
        return [self.values[c] for c in self.chart.coords]

    def restrict(self, chart: Chart) -> "Point":
        """The point seen from a chart whose names are a subset of ours."""
        return Point(chart, {n: self.values[n] for n in chart.coords + chart.params})

    def as_strings(self) -> Dict[str, str]:
        return {n: str(v) for n, v in self.values.items()}


# ---------------------------------------------------------------------------
# Opaque functions
# ---------------------------------------------------------------------------


class OpaqueFunction(Function):
    """Undetermined function with named formal partial derivatives."""

    _opaque_base: str = ""
    _opaque_orders: Tuple[int, ...] = ()

    def fdiff(self, argindex: int = 1) -> Expr:
        if not 1 <= argindex <= len(self.args):
            raise ArgumentIndexError(self, argindex)
        cls = type(self)
        partial = opaque_function(
            cls._opaque_base, len(self.args), cls._opaque_orders + (argindex,)
        )
        return partial(*self.args)


def opaque_function(name: str, nargs: int, orders: Iterable[int] = ()) -> type:
    """The (cached) opaque function class for ``name`` differentiated by ``orders``."""
    return _opaque_class(name, nargs, tuple(sorted(orders)))


@lru_cache(maxsize=None)
def _opaque_class(name: str, nargs: int, orders: Tuple[int, ...]) -> type:
    label = name + "".join(f"_d{i}" for i in orders)
    return type(OpaqueFunction)(
        label,
        (OpaqueFunction,),
        {
            "nargs": nargs,
            "_opaque_base": name,
            "_opaque_orders": orders,
            "__module__": __name__,
        },
    )


def opaque_namespace(opaque: Mapping[str, int], max_order: int = 2) -> Dict[str, type]:
    """Names usable in expression strings: each opaque symbol and its partials."""
    namespace: Dict[str, type] = {}
    for name, nargs in opaque.items():
        if not NAME_PATTERN.match(name) or name in RESERVED_NAMES:
            raise SemanticError(f"invalid opaque symbol name '{name}'")
        for order in range(max_order + 1):
            for orders in combinations_with_replacement(range(1, nargs + 1), order):
                cls = opaque_function(name, nargs, orders)
                namespace[cls.__name__] = cls
    return namespace


@dataclass(frozen=True)
class Binding:
    """Concrete body for an opaque symbol, e.g. ``C(u) = u^2/2``."""

    name: str
    variables: Tuple[Symbol, ...]
    body: Expr

    def derivative(self, orders: Sequence[int]) -> Lambda:
        body = self.body
        for i in orders:
            body = sympy.diff(body, self.variables[i - 1])
        return Lambda(self.variables, body)


def bind(name: str, variables: Sequence[str], body: Union[str, Expr]) -> Binding:
    symbols = tuple(Symbol(v) for v in variables)
    if isinstance(body, str):
        scratch = Chart(f"binding_{name}", tuple(variables))
        body = parse_expression(body, scratch)
    return Binding(name, symbols, sympy.sympify(body))


def apply_bindings(expr: Expr, bindings: Optional[Mapping[str, Binding]]) -> Expr:
    """Replace bound opaque calls (and their partials) by concrete bodies."""
    if not bindings:
        return expr
    for _ in range(32):
        mapping = {}
        for call in expr.atoms(OpaqueFunction):
            cls = type(call)
            binding = bindings.get(cls._opaque_base)
            if binding is None:
                continue
            body = binding.derivative(cls._opaque_orders)
            mapping[call] = body(*call.args)
        if not mapping:
            return expr
        expr = expr.xreplace(mapping)
    raise EvaluationError("opaque bindings do not terminate")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def syntax_column(text: str) -> Optional[int]:
    """1-based column of the first syntax error in ``text``, if Python's grammar finds one."""
    stripped = text.lstrip()
    try:
        ast.parse(stripped, mode="eval")
    except SyntaxError as e:
        if e.offset is None:
            return None
        return e.offset + len(text) - len(stripped)
    return None


def _check_powers(expr: Expr, shown: str) -> None:
    for power in expr.atoms(sympy.Pow):
        if not power.is_commutative:
            continue  # wedge placeholders, resolved by the form parser
        if not power.exp.is_Integer:
            raise ParseError(f"only integer powers are allowed, got '{power}' in '{shown}'")


def parse_expression(
    text: Union[str, int, Rational],
    chart: Chart,
    opaque: Optional[Mapping[str, int]] = None,
    evaluate: bool = True,
    extra_names: Optional[Mapping[str, Any]] = None,
    display: Optional[str] = None,
) -> Expr:
    """
    Parse an infix expression over the chart's names.

    Args:
        text: Expression such as ``"p1t^2/2 + C(q1 - q2)"``
        chart: Chart providing coordinate and parameter names
        opaque: Declared opaque symbols with their argument counts
        evaluate: Let sympy evaluate while building the tree
        extra_names: Additional names (used internally for differentials)
        display: Text the user wrote, when ``text`` is a rewrite of it

    Returns:
        The parsed expression

    Raises:
        ParseError: bad syntax (with the column in the user's text) or a
            non-integer power
    """
    if not isinstance(text, str):
        return sympy.sympify(text)
    shown = display if display is not None else text
    local_dict: Dict[str, Any] = {n: Symbol(n) for n in chart.coords + chart.params}
    local_dict.update(opaque_namespace(opaque or {}))
    if extra_names:
        local_dict.update(extra_names)
    try:
        expr = parse_expr(
            text,
            local_dict=local_dict,
            global_dict=dict(_GLOBALS),
            transformations=_TRANSFORMATIONS,
            evaluate=evaluate,
        )
    except (SyntaxError, sympy.SympifyError) as e:
        raise ParseError(
            f"cannot parse expression '{shown}': {getattr(e, 'msg', e)}",
            column=syntax_column(shown),
        ) from None
    except TypeError as e:
        raise SemanticError(f"bad expression '{shown}': {e}") from None
    except Exception as e:  # tokenizer errors surface under several types
        raise ParseError(f"cannot parse expression '{shown}': {e}", column=syntax_column(shown)) from None
    expr = sympy.sympify(expr)
    _check_powers(expr, shown)
    allowed = set(local_dict)
    unknown = sorted(s.name for s in expr.free_symbols if s.name not in allowed)
    if unknown:
        raise NameResolutionError(f"unknown name(s) {unknown} in '{shown}'")
    foreign = sorted({type(f).__name__ for f in expr.atoms(AppliedUndef)})
    if foreign:
        raise NameResolutionError(f"undeclared function(s) {foreign} in '{shown}'")
    return expr


# ---------------------------------------------------------------------------
# Calculus and substitution
# ---------------------------------------------------------------------------


def differentiate(expr: Expr, coord: Union[str, Symbol], chart: Chart) -> Expr:
    """Partial derivative with respect to a chart coordinate."""
    return sympy.diff(sympy.sympify(expr), chart.coordinate(coord))


def substitute(
    expr: Expr, mapping: Mapping[Union[str, Symbol], Any], chart: Chart
) -> Expr:
    """Simultaneous substitution; every chart coordinate in ``expr`` must be mapped."""
    expr = sympy.sympify(expr)
    replacements = {
        (k if isinstance(k, Symbol) else Symbol(k)): sympy.sympify(v)
        for k, v in mapping.items()
    }
    missing = sorted(
        s.name
        for s in expr.free_symbols
        if s.name in chart.coords and s not in replacements
    )
    if missing:
        raise NameResolutionError(f"substitution misses coordinate(s) {missing}")
    return expr.xreplace(replacements)


def normalize(expr: Expr) -> Expr:
    """Rational normal form with opaque-call arguments normalized first."""
    expr = sympy.sympify(expr)
    calls = expr.atoms(OpaqueFunction)
    if calls:
        expr = expr.xreplace(
            {c: c.func(*[normalize(a) for a in c.args]) for c in calls}
        )
    return sympy.cancel(sympy.expand(expr))


def _is_rational_function(expr: Expr) -> bool:
    for node in sympy.preorder_traversal(expr):
        if node.is_Number and not node.is_Rational:
            return False
        if node.is_Pow and not node.exp.is_Integer:
            return False
        if node.is_Function and not isinstance(node, OpaqueFunction):
            return False
    return True


def _singular_subterm(expr: Expr, subs: Mapping[Symbol, Expr]) -> str:
    for node in sympy.preorder_traversal(expr):
        if node.is_Pow and node.exp.is_negative:
            base = node.base.xreplace(subs)
            if base == 0:
                return str(node)
    return str(expr)


def evaluate(
    expr: Expr,
    point: Point,
    bindings: Optional[Mapping[str, Binding]] = None,
) -> Number:
    """
    Evaluate an expression at a point.

    Returns an exact Rational when all inputs are rational, a float otherwise.

    Raises:
        EvaluationError: unbound opaque symbol, unassigned name, or a
            division by zero (the message names the offending subterm)
    """
    expr = apply_bindings(sympy.sympify(expr), bindings)
    value = expr.xreplace(point.substitutions)
    unbound = sorted({type(c)._opaque_base for c in value.atoms(OpaqueFunction)})
    if unbound:
        raise EvaluationError(f"unbound opaque symbol(s) {unbound}")
    if value.free_symbols:
        names = sorted(s.name for s in value.free_symbols)
        raise EvaluationError(f"unassigned name(s) {names} in {expr}")
    if value.has(S.NaN, S.ComplexInfinity, S.Infinity, S.NegativeInfinity):
        raise EvaluationError(
            f"division by zero in subterm {_singular_subterm(expr, point.substitutions)}"
        )
    if value.is_Rational:
        return Rational(value)
    try:
        result = complex(value)
    except TypeError:
        raise EvaluationError(f"cannot evaluate {expr} to a number") from None
    if result.imag != 0:
        raise EvaluationError(f"{expr} evaluates to a non-real value")
    return result.real


# ---------------------------------------------------------------------------
# Equality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Equality:
    """Outcome of expr_equal; truthy iff equal."""

    equal: bool
    method: str

    def __bool__(self) -> bool:
        return self.equal


def _random_rational(rng: np.random.Generator, num: int = 9, den: int = 5) -> Rational:
    return Rational(int(rng.integers(-num, num + 1)), int(rng.integers(1, den + 1)))


def _random_bindings(expr: Expr, rng: np.random.Generator) -> Dict[str, Binding]:
    bindings: Dict[str, Binding] = {}
    for call in expr.atoms(OpaqueFunction):
        cls = type(call)
        if cls._opaque_base in bindings:
            continue
        variables = tuple(Symbol(f"_u{i}") for i in range(len(call.args)))
        body = S.Zero
        for degree in range(4):
            for monomial in combinations_with_replacement(variables, degree):
                body += _random_rational(rng) * sympy.Mul(*monomial)
        bindings[cls._opaque_base] = Binding(cls._opaque_base, variables, body)
    return bindings


def configure_equality(config: Optional[Mapping[str, Any]] = None) -> int:
    """Set the number of random points used by probabilistic equality from the equality section."""
    global _probabilistic_points
    points = int((config or {}).get("equality", {}).get("probabilistic_points", DEFAULT_PROBABILISTIC_POINTS))
    if points < 1:
        raise SemanticError(f"equality.probabilistic_points must be positive, got {points}")
    _probabilistic_points = points
    return points


def expr_equal(
    a: Expr,
    b: Expr,
    points: Optional[int] = None,
    seed: int = 0,
) -> Equality:
    """
    Decide a == b.

    The rational normal form decides whenever the difference is a rational
    function of symbols and opaque calls. Otherwise the difference is
    evaluated at ``points`` random rational points with random polynomial
    bindings for opaque symbols, and the result is labeled probabilistic.
    """
    difference = normalize(sympy.sympify(a) - sympy.sympify(b))
    if difference == 0:
        return Equality(True, "normal form")
    if _is_rational_function(difference):
        return Equality(False, "normal form")

    points = points or _probabilistic_points
    rng = np.random.default_rng(seed)
    bindings = _random_bindings(difference, rng)
    names = sorted(s.name for s in difference.free_symbols)
    scratch = Chart("probe", tuple(names)) if names else Chart("probe", ())
    checked = 0
    for _ in range(points * 4):
        point = Point(scratch, {n: _random_rational(rng) for n in names})
        try:
            value = evaluate(difference, point, bindings)
        except EvaluationError:
            continue
        if abs(float(value)) > PROBABILISTIC_TOLERANCE:
            return Equality(False, "probabilistic")
        checked += 1
        if checked >= points:
            break
    logger.debug(f"Probabilistic equality at {checked} points for {difference}")
    return Equality(checked > 0, "probabilistic")


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sample_points(
    chart: Chart,
    count: int,
    seed: int,
    open_conditions: Sequence[Expr] = (),
    fixed: Optional[Mapping[str, Any]] = None,
    bindings: Optional[Mapping[str, Binding]] = None,
    numerator_bound: int = 9,
    denominator_bound: int = 5,
    max_attempts: int = 2000,
) -> List[Point]:
    """
    Deterministic random rational points avoiding the zero sets of
    ``open_conditions``. Names in ``fixed`` keep their given value.

    Raises:
        SamplingError: a point could not be found within ``max_attempts``
    """
    rng = np.random.default_rng(seed)
    fixed_values = {k: as_number(v) for k, v in (fixed or {}).items()}
    free = [n for n in chart.coords + chart.params if n not in fixed_values]
    points: List[Point] = []
    for index in range(count):
        for _ in range(max_attempts):
            values = dict(fixed_values)
            for name in free:
                values[name] = _random_rational(rng, numerator_bound, denominator_bound)
            candidate = Point(chart, values)
            if _satisfies(candidate, open_conditions, bindings):
                points.append(candidate)
                break
        else:
            raise SamplingError(
                f"no point on chart {chart.name} satisfies the open conditions "
                f"{[str(c) for c in open_conditions]} after {max_attempts} attempts "
                f"(sample {index})"
            )
    return points


def _satisfies(
    point: Point,
    open_conditions: Sequence[Expr],
    bindings: Optional[Mapping[str, Binding]],
) -> bool:
    for condition in open_conditions:
        try:
            if evaluate(condition, point, bindings) == 0:
                return False
        except EvaluationError:
            return False
    return True
