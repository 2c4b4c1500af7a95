"""
Exception hierarchy for geored.

Verification failures are report verdicts, never exceptions. Exceptions are
reserved for bad input and broken internal invariants; each class carries
the CLI exit code it maps to.
"""

from __future__ import annotations

from typing import Optional


class GeoredError(Exception):
    """Base class for all geored errors."""

    exit_code: int = 3


class InputError(GeoredError):
    """The caller supplied something the engine cannot work with."""

    exit_code = 2


class ParseError(InputError):
    """Syntax error in a scenario file or expression string."""

    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        column: Optional[int] = None,
        source: Optional[str] = None,
    ):
        self.line = line
        self.column = column
        self.source = source
        location = []
        if source:
            location.append(source)
        if line is not None:
            location.append(f"line {line}")
        if column is not None:
            location.append(f"column {column}")
        prefix = ", ".join(location)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class SemanticError(InputError):
    """Well-formed input that violates a type invariant."""


class NameResolutionError(InputError):
    """Unknown coordinate, parameter or function name."""


class ChartMismatchError(SemanticError):
    """Objects living on different charts were combined."""


class DegreeError(SemanticError):
    """Form degree out of range for the requested operation."""


class GaugeError(InputError):
    """Gauge assignment inconsistent with the summed field equations."""


class CFLViolation(InputError):
    """Time step too large for the explicit integrator."""

    def __init__(self, message: str, suggested_dt: float):
        self.suggested_dt = suggested_dt
        super().__init__(f"{message}; suggested dt <= {suggested_dt:.6g}")


class EvaluationError(GeoredError):
    """An expression could not be evaluated at a point."""

    exit_code = 2


class SamplingError(GeoredError):
    """No sample point satisfying the open conditions was found."""

    exit_code = 2


class OffLevelSetError(GeoredError):
    """A point does not lie on the requested level set."""

    exit_code = 2


class IntegrationError(GeoredError):
    """The numerical integrator produced non-finite values."""


class InvariantBreach(GeoredError):
    """Two independent computations of the same object disagree."""
