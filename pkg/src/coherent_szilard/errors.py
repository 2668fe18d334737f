"""
Exception hierarchy for coherent-szilard

Every error names the invariant it guards and, where one exists, the measured violation.
Validation errors are problems with inputs; numerical errors are failures of a computation
on valid inputs. The CLI maps them to exit codes 2 and 3 respectively.
"""

from typing import Any, Optional


class CoherenceError(Exception):
    """Base exception for coherent-szilard errors."""

    def __init__(
        self,
        message: str,
        *,
        invariant: str = "",
        violation: Optional[float] = None,
    ):
        super().__init__(message)
        self.invariant = invariant
        self.violation = violation

    def to_dict(self) -> dict[str, Any]:
        return {
            "error": type(self).__name__,
            "invariant": self.invariant,
            "violation": self.violation,
            "message": str(self),
        }


class ValidationError(CoherenceError):
    """Input violates a structural invariant."""
    pass


class NotHermitian(ValidationError):
    pass


class TraceNotOne(ValidationError):
    pass


class NotPositive(ValidationError):
    pass


class InvalidSimplex(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


class EndpointDiagonalMismatch(ValidationError):
    pass


class ConfigError(ValidationError):
    """Config or schedule file problem, located by field path and line."""

    def __init__(self, message: str, *, field: str = "", line: Optional[int] = None):
        super().__init__(message, invariant=field or "config")
        self.field = field
        self.line = line

    def to_dict(self) -> dict[str, Any]:
        data = super().to_dict()
        data["field"] = self.field
        data["line"] = self.line
        return data


class NumericalError(CoherenceError):
    """A computation on valid inputs could not deliver its contract."""
    pass


class NoConvergence(NumericalError):
    pass


class TruncationInsufficient(NumericalError):
    pass


class NoSignChange(NumericalError):
    pass


class DegenerateCycle(NumericalError):
    """Efficiency undefined; the partially filled report travels with the error."""

    def __init__(self, message: str, *, report: Any = None, violation: Optional[float] = None):
        super().__init__(message, invariant="Q_tot != 0", violation=violation)
        self.report = report


class BoundViolation(NumericalError):
    """A sampled protocol broke an inequality the theory guarantees."""

    def __init__(self, message: str, *, invariant: str, violation: float, protocol: Any = None):
        super().__init__(message, invariant=invariant, violation=violation)
        self.protocol = protocol
