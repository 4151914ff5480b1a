"""Exception types shared across the toolkit.

Every failure mode that callers are expected to branch on gets its own
class; generic programming errors stay ValueError/TypeError.
"""


class LocoptError(Exception):
    """Base class for all toolkit errors."""


class InputError(LocoptError):
    """Problem-file parse or validation failure.

    Carries (line, column) when the underlying parser provides a mark,
    both 1-based; None otherwise.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class DomainError(LocoptError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class PreconditionError(LocoptError):
    """A documented precondition was violated by the caller."""


class SolverStallError(LocoptError):
    """Inner solves exceeded their iteration budget too often to trust the result."""


class NonConvergenceError(LocoptError):
    """Stationarity measure still above threshold at the iteration budget."""


class InfeasibleResultError(LocoptError):
    """Final iterate violates the constraint beyond the feasibility tolerance."""


class DegenerateMultiplierError(LocoptError):
    """No separating functional found: multiplier least-squares residual too large."""


class SamplingStarvationError(LocoptError):
    """Too few feasible samples survived rejection/restoration to certify anything."""


class DimensionGuardError(LocoptError):
    """Brute-force enumeration refused: dimension beyond the desk-scale guard."""


class ZeroPriceError(LocoptError):
    """Constraint multiplier is numerically zero; no meaningful price exists."""


class DegenerateRadiusError(LocoptError):
    """A consumer's localization radius is numerically zero."""


class EmptyIntersectionError(LocoptError):
    """Requested search region has (numerically) empty intersection."""
