"""
Exception types for accproxcg.

Most errors double as built-in exception types (ValueError, RuntimeError) so callers
that only know the standard library can still catch them.
"""

from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from accproxcg.schemas import RunTrace


class AccProxCGError(Exception):
    """Base class for all accproxcg errors."""


class ArgumentError(AccProxCGError, ValueError):
    """An argument is outside the domain of an operation."""


class DomainError(ArgumentError):
    """A theory calculator was called outside its stated domain."""


class DegenerateDenominatorError(ArgumentError):
    """The reference estimator of a conjugate-parameter formula has (numerically) zero norm."""


class LibSVMParseError(AccProxCGError, ValueError):
    """A LIBSVM line could not be read.

    Attributes:
        line_number: 1-based line number in the input
    """

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class LibSVMFormatError(LibSVMParseError):
    """A LIBSVM line is readable but violates the index rules."""


class SearchFailureError(AccProxCGError, RuntimeError):
    """Every trial step of a line search produced a non-finite value."""


class DivergenceError(AccProxCGError, RuntimeError):
    """An optimizer run produced a non-finite or exploding objective.

    Attributes:
        trace: The trace recorded up to the failing epoch
    """

    def __init__(self, message: str, trace: Optional["RunTrace"] = None):
        super().__init__(message)
        self.trace = trace


class SpecError(AccProxCGError, ValueError):
    """An experiment specification is invalid."""
