"""
Exception hierarchy for ratio-allocator.

Every error is a ``ValueError`` so callers that only know the standard
library still catch it. The CLI maps the three families to exit codes:
``ConfigError`` -> 2, ``DataError`` -> 3, ``NumericalError`` -> 4.
"""


class RatioAllocatorError(ValueError):
    """Base class for all package errors."""


class ConfigError(RatioAllocatorError):
    """Invalid or inconsistent run configuration."""


class DataError(RatioAllocatorError):
    """Input data violates a structural invariant."""


class NumericalError(RatioAllocatorError):
    """A computation is undefined for the given numbers."""


class MisalignedDates(DataError):
    """Dates are duplicated, unsorted, or months are not consecutive."""


class NonFiniteInput(DataError):
    """NaN/inf values, or returns at or below -100%."""


class InsufficientData(DataError):
    """Too few rows, months, or pairs for the requested operation."""


class DegenerateInput(NumericalError):
    """Zero variance or similar degeneracy in an input."""


class DegenerateRisk(NumericalError):
    """A performance ratio's risk denominator is exactly zero."""


class SingularDesign(NumericalError):
    """Rank-deficient regression design matrix."""


class ObjectiveDiverged(NonFiniteInput, NumericalError):
    """The training objective became NaN or infinite."""


def exit_code_for(exc: BaseException) -> int:
    """Return the CLI exit code for an exception (1 for anything unexpected)."""
    if isinstance(exc, ConfigError):
        return 2
    if isinstance(exc, NumericalError):
        return 4
    if isinstance(exc, (DataError, FileNotFoundError)):
        return 3
    return 1


__all__ = [
    "RatioAllocatorError",
    "ConfigError",
    "DataError",
    "NumericalError",
    "MisalignedDates",
    "NonFiniteInput",
    "InsufficientData",
    "DegenerateInput",
    "DegenerateRisk",
    "SingularDesign",
    "ObjectiveDiverged",
    "exit_code_for",
]
