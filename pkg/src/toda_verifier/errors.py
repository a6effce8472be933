"""Toda Verifier - Error Types

Every failure the library can report has its own class so callers (and the
scenario runner) can tell a degenerate seed from a failed numerical check.
"""
from pathlib import Path
from typing import Optional


class TodaError(Exception):
    """Base class for all library errors."""


# Series kernel

class DegenerateDivision(TodaError, ZeroDivisionError):
    """Division by a series whose constant term vanishes."""


class DegenerateRoot(TodaError, ValueError):
    """Fractional power of a series whose constant term vanishes."""


class InsufficientOrder(TodaError, ValueError):
    """A series is not known to a high enough order for the operation."""


class IllegalComposition(TodaError, ValueError):
    """Composition a(b(z)) with b(0) != 0."""


class NotInvertibleAtOrigin(TodaError, ValueError):
    """Series reversion of b with b'(0) = 0."""


class SingularEvaluation(TodaError, ArithmeticError):
    """Evaluation at the singular point where the value is not defined."""


class OutOfDomainWarning(UserWarning):
    """Evaluation beyond the radius where the truncated series are trusted."""


# Exponents and seeds

class IllegalWeight(TodaError, ValueError):
    """A source weight gamma_i <= -1."""


class ArityMismatch(TodaError, ValueError):
    """A sequence has the wrong length for the rank n."""


class DegenerateSeed(TodaError, ValueError):
    """The seed curve is ramified at 0 (a reduced Wronskian vanishes there)."""


class UnnormalizedSeed(TodaError, ValueError):
    """An operation that needs G_n == 1 received a seed that was never normalized."""


class InternalInconsistency(TodaError, RuntimeError):
    """Two independent computations of the same quantity disagree."""


# Fuchsian side

class NonvanishingTrace(TodaError, ValueError):
    """The y^(n) coefficient of a reconstructed operator does not vanish."""


class NonRealExponents(TodaError, ValueError):
    """The indicial polynomial has non-real roots."""


class RepeatedExponents(TodaError, ValueError):
    """The indicial polynomial has a repeated root."""


class LogarithmRequired(TodaError, ArithmeticError):
    """A resonant Frobenius recursion is obstructed; a log term would be needed."""


class NotAnExponent(TodaError, ValueError):
    """A Frobenius series was requested at a value that is not an indicial root."""


# Verification

class GridSpecError(TodaError, ValueError):
    """A sampling grid violates its geometric constraints."""


class QuadratureFailure(TodaError, ArithmeticError):
    """Adaptive quadrature did not reach the requested accuracy."""


# Command line

class ConfigError(TodaError, ValueError):
    """A scenario file could not be parsed or validated."""

    def __init__(self, message: str, path: Optional[Path] = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path is not None else message)


class OutputError(TodaError, OSError):
    """A result file could not be written."""
