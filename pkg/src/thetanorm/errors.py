"""Exception types shared across the library."""

from __future__ import annotations


class ThetanormError(Exception):
    """Base class for all library-specific errors."""


class InvalidParameterError(ThetanormError, ValueError):
    """A parameter violates a documented precondition."""


class PrecisionError(ThetanormError):
    """A requested accuracy cannot be certified in float64."""


class DegenerateInputError(ThetanormError):
    """Structurally valid input that is numerically vacuous.

    Example: every candidate evaluation point sits in the base locus of the
    linear system, so no rank evidence can be collected.
    """


class InconclusiveRankError(ThetanormError):
    """A rank verdict failed the stability or margin gate.

    Flaky ranks must never turn into silent verdicts. The error carries the
    offending report; rerunning with a fresh seed is the documented remedy.
    """

    def __init__(self, message: str, report=None, component: str | None = None):
        super().__init__(message)
        self.report = report
        self.component = component


class ConsistencyError(ThetanormError):
    """An internal cross-check that must hold mathematically was violated.

    Raised with diagnostics; it indicates either a bug or a failure of the
    genericity assumption, never a routine negative verdict.
    """
