"""Exception hierarchy shared by every module.

Each exception carries a short machine-readable ``code`` string so the CLI
can report failures uniformly and tests can assert on the failure kind.
"""

from __future__ import annotations


class LiftError(Exception):
    """Base class for all errors raised by :mod:`periodiclift`."""

    code = "error"

    def __init__(self, message: str = ""):
        super().__init__(f"{self.code}: {message}" if message else self.code)
        self.message = message


class InvalidArgument(LiftError, ValueError):
    code = "invalid-argument"


class NotFound(LiftError, KeyError):
    code = "not-found"

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return Exception.__str__(self)


class DegenerateSystem(LiftError):
    code = "degenerate-system"


class AnalyticityViolation(LiftError):
    code = "analyticity-violation"


class OrderOverflow(LiftError):
    code = "order-overflow"


class InvalidRegime(LiftError):
    code = "invalid-regime"


class HypothesisViolation(LiftError):
    code = "hypothesis-violation"


class NoOrder(LiftError):
    code = "no-order"


class RegimeViolation(LiftError):
    code = "regime-violation"


class NearSingularity(LiftError, ArithmeticError):
    code = "near-singularity"


class StepFailure(LiftError, ArithmeticError):
    code = "step-failure"


class DegenerateSample(LiftError, ArithmeticError):
    code = "degenerate-sample"


class Undersampled(LiftError, ArithmeticError):
    code = "undersampled"


# Errors that stem from numerical trouble rather than bad input.
NUMERIC_ERRORS = (NearSingularity, StepFailure, DegenerateSample, Undersampled)
