"""Exception types shared across the package."""

from __future__ import annotations


class LabError(Exception):
    """Base class for all errors raised by gausslab."""


class DomainError(LabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class BudgetExhaustedError(LabError, RuntimeError):
    """Requested accuracy is not reachable within the term budget."""


class PoleProximityError(LabError, ValueError):
    """Evaluation point too close to a pole of the representation."""


class SingularityError(LabError, ValueError):
    """Non-integrable singularity inside an integration interval."""


class PrecisionError(LabError, ArithmeticError):
    """A computed quantity is not resolved by its error estimate."""


class TailBudgetError(LabError, RuntimeError):
    """Accumulated truncation bounds exceed the allowed fraction of the norm."""


class ConfigError(LabError, ValueError):
    """Experiment configuration failed schema validation."""


class ClassificationError(LabError, RuntimeError):
    """A function's sign structure contradicts its coefficient classification."""
