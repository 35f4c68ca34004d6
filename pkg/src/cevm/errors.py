"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class CevmError(Exception):
    """Base class for library errors."""


class DomainError(CevmError, ValueError):
    """An argument lies outside the set where the operation is defined."""


class ModelError(CevmError):
    """A distribution or kernel does not satisfy a modelling assumption."""


class EvaluationError(CevmError):
    """A user-supplied function returned non-finite values or raised."""


class PreconditionError(CevmError):
    """A documented precondition of an operation does not hold."""


class InsufficientDataError(PreconditionError):
    """Too few observations (or exceedances) for the requested estimate."""

    def __init__(self, message: str, observed: int | None = None):
        super().__init__(message)
        self.observed = observed


class QuadratureError(CevmError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, estimate: float, error_bound: float):
        super().__init__(f"{message} (estimate={estimate!r}, error bound={error_bound:.3g})")
        self.estimate = estimate
        self.error_bound = error_bound


class RegistryLookupError(CevmError, KeyError):
    """Unknown name in a registry of families, kernels or examples."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""
