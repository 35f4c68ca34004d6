"""Conditional extreme value models via transition kernels.

Modules: ``distfn`` (univariate laws, domains of attraction), ``erv``
(extended regular variation), ``kernels`` (transition and tail kernels,
limit detection), ``limits`` (limit measures), ``montecarlo`` (simulation
and verification), ``htfit`` (semiparametric fitting), ``cli``.
"""

from .distfn import DistSpec
from .errors import (CevmError, DomainError, EvaluationError, InsufficientDataError,
                     ModelError, PreconditionError, QuadratureError, RegistryLookupError)
from .kernels import KernelSpec, TailKernel
from .limits import LimitMeasure
from .registry import example_registry

__version__ = "0.1.0"

__all__ = [
    "CevmError", "DistSpec", "DomainError", "EvaluationError", "InsufficientDataError",
    "KernelSpec", "LimitMeasure", "ModelError", "PreconditionError", "QuadratureError",
    "RegistryLookupError", "TailKernel", "example_registry",
]
