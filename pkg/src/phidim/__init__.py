"""phidim: phi-Assouad dimensions of Moran sets, Galton-Watson boundaries,
percolation, overlapping self-similar sets and sequence sets."""

from phidim.errors import (
    PhidimError,
    SpecError,
    DomainError,
    PreconditionError,
    NumericError,
    ResolutionError,
    DepthError,
    CapacityError,
    ConstructionError,
    InconsistencyError,
)
from phidim import kernels

__version__ = "0.1.0"

__all__ = [
    "PhidimError",
    "SpecError",
    "DomainError",
    "PreconditionError",
    "NumericError",
    "ResolutionError",
    "DepthError",
    "CapacityError",
    "ConstructionError",
    "InconsistencyError",
    "kernels",
    "__version__",
]
