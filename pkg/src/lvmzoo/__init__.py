"""Probabilistic latent variable models: specs, samplers, implied moments and estimators."""
from . import deep, distributions, estimators, numerics, zoo
from ._backend import BACKEND
from .errors import (
    ConvergenceError,
    DataError,
    LvmError,
    NotInvertibleError,
    NotPositiveDefiniteError,
    NotSymmetricError,
    SpecError,
)
from .numerics import RngStream

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConvergenceError",
    "DataError",
    "LvmError",
    "NotInvertibleError",
    "NotPositiveDefiniteError",
    "NotSymmetricError",
    "RngStream",
    "SpecError",
    "deep",
    "distributions",
    "estimators",
    "numerics",
    "zoo",
]
