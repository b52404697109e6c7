"""Weighted fractional Brownian motion and delay equations driven by it."""

from ._core import (
    ConfigError,
    DegenerateSampleError,
    DomainError,
    Params,
    covariance,
    hilbert_inner,
    list_functions,
    phi,
    run,
    sample,
    solve,
    variance,
)

__all__ = [
    "ConfigError",
    "DegenerateSampleError",
    "DomainError",
    "Params",
    "covariance",
    "hilbert_inner",
    "list_functions",
    "phi",
    "run",
    "sample",
    "solve",
    "variance",
]
