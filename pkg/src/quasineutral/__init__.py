"""Pseudo-spectral solvers for Euler, Euler-Poisson and Euler-Monge-Ampere
flows on the periodic 2-torus, plus the quasi-neutral-limit experiment
harness built on top of them."""

from .errors import (
    DegenerateFit,
    EllipticityLost,
    GridMismatch,
    NoConvergence,
    NonZeroMean,
    NotPositive,
    ParseError,
    QuasineutralError,
    StepRejected,
    UnknownKind,
    ValidationError,
)
from .spectral import (
    PeriodicGrid,
    ScalarField,
    VectorField,
    curl,
    dealias,
    derivative,
    div,
    grad,
    helmholtz,
    hs_norm,
    laplacian,
    l2_norm,
    poisson_solve,
    velocity_from_divcurl,
)

__all__ = [
    "DegenerateFit",
    "EllipticityLost",
    "GridMismatch",
    "NoConvergence",
    "NonZeroMean",
    "NotPositive",
    "ParseError",
    "PeriodicGrid",
    "QuasineutralError",
    "ScalarField",
    "StepRejected",
    "UnknownKind",
    "ValidationError",
    "VectorField",
    "curl",
    "dealias",
    "derivative",
    "div",
    "grad",
    "helmholtz",
    "hs_norm",
    "laplacian",
    "l2_norm",
    "poisson_solve",
    "velocity_from_divcurl",
]

__version__ = "0.1.0"
