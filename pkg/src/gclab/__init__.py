"""Desk-scale numerical checks for Gaussian correlation and inverse Brascamp-Lieb inequalities."""

__version__ = "0.1.0"

from .errors import (
    AliasingDetected,
    ClassViolation,
    ConstraintViolated,
    DimensionTooLarge,
    GridTooSmall,
    InfeasibleBounds,
    InvalidIndexSet,
    MassZero,
    NotPositiveDefinite,
    ShapeMismatch,
)

__all__ = [
    "AliasingDetected",
    "ClassViolation",
    "ConstraintViolated",
    "DimensionTooLarge",
    "GridTooSmall",
    "InfeasibleBounds",
    "InvalidIndexSet",
    "MassZero",
    "NotPositiveDefinite",
    "ShapeMismatch",
    "__version__",
]
