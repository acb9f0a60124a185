"""Shared exception types.

Every module raises these instead of bare ValueError so callers can tell
a malformed input from a genuine mathematical failure.
"""


class GclabError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(GclabError):
    """A matrix required to be positive (semi)definite is not."""


class ShapeMismatch(GclabError):
    """Dimensions or block structure of the inputs do not line up."""


class DimensionTooLarge(GclabError):
    """The requested computation does not scale to this dimension."""


class InvalidIndexSet(GclabError):
    """An index set is empty, out of range, or contains duplicates."""


class ConstraintViolated(GclabError):
    """A Gaussian tuple violates its convention's feasibility constraints."""


class InfeasibleBounds(GclabError):
    """Lower and upper matrix bounds admit no feasible point."""


class GridTooSmall(GclabError):
    """The grid window does not contain the function's effective support."""


class AliasingDetected(GclabError):
    """Convolution mass leaked past the representable window."""


class MassZero(GclabError):
    """A function that must have positive mass integrates to zero."""


class ClassViolation(GclabError):
    """An input function is outside the hypothesis class of the check."""
