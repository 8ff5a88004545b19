"""Nedelec FEM for 2D time-harmonic Maxwell, a two-strip Robin DDM, and a
feedforward network surrogate for the interface-condition update."""

__version__ = "0.1.0"


class InvalidArgumentError(ValueError):
    """Raised when an argument violates an operation's precondition."""
