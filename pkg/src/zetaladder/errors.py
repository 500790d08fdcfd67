"""Exception types raised across the package."""


class ZetaLadderError(Exception):
    """Base class for all package errors."""


class DomainError(ZetaLadderError, ValueError):
    """Argument outside the domain of an operation."""


class AccuracyError(ZetaLadderError):
    """An error bound exceeds the requested target."""


class QuadratureError(ZetaLadderError):
    """Adaptive subdivision failed to reach tolerance.

    ``worst_panel`` holds ``(lo, hi, err)`` of the panel with the largest
    remaining error estimate.
    """

    def __init__(self, message, worst_panel=None):
        super().__init__(message)
        self.worst_panel = worst_panel


class BracketError(ZetaLadderError):
    """A root finder could not bracket or converge on a root."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class CheckpointMismatch(ZetaLadderError):
    """Checkpoint was written under a different configuration."""


class DegenerateSetError(ZetaLadderError):
    """A sign set has (numerically) zero measure."""


class GridBudgetError(ZetaLadderError):
    """Sampling grid would exceed the configured budget."""
