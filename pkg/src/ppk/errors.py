"""Exception types shared across the package."""


class PpkError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(PpkError, ValueError):
    """Invalid or mismatched Fock-space dimension."""


class TruncationError(PpkError, ValueError):
    """Fock truncation too small for the requested state or computation.

    Carries ``required_dim`` when a sufficient dimension can be named.
    """

    def __init__(self, message, required_dim=None):
        super().__init__(message)
        self.required_dim = required_dim


class DegenerateSteadyStateError(PpkError, RuntimeError):
    """Steady-state solve failed or the kernel of the generator is not simple."""


class SolverError(PpkError, RuntimeError):
    """A linear solve did not meet its residual contract."""


class GridError(PpkError, ValueError):
    """Phase-space grid too small: probability mass reaches the edge."""


class StepSizeError(PpkError, RuntimeError):
    """Trajectory integration violated positivity or trace tolerances."""


class FilterError(PpkError, ValueError):
    """Invalid low-pass filter time constant."""
