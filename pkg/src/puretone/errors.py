"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage and file problems exit 2,
resonance gates exit 3, and every other numerical failure exits 1.
"""


class PureToneError(Exception):
    """Base class for all package errors."""


class DomainError(PureToneError, ValueError):
    """Input outside the physical or mathematical domain (e.g. p <= 0)."""


class IntegrationError(PureToneError, RuntimeError):
    """An ODE integration could not meet its tolerance (step underflow)."""


class SolverError(PureToneError, RuntimeError):
    """A root-finding or Newton iteration failed to converge."""


class ResonanceError(PureToneError, RuntimeError):
    """A resonant mode was encountered where nonresonance is required."""


class ShockProximityError(PureToneError, RuntimeError):
    """Nonlinear evolution left the classical (shock-free) regime."""


class NumericalError(PureToneError, RuntimeError):
    """Non-finite values appeared during a computation."""


class BoundaryResidualError(PureToneError, RuntimeError):
    """Tile extension refused: boundary residual above tolerance."""
