"""Exception hierarchy.

Configuration problems derive from :class:`ConfigError`; failures raised
while integrating or post-processing derive from :class:`NumericalError` and
carry the simulation time at which they occurred when known.
"""
from __future__ import annotations


class RepchainError(Exception):
    """Base class for all package errors."""


class DomainError(RepchainError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(RepchainError, ValueError):
    """A run configuration could not be parsed or validated."""


class NumericalError(RepchainError):
    """A numerical failure during a run.

    Parameters
    ----------
    message:
        Human readable description.
    t:
        Simulation time of the failure, if known.
    quantity:
        Name of the offending quantity, if any.
    """

    def __init__(self, message: str, t: float | None = None, quantity: str | None = None):
        super().__init__(message)
        self.message = message
        self.t = t
        self.quantity = quantity

    def __str__(self) -> str:
        parts = [self.message]
        if self.quantity is not None:
            parts.append(f"quantity={self.quantity}")
        if self.t is not None:
            parts.append(f"t={self.t:.6g}")
        return " | ".join(parts)


class NonContractionError(NumericalError):
    """Fixed-point iteration stopped contracting; reduce the time step."""


class OrderViolationError(NumericalError):
    """Particle positions are no longer nondecreasing."""


class NegativeDensityError(NumericalError):
    """An explicit macro step produced a negative density."""


class CFLError(NumericalError):
    """Time step exceeds the explicit stability bound."""


class BoundaryContaminationError(NumericalError):
    """The solution reached the edge of the computational grid."""


class DegenerateJumpError(NumericalError):
    """The tracked jump dissolved (right state reached the threshold 1)."""


class LostShockError(NumericalError):
    """No jump could be found near the predicted shock location."""


class NoConvergenceError(NumericalError):
    """An iterative solver did not converge."""


class BracketError(NumericalError):
    """An iterate left the admissible bracket."""


class ZeroMassError(NumericalError):
    """A quantity normalised by the total mass was requested for zero mass."""


class TimeAlignmentError(NumericalError):
    """A requested time is not present in a trajectory."""
