"""Exception types shared across the package."""

from __future__ import annotations


class ObstructionLabError(Exception):
    """Base class for all package errors."""


class ContractError(ObstructionLabError, ValueError):
    """An input violates an operation's precondition."""


class DomainError(ContractError):
    """A scalar parameter lies outside its admissible range."""


class DegreeError(ContractError):
    """A form operation would exceed the top degree or mismatches degrees."""


class SpectralGapError(ObstructionLabError):
    """An eigenvalue sits inside the exclusion band around a spectral cut.

    Attributes
    ----------
    eigenvalue : complex or float
        The offending eigenvalue.
    threshold : float
        Location of the cut.
    point : tuple or None
        Grid multi-index where the failure happened, when known.
    """

    def __init__(self, eigenvalue, threshold, gap_tol, point=None, message=None):
        self.eigenvalue = eigenvalue
        self.threshold = threshold
        self.gap_tol = gap_tol
        self.point = point
        if message is None:
            message = (
                f"eigenvalue {eigenvalue!r} lies within {gap_tol:g} of the cut "
                f"at {threshold!r}"
            )
            if point is not None:
                message += f" (grid point {tuple(point)})"
        super().__init__(message)


class BranchCutError(SpectralGapError):
    """An eigenvalue of a unitary sits too close to -1 for the principal log."""
