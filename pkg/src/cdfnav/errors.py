"""Exception types raised across the package."""


class CdfError(Exception):
    """Base class for all cdfnav errors."""


class InvalidStateError(CdfError, ValueError):
    """A state vector has the wrong shape or non-finite entries."""


class TargetSingularityError(CdfError, ValueError):
    """The density was evaluated where the shaping function vanishes."""


class InfeasibleStepError(CdfError):
    """The per-step QP has no solution and the policy forbids relaxation."""

    def __init__(self, message, row=None, violation=None, state=None):
        super().__init__(message)
        self.row = row
        self.violation = violation
        self.state = state


class ScenarioError(CdfError, ValueError):
    """A scenario file is malformed or fails validation."""
