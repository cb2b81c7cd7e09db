"""Exception types shared across the package."""


class PathFollowError(Exception):
    """Base class for all errors raised by this package."""


class DegeneratePoint(PathFollowError):
    """Path derivative vanished; tangent frame undefined at this parameter."""


class PhiOutOfRange(PathFollowError):
    """Auxiliary path state left the open interval (-1, 1)."""


class NonFiniteRate(PathFollowError):
    """A rate evaluation produced NaN or infinity."""


class NotConverged(PathFollowError):
    """Trajectory optimizer stopped without meeting its exit tolerances."""

    def __init__(self, message, defect_norm=None, grad_norm=None):
        super().__init__(message)
        self.defect_norm = defect_norm
        self.grad_norm = grad_norm


class MismatchedScenario(PathFollowError):
    """Two trajectories were compared that do not share a scenario."""


class ParseError(PathFollowError):
    """Config text is not well formed."""


class InvalidValue(PathFollowError):
    """A config key has a value that violates an invariant."""
