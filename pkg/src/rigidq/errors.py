"""Exception hierarchy shared by every rigidq module."""

from __future__ import annotations


class RigidQError(Exception):
    """Base class for all engine errors."""


class InvalidArgumentError(RigidQError, ValueError):
    """An argument violates a documented precondition."""


class InputError(InvalidArgumentError):
    """A body, field, grid or placement file failed to parse or validate.

    ``location`` names the file and, when known, the line and field path.
    """

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class SingularityError(RigidQError, ArithmeticError):
    """Two point charges (or a probe and a point charge) coincide."""

    def __init__(self, message: str, pair=None):
        self.pair = pair
        super().__init__(message)


class DomainError(RigidQError, ValueError):
    """Query outside the region where a sampled field is defined."""


class ResourceError(RigidQError, RuntimeError):
    """A quadrature would exceed its configured work cap."""

    def __init__(self, message: str, required: float | None = None):
        self.required = required
        super().__init__(message)


class OptimizationError(RigidQError, RuntimeError):
    """Every restart of a minimization failed; ``causes`` lists why."""

    def __init__(self, message: str, causes=()):
        self.causes = list(causes)
        super().__init__(message)
