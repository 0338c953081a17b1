"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """A numeric argument is outside the domain a model function is defined on."""


class UsageError(ValueError):
    """An operation was called on inputs that violate its preconditions."""


class ConfigError(ValueError):
    """A simulation scenario or run configuration is invalid or infeasible."""


class SnapError(Exception):
    """An event could not be assigned to any edge within tolerance.

    Carries the index of the offending event and its distance to the
    nearest edge so callers can report exactly which input is bad.
    """

    def __init__(self, event_index: int, distance: float, tolerance: float):
        self.event_index = event_index
        self.distance = distance
        self.tolerance = tolerance
        super().__init__(
            f"event {event_index} is {distance:.6g} from the nearest edge, "
            f"beyond tolerance {tolerance:.6g}"
        )
