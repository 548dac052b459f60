"""Exception types raised across the package."""

from __future__ import annotations


class TriwingError(Exception):
    """Base class for all package errors."""


class NonAntisymmetric(TriwingError, ValueError):
    pass


class GimbalLock(TriwingError, ValueError):
    pass


class SingularAllocation(TriwingError, ValueError):
    pass


class OutOfEnvelope(TriwingError, ValueError):
    pass


class BatteryEmpty(TriwingError):
    pass


class NonFiniteState(TriwingError, FloatingPointError):
    pass


class DegenerateForce(TriwingError, ValueError):
    pass


class AttitudeSingular(TriwingError, ValueError):
    pass


class ThrustTooLow(TriwingError, ValueError):
    pass


class CoincidentTarget(TriwingError, ValueError):
    pass


class OutOfDomain(TriwingError, ValueError):
    pass


class InvalidTransition(TriwingError):
    pass


class SelfRightTimeout(TriwingError):
    pass


class ConfigError(TriwingError, ValueError):
    """Invalid scenario configuration. CLI exit code 2."""

    exit_code = 2


class SimDiverged(TriwingError):
    """Simulation produced a non-finite state. CLI exit code 3."""

    exit_code = 3


class EmptyLog(TriwingError, ValueError):
    pass
