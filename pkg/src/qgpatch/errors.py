"""Exception types shared across the package."""
from __future__ import annotations


class QGPatchError(Exception):
    """Base class for all package errors."""


class DomainError(QGPatchError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class UnsupportedRangeError(DomainError):
    """Argument inside the mathematical domain but outside the validated
    evaluation range of the implementation."""


class ContourError(QGPatchError, ValueError):
    """Node array does not describe an admissible closed contour."""


class NearBoundaryError(QGPatchError):
    """Evaluation point too close to the contour for the quadrature to be
    trustworthy; the caller should move the point or refine the contour."""

    def __init__(self, message: str, point=None, distance: float | None = None):
        super().__init__(message)
        self.point = point
        self.distance = distance


class StepFailureError(QGPatchError):
    """A Runge-Kutta stage failed; ``stage`` is the 1-based stage index."""

    def __init__(self, message: str, stage: int):
        super().__init__(message)
        self.stage = stage


class EvolutionAborted(QGPatchError):
    """Time integration stopped early (chord-arc breach or stage failure).

    Carries the partial trajectory computed so far and the abort time.
    """

    def __init__(self, message: str, trajectory, time: float, reason: str):
        super().__init__(message)
        self.trajectory = trajectory
        self.time = time
        self.reason = reason


class TracerAborted(QGPatchError):
    """A tracer drifted into the near-boundary refusal band.

    Carries the last valid positions and the time they were reached.
    """

    def __init__(self, message: str, positions, time: float):
        super().__init__(message)
        self.positions = positions
        self.time = time


class ConfigError(QGPatchError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class VerificationError(QGPatchError):
    """A verification pipeline measured a deviation above its threshold."""
