"""Exception types raised across the package."""

from __future__ import annotations


class LeoTrackError(Exception):
    """Base class for all package errors."""


class ConfigError(LeoTrackError, ValueError):
    """Invalid configuration or degenerate input parameters."""


class DegeneratePosition(LeoTrackError, ValueError):
    """Satellite position coincides with the ground station."""


class BelowHorizon(LeoTrackError, ValueError):
    """Satellite is not above the local horizon at the requested time."""


class OutOfRange(LeoTrackError, ValueError):
    """Query outside the span covered by sampled data."""


class InsufficientSamples(LeoTrackError, RuntimeError):
    """Rejection sampler accepted fewer candidates than requested."""


class SingularHessian(LeoTrackError, RuntimeError):
    """Numerical Hessian could not be inverted into a covariance."""


class RankDeficient(LeoTrackError, ValueError):
    """Too few snapshots to form a usable sample covariance."""


class ScenarioError(LeoTrackError, RuntimeError):
    """A scenario could not be realised (e.g. no valid orbit found)."""
