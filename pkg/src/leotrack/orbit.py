"""Circular-orbit geometry seen from a ground station.

The satellite moves on a circle of radius ``R`` about the Earth centre, which
sits a distance ``h_e`` below the ground station along the local zenith.  An
orbit is fixed by three angles ``(alpha, beta, eta0)``; everything here works
on arrays shaped ``(..., 3)`` in that order so the estimator can evaluate many
hypotheses at once.  Frame: right-handed, z to zenith, origin at the station.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePosition

MU_EARTH = 3.986004418e14  # m^3/s^2
EARTH_RADIUS = 6.371e6  # m
DEFAULT_ALTITUDE = 550e3  # m

ALPHA_RANGE = (1.25, 1.87)
TWO_PI = 2.0 * np.pi


def kepler_omega(altitude: float) -> float:
    """Angular rate of a circular orbit at ``altitude`` metres above the surface."""
    if altitude < 0:
        raise ValueError("altitude must be non-negative")
    radius = EARTH_RADIUS + altitude
    return float(np.sqrt(MU_EARTH / radius**3))


@dataclass(frozen=True)
class OrbitShape:
    """Constants shared by every orbit hypothesis: radius, rate and station offset."""

    radius: float
    omega: float
    h_e: float = EARTH_RADIUS

    def __post_init__(self) -> None:
        if not (self.radius > self.h_e > 0):
            raise ValueError("require radius > h_e > 0")
        if self.omega <= 0:
            raise ValueError("omega must be positive")

    @classmethod
    def from_altitude(cls, altitude: float = DEFAULT_ALTITUDE) -> "OrbitShape":
        return cls(radius=EARTH_RADIUS + altitude, omega=kepler_omega(altitude), h_e=EARTH_RADIUS)

    @property
    def altitude(self) -> float:
        return self.radius - self.h_e

    @property
    def period(self) -> float:
        return TWO_PI / self.omega


@dataclass(frozen=True)
class OrbitParams:
    """Orbit angles in radians, ordered (alpha, beta, eta0)."""

    alpha: float
    beta: float
    eta0: float

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.eta0], dtype=float)

    @classmethod
    def from_array(cls, gamma) -> "OrbitParams":
        a, b, e = np.asarray(gamma, dtype=float).reshape(3)
        return cls(float(a), float(b), float(e))


def as_gamma(gamma) -> np.ndarray:
    """Coerce ``OrbitParams`` or array-like input to a float array ``(..., 3)``."""
    if isinstance(gamma, OrbitParams):
        return gamma.as_array()
    arr = np.asarray(gamma, dtype=float)
    if arr.shape[-1:] != (3,):
        raise ValueError(f"orbit parameters must have trailing dimension 3, got {arr.shape}")
    return arr


def basis_vectors(gamma, shape: OrbitShape) -> tuple[np.ndarray, np.ndarray]:
    """In-plane vectors ``u`` and ``v`` (each of length R) spanning the orbit circle."""
    g = as_gamma(gamma)
    alpha, beta = g[..., 0], g[..., 1]
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    u = shape.radius * np.stack([-sb, cb, np.zeros_like(cb)], axis=-1)
    v = shape.radius * np.stack([-ca * cb, -ca * sb, sa], axis=-1)
    return u, v


def position(t, gamma, shape: OrbitShape) -> np.ndarray:
    """Satellite position at time(s) ``t`` in the station frame, metres.

    ``t`` and the leading dimensions of ``gamma`` broadcast against each other.
    """
    g = as_gamma(gamma)
    u, v = basis_vectors(g, shape)
    phase = shape.omega * np.asarray(t, dtype=float) - g[..., 2]
    pos = u * np.cos(phase)[..., None] + v * np.sin(phase)[..., None]
    return pos - np.array([0.0, 0.0, shape.h_e])


def direction(t, gamma, shape: OrbitShape) -> np.ndarray:
    """Unit line-of-sight vector from the station to the satellite."""
    pos = position(t, gamma, shape)
    norm = np.linalg.norm(pos, axis=-1, keepdims=True)
    if np.any(norm < 1.0):
        raise DegeneratePosition("satellite position within 1 m of the ground station")
    return pos / norm


def polar_angle(t, gamma, shape: OrbitShape) -> np.ndarray:
    uz = direction(t, gamma, shape)[..., 2]
    return np.arccos(np.clip(uz, -1.0, 1.0))


def polar_rate(t, gamma, shape: OrbitShape, dt: float = 1.0) -> np.ndarray:
    """Forward-difference rate of the polar (zenith) angle, rad/s.

    Negative values mean the satellite is rising.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    t = np.asarray(t, dtype=float)
    return (polar_angle(t + dt, gamma, shape) - polar_angle(t, gamma, shape)) / dt


def is_visible(t, gamma, shape: OrbitShape) -> np.ndarray | bool:
    """True where the satellite is strictly above the station's horizon plane."""
    z = position(t, gamma, shape)[..., 2]
    out = z > 0.0
    return bool(out) if np.ndim(out) == 0 else out


def sample_prior(rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw orbit angles from the independent uniform prior.

    Returns shape ``(3,)`` for ``size=None`` else ``(size, 3)``.
    """
    n = 1 if size is None else size
    alpha = rng.uniform(ALPHA_RANGE[0], ALPHA_RANGE[1], n)
    beta = rng.uniform(0.0, TWO_PI, n)
    eta0 = rng.uniform(0.0, TWO_PI, n)
    out = np.stack([alpha, beta, eta0], axis=-1)
    return out[0] if size is None else out


def azimuth_elevation(direction_vec) -> tuple[np.ndarray, np.ndarray]:
    """Azimuth ``atan2(uy, ux)`` and elevation ``asin(uz)`` in radians."""
    d = np.asarray(direction_vec, dtype=float)
    az = np.arctan2(d[..., 1], d[..., 0])
    el = np.arcsin(np.clip(d[..., 2], -1.0, 1.0))
    return az, el


def from_azimuth_elevation(az, el) -> np.ndarray:
    az = np.asarray(az, dtype=float)
    el = np.asarray(el, dtype=float)
    ce = np.cos(el)
    return np.stack([ce * np.cos(az), ce * np.sin(az), np.sin(el)], axis=-1)


def wrap_angle(x):
    """Map angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), TWO_PI)
