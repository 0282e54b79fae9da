"""Received-frame synthesis: pilots, truth trajectories, obstruction, frame I/O."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import BelowHorizon, ConfigError, OutOfRange
from .hybrid import HybridConfig, beamformed_template
from .link import LinkBudget, complex_noise, draw_channel_at
from .orbit import OrbitShape, as_gamma, position as orbit_position

DEFAULT_PILOT_LENGTH = 63
DEFAULT_PILOT_ROOT = 29


def zadoff_chu(length: int, root: int) -> np.ndarray:
    """Zadoff-Chu sequence of ``length`` with root index ``root``."""
    if length < 1:
        raise ConfigError("pilot length must be at least 1")
    if math.gcd(root, length) != 1:
        raise ConfigError(f"root {root} is not coprime with length {length}")
    k = np.arange(length)
    if length % 2:
        return np.exp(-1j * np.pi * root * k * (k + 1) / length)
    return np.exp(-1j * np.pi * root * k * k / length)


@dataclass(frozen=True)
class SignalFrame:
    """One recording: ``y`` is ``(M, N_s)``; ``pointing`` is the beam used to record it."""

    t: float
    y: np.ndarray
    pointing: np.ndarray
    obstructed: bool = False


@dataclass(frozen=True)
class Trajectory:
    """Sampled satellite positions in the station frame."""

    t: np.ndarray
    positions: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        pos = np.asarray(self.positions, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ConfigError("trajectory needs at least two samples")
        if pos.shape != (t.size, 3):
            raise ConfigError("trajectory positions must be (n, 3)")
        if np.any(np.diff(t) <= 0):
            raise ConfigError("trajectory times must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "positions", pos)

    @classmethod
    def from_orbit(cls, gamma, shape: OrbitShape, t) -> "Trajectory":
        t = np.asarray(t, dtype=float)
        return cls(t, orbit_position(t, gamma, shape))

    @classmethod
    def load(cls, path: str | Path) -> "Trajectory":
        try:
            data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        except ValueError as exc:
            raise ConfigError(f"unreadable trajectory file {path}: {exc}") from exc
        if data.shape[1] != 4:
            raise ConfigError("trajectory file must have columns t_seconds,x_m,y_m,z_m")
        return cls(data[:, 0], data[:, 1:])

    def save(self, path: str | Path) -> None:
        rows = np.column_stack([self.t, self.positions])
        np.savetxt(path, rows, delimiter=",", header="t_seconds,x_m,y_m,z_m",
                   comments="", fmt="%.17g")


def interpolate_trajectory(traj: Trajectory, t) -> np.ndarray:
    """Componentwise linear interpolation of the trajectory at time(s) ``t``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < traj.t[0]) or np.any(t > traj.t[-1]):
        raise OutOfRange(f"time outside trajectory span [{traj.t[0]}, {traj.t[-1]}]")
    out = np.stack([np.interp(t, traj.t, traj.positions[:, k]) for k in range(3)], axis=-1)
    return out


def drifting_trajectory(gamma, shape: OrbitShape, duration: float, alpha_drift: float,
                        step: float = 1.0) -> Trajectory:
    """Circular-orbit track whose alpha ramps linearly by ``alpha_drift`` over ``duration``.

    Used to create deliberate model mismatch for the estimator.
    """
    g = as_gamma(gamma)
    t = np.arange(0.0, duration + step, step)
    gammas = np.tile(g, (t.size, 1))
    gammas[:, 0] += alpha_drift * t / duration
    return Trajectory(t, orbit_position(t, gammas, shape))


def true_position(t: float, truth, shape: OrbitShape | None) -> np.ndarray:
    """Position of the ground-truth satellite, from orbit angles or a trajectory."""
    if isinstance(truth, Trajectory):
        return interpolate_trajectory(truth, t)
    if shape is None:
        raise ConfigError("orbit-parameter truth needs an OrbitShape")
    return orbit_position(t, truth, shape)


def true_direction(t, truth, shape: OrbitShape | None) -> np.ndarray:
    pos = true_position(t, truth, shape)
    return pos / np.linalg.norm(pos, axis=-1, keepdims=True)


def synthesize_frame(t: float, truth, pointing, hybrid: HybridConfig, budget: LinkBudget,
                     gamma_v: float, s, rng: np.random.Generator,
                     shape: OrbitShape | None = None, channel_on: bool = True) -> SignalFrame:
    """Draw ``y = h x + v`` for the satellite at time ``t``.

    ``gamma_v = inf`` gives a noiseless frame; ``channel_on=False`` forces h = 0.
    """
    pos = true_position(t, truth, shape)
    if pos[2] <= 0.0:
        raise BelowHorizon(f"satellite below horizon at t={t}")
    pointing = np.asarray(pointing, dtype=float)
    draw = draw_channel_at(pos, budget, rng)
    x = beamformed_template(pos / np.linalg.norm(pos), pointing, hybrid, s)
    y = draw.h * x if channel_on else np.zeros_like(x)
    if np.isfinite(gamma_v):
        y = y + complex_noise(x.shape, gamma_v, rng)
    return SignalFrame(float(t), y, pointing.copy())


def obstruct(frame: SignalFrame, window: tuple[float, float] | None, gamma_v: float,
             rng: np.random.Generator) -> SignalFrame:
    """Replace the frame by fresh noise when its time falls inside ``window``."""
    if window is None:
        return frame
    t0, t1 = window
    if not t0 <= frame.t <= t1:
        return frame
    return replace(frame, y=complex_noise(frame.y.shape, gamma_v, rng), obstructed=True)


_FRAME_HEADER = struct.Struct("<2I4dB")


def write_frames(path: str | Path, frames) -> None:
    """Binary dump: per frame a little-endian header (M, N_s, t, pointing xyz,
    obstructed) followed by interleaved complex64 samples, subarray-major.
    """
    with open(path, "wb") as fh:
        for fr in frames:
            m, ns = fr.y.shape
            fh.write(_FRAME_HEADER.pack(m, ns, fr.t, *np.asarray(fr.pointing, float), int(fr.obstructed)))
            fh.write(np.ascontiguousarray(fr.y, dtype="<c8").tobytes())


def read_frames(path: str | Path) -> list[SignalFrame]:
    data = Path(path).read_bytes()
    frames = []
    pos = 0
    while pos < len(data):
        m, ns, t, px, py, pz, obs = _FRAME_HEADER.unpack_from(data, pos)
        pos += _FRAME_HEADER.size
        nbytes = m * ns * 8
        y = np.frombuffer(data, dtype="<c8", count=m * ns, offset=pos).reshape(m, ns)
        pos += nbytes
        frames.append(SignalFrame(t, y.astype(complex), np.array([px, py, pz]), bool(obs)))
    return frames
