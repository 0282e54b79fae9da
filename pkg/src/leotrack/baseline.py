"""Two-step reference tracker: windowed MUSIC fixes smoothed by a Kalman filter.

The filter runs a constant-velocity model on the horizontal direction cosines
``(ux, uy)``; unlike azimuth/elevation these stay smooth through zenith.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import RankDeficient
from .hybrid import HybridConfig, subarray_response
from .orbit import azimuth_elevation
from .signal import SignalFrame

BASELINE_HEADER = ["t", "az_est", "el_est", "az_true", "el_true", "err_deg"]


@dataclass(frozen=True)
class MusicConfig:
    half_width_deg: float = 1.25
    resolution_deg: float = 0.05
    n_signals: int = 1

    def __post_init__(self) -> None:
        if self.half_width_deg <= 0:
            raise ValueError("window half-width must be positive")
        if not 0 < self.resolution_deg < 2 * self.half_width_deg:
            raise ValueError("grid resolution must be positive and below the window width")


@dataclass(frozen=True)
class KalmanState:
    """State ``[ux, uy, dux/dt, duy/dt]`` with covariance ``P``.

    The default velocity spread (0.01 /s) covers the fastest overhead pass, so
    the filter can start from a direction alone.

    ``q`` is the white-acceleration intensity, ``R`` the 2x2 measurement covariance.
    """

    x: np.ndarray
    P: np.ndarray
    q: float
    R: np.ndarray

    @property
    def direction(self) -> np.ndarray:
        return cosines_to_direction(self.x[:2])


def cosines_to_direction(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    r2 = float(u @ u)
    if r2 >= 1.0:
        return np.array([u[0], u[1], 0.0]) / np.sqrt(r2)
    return np.array([u[0], u[1], np.sqrt(1.0 - r2)])


def tangent_basis(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors orthogonal to ``d``: horizontal first, then upward."""
    e1 = np.cross([0.0, 0.0, 1.0], d)
    if np.linalg.norm(e1) < 1e-9:
        e1 = np.array([0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    return e1, e2 / np.linalg.norm(e2)


def window_grid(center, cfg: MusicConfig) -> np.ndarray:
    """Directions on a square angular grid of +-half-width about ``center``."""
    d = np.asarray(center, dtype=float)
    d = d / np.linalg.norm(d)
    e1, e2 = tangent_basis(d)
    n = int(round(cfg.half_width_deg / cfg.resolution_deg))
    offs = np.tan(np.radians(np.arange(-n, n + 1) * cfg.resolution_deg))
    a, b = np.meshgrid(offs, offs, indexing="ij")
    dirs = d + a[..., None] * e1 + b[..., None] * e2
    return (dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)).reshape(-1, 3)


def music_spectrum(y: np.ndarray, dirs, pointing, hybrid: HybridConfig, n_signals: int = 1) -> np.ndarray:
    """Pseudospectrum ``1 / ||E_n^H a||^2`` with unit-norm subarray responses ``a``."""
    y = np.asarray(y)
    if y.shape[1] < 2:
        raise RankDeficient("MUSIC needs at least two snapshots")
    cov = y @ y.conj().T / y.shape[1]
    _, vecs = np.linalg.eigh(cov)
    noise = vecs[:, : y.shape[0] - n_signals]
    a = subarray_response(dirs, pointing, hybrid)
    a = a / np.linalg.norm(a, axis=-1, keepdims=True)
    proj = a.conj() @ noise
    return 1.0 / np.maximum(np.sum(np.abs(proj) ** 2, axis=-1), 1e-300)


def music_estimate(y: np.ndarray, predicted_aoa, pointing, hybrid: HybridConfig,
                   cfg: MusicConfig = MusicConfig()) -> np.ndarray:
    """Peak of the pseudospectrum inside the window around ``predicted_aoa``."""
    dirs = window_grid(predicted_aoa, cfg)
    spec = music_spectrum(y, dirs, pointing, hybrid, cfg.n_signals)
    return dirs[int(np.argmax(spec))]


def kf_init(direction, velocity=(0.0, 0.0), position_std: float = np.radians(1.0),
            velocity_std: float = 0.01, q: float = 1e-8,
            measurement_std: float = np.radians(0.05)) -> KalmanState:
    d = np.asarray(direction, dtype=float)
    x = np.array([d[0], d[1], velocity[0], velocity[1]], dtype=float)
    P = np.diag([position_std**2] * 2 + [velocity_std**2] * 2)
    return KalmanState(x, P, q, np.eye(2) * measurement_std**2)


def kf_predict(state: KalmanState, dt: float) -> KalmanState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    F = np.eye(4)
    F[0, 2] = F[1, 3] = dt
    q1 = state.q * np.array([[dt**3 / 3, dt**2 / 2], [dt**2 / 2, dt]])
    Q = np.zeros((4, 4))
    Q[np.ix_([0, 2], [0, 2])] = q1
    Q[np.ix_([1, 3], [1, 3])] = q1
    P = F @ state.P @ F.T + Q
    return replace(state, x=F @ state.x, P=0.5 * (P + P.T))


_H = np.hstack([np.eye(2), np.zeros((2, 2))])


def kf_update(state: KalmanState, measured_aoa) -> KalmanState:
    """Joseph-form update with a measured direction (only its x, y cosines are used)."""
    z = np.asarray(measured_aoa, dtype=float)[:2]
    innov = z - _H @ state.x
    S = _H @ state.P @ _H.T + state.R
    K = np.linalg.solve(S, _H @ state.P).T
    I_KH = np.eye(4) - K @ _H
    P = I_KH @ state.P @ I_KH.T + K @ state.R @ K.T
    return replace(state, x=state.x + K @ innov, P=0.5 * (P + P.T))


class TwoStepTracker:
    """Predict, steer the beam at the prediction, MUSIC in the window, update."""

    def __init__(self, initial_aoa, hybrid: HybridConfig, cfg: MusicConfig = MusicConfig(),
                 initial_velocity=(0.0, 0.0), **kf_kwargs):
        self.hybrid = hybrid
        self.cfg = cfg
        self.kf = kf_init(initial_aoa, initial_velocity, **kf_kwargs)
        self.t = 0.0

    def _predicted(self, t: float) -> KalmanState:
        return kf_predict(self.kf, t - self.t) if t > self.t else self.kf

    def pointing(self, t: float) -> np.ndarray:
        return self._predicted(t).direction

    def estimate(self, t: float) -> np.ndarray:
        return self._predicted(t).direction

    def process(self, frame: SignalFrame) -> None:
        kf = self._predicted(frame.t)
        meas = music_estimate(frame.y, kf.direction, frame.pointing, self.hybrid, self.cfg)
        self.kf = kf_update(kf, meas)
        self.t = frame.t


def two_step_run(tracker: TwoStepTracker, times, make_frame: Callable[[float, np.ndarray], SignalFrame]):
    """Closed loop over ``times``; ``make_frame(t, pointing)`` records one frame.

    Returns ``(times, estimated directions)``.
    """
    est = []
    for t in times:
        tracker.process(make_frame(float(t), tracker.pointing(float(t))))
        est.append(tracker.estimate(float(t)))
    return np.asarray(times, dtype=float), np.array(est)


def write_baseline_history(path: str | Path, times, est, truth) -> None:
    az_e, el_e = azimuth_elevation(est)
    az_t, el_t = azimuth_elevation(truth)
    err = np.degrees(np.arccos(np.clip(np.sum(est * truth, axis=-1), -1.0, 1.0)))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BASELINE_HEADER)
        for row in zip(times, np.degrees(az_e), np.degrees(el_e), np.degrees(az_t), np.degrees(el_t), err):
            w.writerow([repr(float(v)) for v in row])
