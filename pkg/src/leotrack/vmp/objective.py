"""Surrogate updates and the orbit log-density used by the estimator.

Everything is expressed through the matched-filter statistic ``z = Y s*``
(one complex number per subarray) and the per-subarray response ``r(Gamma)``:
for a template ``x = r s^T`` and white noise of precision ``gamma_v``

    <x|L|x> = gamma_v |s|^2 ||r||^2,      <x|L|y> = gamma_v r^H z,

so a frame never has to be expanded back to ``M * N_s`` samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..hybrid import HybridConfig, response_gradient, subarray_response
from ..orbit import OrbitShape, as_gamma, direction
from ..signal import SignalFrame
from .kde import KdePrior, kde_log_density

# The modulus replaces Re{.} in the cross term but keeps its factor of two, so
# a matched channel gives the concentrated likelihood |r^H z|^2 / ||r||^2.
CROSS_TERM_SCALE = 2.0


@dataclass(frozen=True)
class ObservationModel:
    """What the receiver knows: array, orbit constants, pilot and noise level."""

    hybrid: HybridConfig
    shape: OrbitShape
    pilot: np.ndarray
    gamma_v: float
    gamma_p: float = 0.0

    @property
    def pilot_energy(self) -> float:
        return float(np.vdot(self.pilot, self.pilot).real)

    def response(self, t, gamma, pointing) -> np.ndarray:
        return subarray_response(direction(t, gamma, self.shape), pointing, self.hybrid)


@dataclass(frozen=True)
class ChannelSurrogate:
    mean: complex
    variance: float

    def __post_init__(self) -> None:
        if not self.variance > 0:
            raise ValueError("channel surrogate variance must be positive")


@dataclass(frozen=True)
class OrbitSurrogate:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float).reshape(3))
        object.__setattr__(self, "covariance", np.asarray(self.covariance, dtype=float).reshape(3, 3))

    @classmethod
    def point(cls, gamma) -> "OrbitSurrogate":
        return cls(as_gamma(gamma), np.zeros((3, 3)))


def matched_filter(frame: SignalFrame, pilot) -> np.ndarray:
    """Per-subarray correlation with the pilot, ``z_m = sum_k y_mk conj(s_k)``."""
    return frame.y @ np.conj(np.asarray(pilot, dtype=complex))


@dataclass(frozen=True)
class FrameStatistics:
    """Everything the orbit objective needs from the frames seen so far."""

    t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pointing: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    z: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=complex))
    h_mean: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    h_var: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self) -> int:
        return self.t.size

    def append(self, t: float, pointing, z, surrogate: ChannelSurrogate) -> "FrameStatistics":
        z = np.asarray(z, dtype=complex)
        zs = z[None, :] if len(self) == 0 else np.vstack([self.z, z])
        return FrameStatistics(
            np.append(self.t, t),
            np.vstack([self.pointing, np.asarray(pointing, float)]),
            zs,
            np.append(self.h_mean, surrogate.mean),
            np.append(self.h_var, surrogate.variance),
        )

    def with_surrogates(self, h_mean, h_var) -> "FrameStatistics":
        return FrameStatistics(self.t, self.pointing, self.z,
                               np.asarray(h_mean, dtype=complex), np.asarray(h_var, dtype=float))

    def drop_first(self) -> "FrameStatistics":
        return FrameStatistics(self.t[1:], self.pointing[1:], self.z[1:], self.h_mean[1:], self.h_var[1:])


def gradient_gram(t: float, gamma, pointing, model: ObservationModel) -> np.ndarray:
    """``<grad x | L | grad x>`` at ``gamma`` as a real symmetric 3x3 matrix."""
    jac = response_gradient(t, as_gamma(gamma), pointing, model.hybrid, model.shape)
    gram = np.conj(jac) @ jac.T
    return model.gamma_v * model.pilot_energy * gram.real


def expected_energy(t: float, orbit: OrbitSurrogate, pointing, model: ObservationModel) -> float:
    """First-order delta-method estimate of ``E[<x|L|x>]`` under ``orbit``."""
    r = model.response(t, orbit.mean, pointing)
    base = model.gamma_v * model.pilot_energy * float(np.vdot(r, r).real)
    if not np.any(orbit.covariance):
        return base
    return base + float(np.trace(orbit.covariance @ gradient_gram(t, orbit.mean, pointing, model)))


def update_channel(t: float, z, pointing, orbit: OrbitSurrogate, model: ObservationModel) -> ChannelSurrogate:
    """Complex-Gaussian channel surrogate for one frame given the orbit surrogate."""
    r = model.response(t, orbit.mean, pointing)
    var = 1.0 / (expected_energy(t, orbit, pointing, model) + model.gamma_p)
    mean = var * model.gamma_v * np.vdot(r, np.asarray(z, dtype=complex))
    return ChannelSurrogate(complex(mean), float(var))


def window_weights(n: int, rho: float) -> np.ndarray:
    """``rho**(N - n)`` for frames ``n = 0..N``; newest frame has weight one."""
    if not 0.0 < rho <= 1.0:
        raise ValueError("window factor must lie in (0, 1]")
    return rho ** np.arange(n - 1, -1, -1, dtype=float)


def _frame_terms(gamma, stats: FrameStatistics, model: ObservationModel):
    g = as_gamma(gamma)[..., None, :]
    r = model.response(stats.t, g, stats.pointing)
    energy = model.gamma_v * model.pilot_energy * np.sum(np.abs(r) ** 2, axis=-1)
    cross = model.gamma_v * np.abs(np.sum(np.conj(r) * stats.z, axis=-1))
    return energy, cross


def frame_log_terms(gamma, stats: FrameStatistics, model: ObservationModel) -> np.ndarray:
    """Per-frame expected log-likelihood terms, shape ``(..., N)``."""
    energy, cross = _frame_terms(gamma, stats, model)
    h2 = np.abs(stats.h_mean) ** 2 + stats.h_var
    return -h2 * energy + CROSS_TERM_SCALE * np.abs(stats.h_mean) * cross


def log_q_gamma(gamma, stats: FrameStatistics, prior: KdePrior | None = None,
                rho: float = 1.0, model: ObservationModel | None = None) -> np.ndarray | float:
    """Unnormalised orbit log-density with channel surrogates held fixed.

    ``prior=None`` means a flat prior.  ``gamma`` may be a batch ``(..., 3)``.
    """
    if model is None:
        raise ValueError("an ObservationModel is required")
    g = as_gamma(gamma)
    out = np.zeros(g.shape[:-1])
    if len(stats):
        out = out + frame_log_terms(g, stats, model) @ window_weights(len(stats), rho)
    if prior is not None:
        out = out + kde_log_density(g, prior)
    return float(out) if out.ndim == 0 else out


def profiled_log_q(gamma, stats: FrameStatistics, prior: KdePrior | None = None,
                   rho: float = 1.0, model: ObservationModel | None = None) -> np.ndarray | float:
    """Orbit log-density with every channel surrogate re-fitted at ``gamma``.

    This is the fixed point of alternating channel and orbit updates at zero
    orbit covariance; it needs no prior channel estimate, which makes it the
    ranking criterion during initialisation.
    """
    if model is None:
        raise ValueError("an ObservationModel is required")
    g = as_gamma(gamma)
    out = np.zeros(g.shape[:-1])
    if len(stats):
        energy, cross = _frame_terms(g, stats, model)
        var = 1.0 / (energy + model.gamma_p)
        terms = -(var**2 * cross**2 + var) * energy + CROSS_TERM_SCALE * var * cross**2
        out = out + terms @ window_weights(len(stats), rho)
    if prior is not None:
        out = out + kde_log_density(g, prior)
    return float(out) if out.ndim == 0 else out
