"""Gaussian kernel density over orbit angles, used as the orbit prior."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from ..orbit import as_gamma, wrap_angle

DEFAULT_BANDWIDTH = 0.005  # rad, shared by all three angles

# beta and eta0 are periodic; alpha is not
_PERIODIC = np.array([False, True, True])
# alpha is embedded in a box wide enough that its wrap never matters
_ALPHA_SHIFT, _ALPHA_BOX = 50.0, 100.0
# terms further than this many bandwidths beyond the nearest sample are dropped
_TAIL_BANDWIDTHS = 12.0


@dataclass(frozen=True)
class KdePrior:
    samples: np.ndarray
    bandwidth: float = DEFAULT_BANDWIDTH

    def __post_init__(self) -> None:
        samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if samples.shape[0] < 1 or samples.shape[1] != 3:
            raise ValueError("KDE needs at least one 3-component sample")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        object.__setattr__(self, "samples", samples)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @cached_property
    def _tree(self) -> cKDTree:
        return cKDTree(_embed(self.samples), boxsize=[_ALPHA_BOX, 2 * np.pi, 2 * np.pi])


def _embed(gamma: np.ndarray) -> np.ndarray:
    out = np.mod(gamma, 2 * np.pi)
    out[..., 0] = np.mod(gamma[..., 0] + _ALPHA_SHIFT, _ALPHA_BOX)
    return out


def angle_difference(a, b) -> np.ndarray:
    """``a - b`` with the periodic components wrapped to (-pi, pi]."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    d[..., _PERIODIC] = wrap_angle(d[..., _PERIODIC])
    return d


def kde_log_density(gamma, prior: KdePrior, chunk: int = 512) -> np.ndarray | float:
    """Log of the mean of isotropic Gaussian kernels centred on the samples.

    Accepts a single orbit or a batch ``(..., 3)``.  Single queries only sum
    kernels within a few bandwidths of the nearest sample; the dropped mass is
    below ``exp(-72)`` relative to the retained terms.
    """
    g = as_gamma(gamma)
    if g.ndim == 1:
        return _single_log_density(g, prior)
    lead = g.shape[:-1]
    flat = g.reshape(-1, 3)
    bw2 = prior.bandwidth**2
    norm = -1.5 * np.log(2.0 * np.pi * bw2) - np.log(prior.n_samples)
    out = np.empty(flat.shape[0])
    for i in range(0, flat.shape[0], chunk):
        d = angle_difference(flat[i:i + chunk, None, :], prior.samples[None, :, :])
        e = (d * d).sum(axis=-1) * (-0.5 / bw2)
        peak = e.max(axis=-1, keepdims=True)
        out[i:i + chunk] = peak[..., 0] + np.log(np.exp(e - peak).sum(axis=-1))
    out = (out + norm).reshape(lead)
    return float(out) if out.ndim == 0 else out


def _single_log_density(g: np.ndarray, prior: KdePrior) -> float:
    bw = prior.bandwidth
    x = _embed(g)
    d_min, _ = prior._tree.query(x)
    idx = prior._tree.query_ball_point(x, np.hypot(d_min, _TAIL_BANDWIDTHS * bw))
    d = angle_difference(g, prior.samples[idx])
    e = (d * d).sum(axis=-1) * (-0.5 / bw**2)
    peak = e.max()
    norm = -1.5 * np.log(2.0 * np.pi * bw**2) - np.log(prior.n_samples)
    return float(peak + np.log(np.exp(e - peak).sum()) + norm)
