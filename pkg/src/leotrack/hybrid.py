"""Planar-array steering and partially-connected hybrid combining.

The receive aperture is a half-wavelength UPA in the station's x-y plane, cut
into an ``Mr x Mc`` grid of identical ``Nr x Nc`` subarrays.  Each subarray
feeds one RF chain through unit-modulus phase shifters, so only the ``M``
combined outputs are observed.

Indexing: subarray ``m = i * Mc + j`` for grid cell ``(i, j)``; inside a
subarray, element ``(a, b)`` sits at ``a * Nc + b``.  Row offsets run along x,
column offsets along y.  Stacked templates are ``(M, N_s)`` arrays whose C-order
ravel is subarray-major.

Local steering phases are referenced to each subarray's phase centre, so the
combined gain ``b^H a`` is real and the inter-subarray factor carries all of
the geometry-dependent phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .orbit import OrbitShape, as_gamma, direction as orbit_direction

HALF_WAVELENGTH = 0.5


@dataclass(frozen=True)
class UpaConfig:
    rows: int
    cols: int
    spacing: float = HALF_WAVELENGTH
    element_gain_db: float = 5.46

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("UPA needs at least one row and one column")
        if self.spacing != HALF_WAVELENGTH:
            raise ValueError("only half-wavelength spacing is supported")

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class HybridConfig:
    subarray_grid: tuple[int, int] = (8, 8)
    subarray_shape: tuple[int, int] = (4, 4)
    carrier_freq: float = 28e9
    element_gain_db: float = 5.46

    def __post_init__(self) -> None:
        if min(self.subarray_grid) < 1 or min(self.subarray_shape) < 1:
            raise ValueError("subarray grid and shape must be positive")

    @property
    def n_subarrays(self) -> int:
        return self.subarray_grid[0] * self.subarray_grid[1]

    @property
    def n_sub(self) -> int:
        return self.subarray_shape[0] * self.subarray_shape[1]

    @property
    def n_elements(self) -> int:
        return self.n_subarrays * self.n_sub

    @property
    def full_upa(self) -> UpaConfig:
        return UpaConfig(
            rows=self.subarray_grid[0] * self.subarray_shape[0],
            cols=self.subarray_grid[1] * self.subarray_shape[1],
            element_gain_db=self.element_gain_db,
        )

    @cached_property
    def local_offsets(self) -> np.ndarray:
        """Element offsets from the subarray phase centre, ``(N_sub, 2)``."""
        nr, nc = self.subarray_shape
        a, b = np.meshgrid(np.arange(nr), np.arange(nc), indexing="ij")
        return np.stack([a.ravel() - (nr - 1) / 2, b.ravel() - (nc - 1) / 2], axis=-1)

    @cached_property
    def subarray_offsets(self) -> np.ndarray:
        """Phase-centre offsets from subarray 0 in element spacings, ``(M, 2)``."""
        mr, mc = self.subarray_grid
        nr, nc = self.subarray_shape
        i, j = np.meshgrid(np.arange(mr), np.arange(mc), indexing="ij")
        return np.stack([i.ravel() * nr, j.ravel() * nc], axis=-1).astype(float)

    @property
    def grating_period(self) -> tuple[float, float]:
        """Shift in (ux, uy) that leaves every inter-subarray phase unchanged."""
        nr, nc = self.subarray_shape
        return 2.0 / nr, 2.0 / nc


def _uv(direction) -> np.ndarray:
    return np.asarray(direction, dtype=float)[..., :2]


def steering_vector(direction, upa: UpaConfig) -> np.ndarray:
    """Full-aperture response, row-major over ``(p, q)`` offsets from element 0."""
    p, q = np.meshgrid(np.arange(upa.rows), np.arange(upa.cols), indexing="ij")
    grid = np.stack([p.ravel(), q.ravel()], axis=-1).astype(float)
    return np.exp(1j * np.pi * (_uv(direction) @ grid.T))


def subarray_phase_factor(direction, m: int, hybrid: HybridConfig) -> complex:
    if not 0 <= m < hybrid.n_subarrays:
        raise IndexError(f"subarray index {m} outside 0..{hybrid.n_subarrays - 1}")
    offset = hybrid.subarray_offsets[m]
    return complex(np.exp(1j * np.pi * (_uv(direction) @ offset)))


def phase_factors(direction, hybrid: HybridConfig) -> np.ndarray:
    """All inter-subarray phase factors, shape ``(..., M)``."""
    return np.exp(1j * np.pi * (_uv(direction) @ hybrid.subarray_offsets.T))


def local_steering(direction, hybrid: HybridConfig) -> np.ndarray:
    """Subarray steering vector (identical for every subarray), ``(..., N_sub)``."""
    return np.exp(1j * np.pi * (_uv(direction) @ hybrid.local_offsets.T))


def combining_weights(pointing, hybrid: HybridConfig) -> np.ndarray:
    """Analog weights ``b^(m)`` steering every subarray at ``pointing``, ``(M, N_sub)``."""
    b = local_steering(pointing, hybrid)
    return np.broadcast_to(b, (hybrid.n_subarrays, hybrid.n_sub)).copy()


def array_factor(direction, pointing, hybrid: HybridConfig) -> np.ndarray:
    """Subarray gain ``b^H a`` for weights steered at ``pointing``; real-valued.

    Separable into two 1-D cosine sums because offsets are centred.
    """
    delta = _uv(direction) - _uv(pointing)
    nr, nc = hybrid.subarray_shape
    ar = np.arange(nr) - (nr - 1) / 2
    ac = np.arange(nc) - (nc - 1) / 2
    gx = np.cos(np.pi * delta[..., 0, None] * ar).sum(axis=-1)
    gy = np.cos(np.pi * delta[..., 1, None] * ac).sum(axis=-1)
    return gx * gy


def subarray_response(direction, pointing, hybrid: HybridConfig) -> np.ndarray:
    """Per-subarray combined response ``(b^(m))^H a^(m) f^(m)``, shape ``(..., M)``."""
    af = array_factor(direction, pointing, hybrid)
    return af[..., None] * phase_factors(direction, hybrid)


def beamformed_template(direction, pointing, hybrid: HybridConfig, s) -> np.ndarray:
    """Noiseless, channel-free received block ``x``, shape ``(M, N_s)``."""
    s = np.asarray(s, dtype=complex)
    if s.size == 0:
        raise ValueError("pilot sequence must be nonempty")
    return subarray_response(direction, pointing, hybrid)[..., None] * s


def template_of_gamma(t, gamma, pointing, hybrid: HybridConfig, s, shape: OrbitShape) -> np.ndarray:
    return beamformed_template(orbit_direction(t, gamma, shape), pointing, hybrid, s)


def response_of_gamma(t, gamma, pointing, hybrid: HybridConfig, shape: OrbitShape) -> np.ndarray:
    return subarray_response(orbit_direction(t, gamma, shape), pointing, hybrid)


GRADIENT_STEP = 1e-5


def response_gradient(t, gamma, pointing, hybrid: HybridConfig, shape: OrbitShape,
                      step: float = GRADIENT_STEP) -> np.ndarray:
    """Central-difference Jacobian of the subarray response, shape ``(..., 3, M)``."""
    g = as_gamma(gamma)
    eye = np.eye(3) * step
    gp = g[..., None, :] + eye
    gm = g[..., None, :] - eye
    t = np.asarray(t, dtype=float)[..., None]
    pointing = np.asarray(pointing, dtype=float)[..., None, :]
    rp = response_of_gamma(t, gp, pointing, hybrid, shape)
    rm = response_of_gamma(t, gm, pointing, hybrid, shape)
    return (rp - rm) / (2.0 * step)


def template_gradient(t, gamma, pointing, hybrid: HybridConfig, s, shape: OrbitShape,
                      step: float = GRADIENT_STEP) -> np.ndarray:
    """Columns ``dx/dalpha, dx/dbeta, dx/deta0`` of the template, shape ``(3, M, N_s)``."""
    s = np.asarray(s, dtype=complex)
    return response_gradient(t, gamma, pointing, hybrid, shape, step)[..., None] * s
