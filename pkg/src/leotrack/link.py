"""Downlink budget and the per-frame stochastic channel coefficient."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BelowHorizon, ConfigError
from .hybrid import HybridConfig
from .orbit import OrbitShape, position as orbit_position

SPEED_OF_LIGHT = 2.99792458e8

# Slant-path attenuation at 28 GHz, 0.01 % exceedance, as (elevation deg, dB).
# A coarse stand-in for a full ITU-R P.618 evaluation; override per scenario.
DEFAULT_ATMOS_TABLE: tuple[tuple[float, float], ...] = (
    (0.0, 18.0),
    (5.0, 10.0),
    (10.0, 6.0),
    (20.0, 3.5),
    (30.0, 2.5),
    (45.0, 1.7),
    (60.0, 1.3),
    (90.0, 1.0),
)

# 32x32 transmit UPA, assumed always boresight-aligned with the station.
DEFAULT_TX_GAIN_DB = 10.0 * np.log10(32 * 32) + 5.46


@dataclass(frozen=True)
class LinkBudget:
    tx_power_W: float = 5.0
    carrier_freq: float = 28e9
    tx_gain_db: float = DEFAULT_TX_GAIN_DB
    rx_element_gain_db: float = 5.46
    atmos_table: tuple[tuple[float, float], ...] = field(default=DEFAULT_ATMOS_TABLE)
    exceedance_p: float = 1e-4

    def __post_init__(self) -> None:
        if not 0.0 < self.exceedance_p < 1.0:
            raise ConfigError("exceedance probability must lie in (0, 1)")
        _validate_table(self.atmos_table)
        atten = [row[1] for row in self.atmos_table]
        if any(b > a for a, b in zip(atten, atten[1:])):
            raise ConfigError("attenuation must not increase with elevation")


@dataclass(frozen=True)
class ChannelDraw:
    amplitude: float
    phase: float

    @property
    def h(self) -> complex:
        return complex(self.amplitude * np.exp(1j * self.phase))


def _validate_table(table) -> None:
    if len(table) == 0:
        raise ConfigError("attenuation table is empty")
    elev = [row[0] for row in table]
    if any(b <= a for a, b in zip(elev, elev[1:])):
        raise ConfigError("attenuation table elevations must be strictly increasing")


def load_atmos_table(path: str | Path) -> tuple[tuple[float, float], ...]:
    """Read a two-column ``elevation_deg, attenuation_db`` text file.

    Lines starting with ``#`` and a non-numeric header line are skipped.
    """
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.replace(",", " ").split()
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except (ValueError, IndexError):
            if rows:
                raise ConfigError(f"malformed attenuation row: {line!r}") from None
    table = tuple(rows)
    _validate_table(table)
    return table


def fspl_db(distance, freq) -> np.ndarray | float:
    """Free-space path loss ``20 log10(4 pi d f / c)``."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0) or freq <= 0:
        raise ValueError("distance and frequency must be positive")
    out = 20.0 * np.log10(4.0 * np.pi * d * freq / SPEED_OF_LIGHT)
    return float(out) if out.ndim == 0 else out


def atmos_db(elevation_deg, budget: LinkBudget) -> np.ndarray | float:
    """Piecewise-linear attenuation lookup, clamped at the table ends."""
    table = np.asarray(budget.atmos_table, dtype=float)
    out = np.interp(np.asarray(elevation_deg, dtype=float), table[:, 0], table[:, 1])
    return float(out) if np.ndim(out) == 0 else out


def amplitude_at(pos, budget: LinkBudget) -> float:
    """Channel amplitude for a satellite at ``pos`` (station frame, metres).

    Includes path loss, atmosphere, transmit gain and one receive element's
    gain; the receive array gain comes from combining instead.
    """
    pos = np.asarray(pos, dtype=float)
    if pos[2] <= 0.0:
        raise BelowHorizon("satellite below the horizon")
    dist = float(np.linalg.norm(pos))
    elevation = np.degrees(np.arcsin(pos[2] / dist))
    loss = fspl_db(dist, budget.carrier_freq) + atmos_db(elevation, budget)
    gain_db = budget.tx_gain_db + budget.rx_element_gain_db - loss
    return float(10.0 ** (gain_db / 20.0) * np.sqrt(budget.tx_power_W))


def channel_amplitude(t: float, gamma, budget: LinkBudget, shape: OrbitShape) -> float:
    return amplitude_at(orbit_position(t, gamma, shape), budget)


def draw_channel_at(pos, budget: LinkBudget, rng: np.random.Generator) -> ChannelDraw:
    return ChannelDraw(amplitude_at(pos, budget), float(rng.uniform(0.0, 2.0 * np.pi)))


def draw_channel(t: float, gamma, budget: LinkBudget, shape: OrbitShape,
                 rng: np.random.Generator) -> ChannelDraw:
    return draw_channel_at(orbit_position(t, gamma, shape), budget, rng)


def noise_precision(snr_db: float, amplitude0: float, hybrid: HybridConfig) -> float:
    """Precision giving per-sample, per-subarray SNR ``snr_db`` for a
    perfectly pointed beam of channel amplitude ``amplitude0``.
    """
    signal = amplitude0**2 * hybrid.n_sub**2
    if not signal > 0.0:
        raise ConfigError("zero signal power: SNR cannot be calibrated")
    return float(10.0 ** (snr_db / 10.0) / signal)


def noise_precision_for_snr(snr_db: float, gamma_true, budget: LinkBudget,
                            hybrid: HybridConfig, shape: OrbitShape) -> float:
    """Noise precision that sets the t=0 post-combining SNR to ``snr_db``.

    SNR is ``||h0 x0||^2 / (M N_s / gamma_v)`` with the beam on the satellite;
    for a unit-modulus pilot this reduces to ``|h0|^2 N_sub^2 gamma_v``.
    """
    return noise_precision(snr_db, channel_amplitude(0.0, gamma_true, budget, shape), hybrid)


def complex_noise(shape, gamma_v: float, rng: np.random.Generator) -> np.ndarray:
    """Circular complex Gaussian samples with per-component precision ``gamma_v``."""
    scale = np.sqrt(0.5 / gamma_v)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
