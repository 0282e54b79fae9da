"""Scenario description, read from an INI file.

Every key is optional; the shipped defaults reproduce the standard desk-scale
experiment (28 GHz, 8x8 subarrays of 4x4 elements, 5 W, 550 km, 0.01 %
exceedance).  Section names only group keys for readability.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..hybrid import HybridConfig
from ..link import DEFAULT_ATMOS_TABLE, LinkBudget, load_atmos_table
from ..orbit import DEFAULT_ALTITUDE, OrbitShape
from ..signal import DEFAULT_PILOT_LENGTH, DEFAULT_PILOT_ROOT, zadoff_chu
from ..vmp import VmpConfig


@dataclass(frozen=True)
class ScenarioConfig:
    # orbit
    altitude_km: float = DEFAULT_ALTITUDE / 1e3
    trajectory: str | None = None
    alpha_drift: float = 0.0  # rad over the pass; nonzero gives a mismatched truth
    # array
    subarray_rows: int = 8
    subarray_cols: int = 8
    sub_rows: int = 4
    sub_cols: int = 4
    carrier_ghz: float = 28.0
    element_gain_db: float = 5.46
    # link
    tx_power_w: float = 5.0
    exceedance_p: float = 1e-4
    atmos_table: str | None = None
    # pilot
    pilot_length: int = DEFAULT_PILOT_LENGTH
    pilot_root: int = DEFAULT_PILOT_ROOT
    # schedule
    duration: float = 500.0
    vmp_interval: float = 20.0
    baseline_interval: float = 5.0
    metric_step: float = 5.0
    # scenario
    snr_db: float = 0.0
    obstruct: tuple[float, float] | None = None
    window_rho: float = 1.0
    init_error_deg: float = 1.0
    # estimator
    abc_samples: int = 2000
    abc_trials: int = 1_000_000
    kde_bandwidth: float = 0.005
    n_starts: int = 60
    # experiment
    runs: int = 10
    seed: int = 0
    workers: int = 1
    methods: tuple[str, ...] = field(default=("vmp", "two-step"))

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise ConfigError("duration must be positive")
        for name in ("vmp_interval", "baseline_interval", "metric_step"):
            step = getattr(self, name)
            if not 0 < step <= self.duration:
                raise ConfigError(f"{name} must lie in (0, duration]")
            if not _divides(step, self.duration):
                raise ConfigError(f"{name} must divide the duration")
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if not 0.0 < self.window_rho <= 1.0:
            raise ConfigError("window_rho must lie in (0, 1]")
        if self.obstruct is not None and not self.obstruct[0] <= self.obstruct[1]:
            raise ConfigError("obstruction window must have start <= end")
        if self.init_error_deg < 0:
            raise ConfigError("init_error_deg must be non-negative")
        if self.trajectory is not None and self.alpha_drift:
            raise ConfigError("alpha_drift and trajectory are mutually exclusive")
        unknown = set(self.methods) - {"vmp", "two-step"}
        if unknown or not self.methods:
            raise ConfigError(f"methods must be drawn from vmp, two-step (got {sorted(unknown)})")

    # -- derived objects -------------------------------------------------
    @property
    def shape(self) -> OrbitShape:
        return OrbitShape.from_altitude(self.altitude_km * 1e3)

    @property
    def hybrid(self) -> HybridConfig:
        return HybridConfig((self.subarray_rows, self.subarray_cols), (self.sub_rows, self.sub_cols),
                            self.carrier_ghz * 1e9, self.element_gain_db)

    @property
    def budget(self) -> LinkBudget:
        table = DEFAULT_ATMOS_TABLE if self.atmos_table is None else load_atmos_table(self.atmos_table)
        n_tx = 32 * 32
        return LinkBudget(self.tx_power_w, self.carrier_ghz * 1e9,
                          10.0 * np.log10(n_tx) + self.element_gain_db,
                          self.element_gain_db, table, self.exceedance_p)

    @property
    def pilot(self) -> np.ndarray:
        return zadoff_chu(self.pilot_length, self.pilot_root)

    @property
    def vmp(self) -> VmpConfig:
        return VmpConfig(self.abc_samples, self.abc_trials, self.kde_bandwidth, self.n_starts,
                         self.vmp_interval, self.window_rho)

    def vmp_times(self) -> np.ndarray:
        return _grid(self.vmp_interval, self.duration)

    def baseline_times(self) -> np.ndarray:
        return _grid(self.baseline_interval, self.duration)

    def metric_times(self) -> np.ndarray:
        return _grid(self.metric_step, self.duration)


def _divides(step: float, total: float) -> bool:
    k = total / step
    return abs(k - round(k)) < 1e-9


def _grid(step: float, duration: float) -> np.ndarray:
    return step * np.arange(int(round(duration / step)) + 1)


_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}


def parse_window(text: str) -> tuple[float, float] | None:
    """``"T0:T1"`` -> ``(T0, T1)``; empty or ``none`` -> ``None``."""
    text = text.strip()
    if not text or text.lower() == "none":
        return None
    try:
        a, b = text.split(":")
        return float(a), float(b)
    except ValueError as exc:
        raise ConfigError(f"expected T0:T1, got {text!r}") from exc


def _convert(name: str, raw: str):
    default = _FIELDS[name].default
    if name == "obstruct":
        return parse_window(raw)
    if name == "methods":
        return tuple(m.strip() for m in raw.split(",") if m.strip())
    if name in ("trajectory", "atmos_table"):
        return raw.strip() or None
    try:
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


def config_from_mapping(values: dict, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Apply string-valued overrides to ``base`` (defaults if omitted)."""
    unknown = set(values) - set(_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    converted = {k: _convert(k, str(v)) for k, v in values.items()}
    return dataclasses.replace(base or ScenarioConfig(), **converted)


def load_config(path: str | Path | None) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key in values:
                raise ConfigError(f"key {key} given twice")
            values[key] = raw
    return config_from_mapping(values)


def dump_config(cfg: ScenarioConfig) -> str:
    """INI text that loads back to ``cfg``."""
    lines = ["[scenario]"]
    for name in _FIELDS:
        v = getattr(cfg, name)
        if v is None:
            text = ""
        elif name == "obstruct":
            text = f"{v[0]!r}:{v[1]!r}"
        elif name == "methods":
            text = ",".join(v)
        else:
            text = repr(v) if isinstance(v, float) else str(v)
        lines.append(f"{name} = {text}")
    return "\n".join(lines) + "\n"
