"""Angular error between estimated and true directions, and its run average."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def angular_error(est, truth) -> np.ndarray | float:
    """Angle in degrees between unit direction(s) ``est`` and ``truth``."""
    c = np.sum(np.asarray(est, dtype=float) * np.asarray(truth, dtype=float), axis=-1)
    out = np.degrees(np.arccos(np.clip(c, -1.0, 1.0)))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class MetricSeries:
    """Mean angular error ``a_e`` over ``k`` runs at times ``t`` for one method.

    ``per_run`` keeps the individual ``(k, len(t))`` error curves when known.
    """

    method: str
    t: np.ndarray
    a_e: np.ndarray
    k: int
    per_run: np.ndarray | None = None

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        a_e = np.asarray(self.a_e, dtype=float)
        if t.shape != a_e.shape or t.ndim != 1:
            raise ValueError("t and a_e must be matching 1-D arrays")
        if np.any(a_e < 0):
            raise ValueError("angular error cannot be negative")
        if self.k < 1 and t.size:
            raise ValueError("k must be at least 1")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "a_e", a_e)

    @classmethod
    def from_runs(cls, method: str, t, errors) -> "MetricSeries":
        errors = np.atleast_2d(np.asarray(errors, dtype=float))
        return cls(method, t, errors.mean(axis=0), errors.shape[0], errors)

    def at(self, t: float) -> float:
        """Value at the grid time closest to ``t``."""
        return float(self.a_e[int(np.argmin(np.abs(self.t - t)))])

    def run_values_at(self, t: float) -> np.ndarray:
        if self.per_run is None:
            raise ValueError("per-run errors were not kept")
        return self.per_run[:, int(np.argmin(np.abs(self.t - t)))]
