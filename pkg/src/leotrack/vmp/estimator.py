"""Joint orbit/channel tracking by variational message passing.

Initialisation draws orbit candidates consistent with the initial AoA, turns
them into a kernel-density prior, and maximises the orbit log-density over the
first two frames from the most promising candidates.  Each later frame gets one
channel update (using the previous orbit moments), one re-maximisation of the
orbit log-density started at the previous mean, and a Laplace covariance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path

import numpy as np
from scipy.stats import chi2

from ..errors import SingularHessian
from ..orbit import OrbitShape, direction
from ..signal import SignalFrame
from .abc_sampler import DEFAULT_N_SAMPLES, N_TRIALS, AbcResult, abc_sample
from .kde import DEFAULT_BANDWIDTH, KdePrior
from .objective import (
    FrameStatistics,
    ObservationModel,
    OrbitSurrogate,
    log_q_gamma,
    matched_filter,
    profiled_log_q,
    update_channel,
)
from .optimize import laplace_covariance, maximize_from

HISTORY_HEADER = (
    ["n", "t", "alpha", "beta", "eta0"]
    + [f"cov_{i}{j}" for i in range(3) for j in range(3)]
    + ["h_re", "h_im", "h_var"]
)


@dataclass(frozen=True)
class VmpConfig:
    n_samples: int = DEFAULT_N_SAMPLES
    n_trials: int = N_TRIALS
    bandwidth: float = DEFAULT_BANDWIDTH
    n_starts: int = 60
    update_interval: float = 20.0  # s; also the ABC visibility look-ahead
    rho: float = 1.0


@dataclass(frozen=True)
class HistoryRow:
    n: int
    t: float
    mean: np.ndarray
    covariance: np.ndarray
    h_mean: complex
    h_var: float
    flagged: bool = False

    def as_csv(self) -> list:
        return [self.n, repr(float(self.t)), *(repr(float(v)) for v in self.mean),
                *(repr(float(v)) for v in self.covariance.ravel()),
                repr(self.h_mean.real), repr(self.h_mean.imag), repr(float(self.h_var))]


@dataclass(frozen=True)
class VmpState:
    model: ObservationModel
    prior: KdePrior
    stats: FrameStatistics
    orbit: OrbitSurrogate
    history: tuple[HistoryRow, ...] = ()
    abc: AbcResult | None = field(default=None, repr=False)

    def objective(self, rho: float = 1.0, stats: FrameStatistics | None = None):
        return partial(log_q_gamma, stats=self.stats if stats is None else stats,
                       prior=self.prior, rho=rho, model=self.model)


def predict_aoa(t, orbit: OrbitSurrogate, shape: OrbitShape) -> np.ndarray:
    """Beam direction at any time from the current orbit mean."""
    return direction(t, orbit.mean, shape)


def _frame_stat_inputs(frames, model: ObservationModel):
    return [(fr.t, fr.pointing, matched_filter(fr, model.pilot)) for fr in frames]


def refit_surrogates(stats: FrameStatistics, orbit: OrbitSurrogate, model: ObservationModel) -> FrameStatistics:
    """Recompute every frame's channel surrogate from ``orbit``."""
    means, variances = [], []
    for t, p, z in zip(stats.t, stats.pointing, stats.z):
        s = update_channel(t, z, p, orbit, model)
        means.append(s.mean)
        variances.append(s.variance)
    return stats.with_surrogates(means, variances)


def initialize(frames, initial_aoa, model: ObservationModel, config: VmpConfig,
               rng: np.random.Generator) -> VmpState:
    """Orbit and channel moments from the first frames and an initial AoA."""
    frames = list(frames)
    if len(frames) < 2:
        raise ValueError("initialisation needs at least two frames")
    abc = abc_sample(initial_aoa, config.n_samples, rng, model.shape,
                     lookahead=config.update_interval, n_trials=config.n_trials)
    prior = KdePrior(abc.samples, config.bandwidth)

    stats = FrameStatistics()
    placeholder = OrbitSurrogate.point(abc.samples[0])
    for t, p, z in _frame_stat_inputs(frames, model):
        stats = stats.append(t, p, z, update_channel(t, z, p, placeholder, model))

    # Rank candidates with channels re-fitted per candidate, then climb from the best.
    profiled = partial(profiled_log_q, stats=stats, prior=prior, rho=config.rho, model=model)
    scores = profiled(abc.samples)
    n_starts = min(config.n_starts, abc.samples.shape[0])
    starts = abc.samples[np.argsort(-scores, kind="stable")[:n_starts]]
    best_x, best_f = None, -np.inf
    for s in starts:
        x, f = maximize_from(profiled, s)
        if f > best_f:
            best_x, best_f = x, f

    stats = refit_surrogates(stats, OrbitSurrogate.point(best_x), model)
    objective = partial(log_q_gamma, stats=stats, prior=prior, rho=config.rho, model=model)
    mean, _ = maximize_from(objective, best_x)
    cov = laplace_covariance(objective, mean)
    orbit = OrbitSurrogate(mean, cov)
    history = tuple(
        HistoryRow(n, float(stats.t[n]), mean, cov, complex(stats.h_mean[n]), float(stats.h_var[n]))
        for n in range(len(stats))
    )
    return VmpState(model, prior, stats, orbit, history, abc)


def step(state: VmpState, frame: SignalFrame, config: VmpConfig) -> VmpState:
    """Absorb one frame: channel update, orbit re-maximisation, Laplace covariance."""
    model = state.model
    z = matched_filter(frame, model.pilot)
    surrogate = update_channel(frame.t, z, frame.pointing, state.orbit, model)
    stats = state.stats.append(frame.t, frame.pointing, z, surrogate)
    objective = partial(log_q_gamma, stats=stats, prior=state.prior, rho=config.rho, model=model)
    mean, _ = maximize_from(objective, state.orbit.mean)
    flagged = False
    try:
        cov = laplace_covariance(objective, mean)
    except SingularHessian:
        cov, flagged = state.orbit.covariance, True
    orbit = OrbitSurrogate(mean, cov)
    row = HistoryRow(len(stats) - 1, float(frame.t), mean, cov, surrogate.mean, surrogate.variance, flagged)
    return replace(state, stats=stats, orbit=orbit, history=state.history + (row,))


class VmpTracker:
    """Frame-by-frame driver: buffers until it can initialise, then steps.

    ``pointing(t)`` gives the beam to use for a frame recorded at ``t``.
    """

    def __init__(self, model: ObservationModel, initial_aoa, config: VmpConfig,
                 rng: np.random.Generator):
        self.model = model
        self.initial_aoa = np.asarray(initial_aoa, dtype=float) / np.linalg.norm(initial_aoa)
        self.config = config
        self.rng = rng
        self.state: VmpState | None = None
        self._pending: list[SignalFrame] = []

    def pointing(self, t: float) -> np.ndarray:
        return self.estimate(t)

    def estimate(self, t: float) -> np.ndarray:
        if self.state is None:
            return self.initial_aoa.copy()
        return predict_aoa(t, self.state.orbit, self.model.shape)

    def process(self, frame: SignalFrame) -> None:
        if self.state is None:
            self._pending.append(frame)
            if len(self._pending) >= 2:
                self.state = initialize(self._pending, self.initial_aoa, self.model, self.config, self.rng)
                self._pending = []
        else:
            self.state = step(self.state, frame, self.config)


def ci_threshold(level: float, dof: int = 3) -> float:
    """Squared Mahalanobis radius enclosing probability ``level``."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    return float(chi2.ppf(level, dof))


def sample_ci_orbits(orbit: OrbitSurrogate, level: float, count: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Draws from the orbit surrogate lying inside its ``level`` confidence ellipsoid."""
    threshold = ci_threshold(level)
    w, v = np.linalg.eigh(0.5 * (orbit.covariance + orbit.covariance.T))
    root = v * np.sqrt(np.clip(w, 0.0, None))
    kept = []
    n_kept = 0
    while n_kept < count:
        xi = rng.standard_normal((max(2 * count, 16), 3))
        xi = xi[np.sum(xi * xi, axis=1) <= threshold]
        kept.append(xi)
        n_kept += xi.shape[0]
    xi = np.concatenate(kept)[:count]
    return orbit.mean + xi @ root.T


def write_history(path: str | Path, history) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORY_HEADER)
        for row in history:
            w.writerow(row.as_csv())


def read_history(path: str | Path) -> list[HistoryRow]:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            mean = np.array([float(rec[k]) for k in ("alpha", "beta", "eta0")])
            cov = np.array([float(rec[f"cov_{i}{j}"]) for i in range(3) for j in range(3)]).reshape(3, 3)
            rows.append(HistoryRow(int(rec["n"]), float(rec["t"]), mean, cov,
                                   complex(float(rec["h_re"]), float(rec["h_im"])), float(rec["h_var"])))
    return rows
