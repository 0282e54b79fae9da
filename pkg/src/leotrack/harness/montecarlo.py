"""Monte Carlo comparison of the VMP tracker and the two-step baseline.

Run ``k`` of an experiment seeded with ``seed`` draws all of its randomness
from ``SeedSequence([seed, k])``, so results do not depend on worker count or
scheduling order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..baseline import TwoStepTracker
from ..errors import BelowHorizon, OutOfRange, ScenarioError
from ..link import amplitude_at, noise_precision
from ..orbit import OrbitShape, is_visible, polar_rate, sample_prior
from ..signal import SignalFrame, Trajectory, drifting_trajectory, obstruct, synthesize_frame, true_direction, true_position
from ..vmp import ObservationModel, VmpTracker
from .config import ScenarioConfig
from .metrics import MetricSeries, angular_error

MAX_ORBIT_DRAWS = 100_000


def rising_pass_mask(gammas: np.ndarray, shape: OrbitShape, duration: float) -> np.ndarray:
    """Orbits visible at 0 and at ``duration`` and rising at 0 (one continuous pass)."""
    return (
        is_visible(0.0, gammas, shape)
        & is_visible(duration, gammas, shape)
        & (polar_rate(0.0, gammas, shape) < 0)
    )


def draw_pass(rng: np.random.Generator, shape: OrbitShape, duration: float,
              accept: Callable[[np.ndarray], bool] | None = None,
              max_draws: int = MAX_ORBIT_DRAWS, chunk: int = 1000) -> np.ndarray:
    """First prior draw giving a rising pass of at least ``duration`` seconds."""
    drawn = 0
    while drawn < max_draws:
        n = min(chunk, max_draws - drawn)
        g = sample_prior(rng, n)
        drawn += n
        for i in np.flatnonzero(rising_pass_mask(g, shape, duration)):
            if accept is None or accept(g[i]):
                return g[i]
    raise ScenarioError(f"no orbit visible for {duration} s in {max_draws} prior draws")


def perturb_direction(d, angle_deg: float, rng: np.random.Generator) -> np.ndarray:
    """Rotate unit vector ``d`` by ``angle_deg`` about a random perpendicular axis."""
    d = np.asarray(d, dtype=float)
    axis = np.cross(d, rng.standard_normal(3))
    axis /= np.linalg.norm(axis)
    a = np.radians(angle_deg)
    return d * np.cos(a) + np.cross(axis, d) * np.sin(a)


@dataclass(frozen=True)
class RunSetup:
    """Everything fixed for one Monte Carlo run before any frame is drawn."""

    truth: object  # orbit angles or a Trajectory
    gamma_v: float
    gamma_p: float
    initial_aoa: np.ndarray


def _trajectory_ok(traj: Trajectory, duration: float) -> bool:
    return bool(np.all(traj.positions[traj.t <= duration, 2] > 0))


def setup_run(cfg: ScenarioConfig, rng: np.random.Generator) -> RunSetup:
    shape, budget, hybrid = cfg.shape, cfg.budget, cfg.hybrid
    if cfg.trajectory is not None:
        truth = Trajectory.load(cfg.trajectory)
        if truth.t[0] > 0 or truth.t[-1] < cfg.duration:
            raise ScenarioError("trajectory file does not span the run duration")
        if not _trajectory_ok(truth, cfg.duration):
            raise ScenarioError("trajectory goes below the horizon during the run")
    elif cfg.alpha_drift:
        def ok(g):
            return _trajectory_ok(drifting_trajectory(g, shape, cfg.duration, cfg.alpha_drift), cfg.duration)
        gamma = draw_pass(rng, shape, cfg.duration, ok)
        truth = drifting_trajectory(gamma, shape, cfg.duration, cfg.alpha_drift)
    else:
        truth = draw_pass(rng, shape, cfg.duration)
    gamma_v = noise_precision(cfg.snr_db, amplitude_at(true_position(0.0, truth, shape), budget), hybrid)
    gamma_p = 1.0 / amplitude_at(np.array([0.0, 0.0, shape.altitude]), budget) ** 2
    aoa0 = perturb_direction(true_direction(0.0, truth, shape), cfg.init_error_deg, rng)
    return RunSetup(truth, gamma_v, gamma_p, aoa0)


def frame_source(cfg: ScenarioConfig, setup: RunSetup, rng: np.random.Generator):
    """``make_frame(t, pointing)`` for one method's closed loop."""
    shape, budget, hybrid, pilot = cfg.shape, cfg.budget, cfg.hybrid, cfg.pilot

    def make_frame(t: float, pointing) -> SignalFrame:
        fr = synthesize_frame(t, setup.truth, pointing, hybrid, budget, setup.gamma_v, pilot, rng, shape)
        return obstruct(fr, cfg.obstruct, setup.gamma_v, rng)

    return make_frame


def track(tracker, frame_times, make_frame, metric_times) -> np.ndarray:
    """Closed loop: before reporting at each metric time, feed every frame due by then.

    Returns the reported directions, ``(len(metric_times), 3)``.
    """
    frame_times = list(frame_times)
    out = []
    i = 0
    for t in metric_times:
        while i < len(frame_times) and frame_times[i] <= t + 1e-9:
            tf = float(frame_times[i])
            tracker.process(make_frame(tf, tracker.pointing(tf)))
            i += 1
        out.append(tracker.estimate(float(t)))
    return np.array(out)


def simulate_run(cfg: ScenarioConfig, k: int) -> dict[str, np.ndarray]:
    """Per-method angular error curves on the metric grid for run ``k``."""
    setup_ss, vmp_frames_ss, vmp_alg_ss, base_ss = np.random.SeedSequence([cfg.seed, k]).spawn(4)
    try:
        setup = setup_run(cfg, np.random.default_rng(setup_ss))
        shape, hybrid = cfg.shape, cfg.hybrid
        metric_t = cfg.metric_times()
        truth_dirs = true_direction(metric_t, setup.truth, shape)
        out = {}
        if "vmp" in cfg.methods:
            model = ObservationModel(hybrid, shape, cfg.pilot, setup.gamma_v, setup.gamma_p)
            tracker = VmpTracker(model, setup.initial_aoa, cfg.vmp, np.random.default_rng(vmp_alg_ss))
            src = frame_source(cfg, setup, np.random.default_rng(vmp_frames_ss))
            out["vmp"] = angular_error(track(tracker, cfg.vmp_times(), src, metric_t), truth_dirs)
        if "two-step" in cfg.methods:
            tracker = TwoStepTracker(setup.initial_aoa, hybrid)
            src = frame_source(cfg, setup, np.random.default_rng(base_ss))
            out["two-step"] = angular_error(track(tracker, cfg.baseline_times(), src, metric_t), truth_dirs)
    except (BelowHorizon, OutOfRange) as exc:
        raise ScenarioError(f"run {k}: {exc}") from exc
    return out


def _simulate_star(args):
    return simulate_run(*args)


def run_montecarlo(cfg: ScenarioConfig, progress: Callable[[int], None] | None = None) -> list[MetricSeries]:
    """Average each method's error curve over ``cfg.runs`` runs."""
    jobs = [(cfg, k) for k in range(cfg.runs)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_simulate_star, jobs))
    else:
        results = []
        for job in jobs:
            results.append(_simulate_star(job))
            if progress is not None:
                progress(len(results))
    t = cfg.metric_times()
    return [MetricSeries.from_runs(m, t, np.stack([r[m] for r in results])) for m in cfg.methods]
