from functools import partial

import numpy as np
import pytest

from leotrack.hybrid import response_gradient
from leotrack.link import noise_precision_for_snr
from leotrack.orbit import direction
from leotrack.signal import SignalFrame, synthesize_frame
from leotrack.vmp import (
    ChannelSurrogate,
    FrameStatistics,
    ObservationModel,
    OrbitSurrogate,
    expected_energy,
    gradient_gram,
    log_q_gamma,
    matched_filter,
    numerical_hessian,
    profiled_log_q,
    update_channel,
)
from leotrack.vmp.objective import frame_log_terms, window_weights

GAMMA = np.array([1.5, 0.7, 4.5])


@pytest.fixture(scope="module")
def model(shape, hybrid, budget, pilot):
    gv = noise_precision_for_snr(0.0, GAMMA, budget, hybrid, shape)
    return ObservationModel(hybrid, shape, pilot, gv)


def noiseless(t, model, c, pointing=None):
    p = direction(t, GAMMA, model.shape) if pointing is None else pointing
    r = model.response(t, GAMMA, p)
    return SignalFrame(t, c * r[:, None] * model.pilot, p)


def stats_for(frames, model, orbit=None):
    orbit = orbit or OrbitSurrogate.point(GAMMA)
    st = FrameStatistics()
    for fr in frames:
        z = matched_filter(fr, model.pilot)
        st = st.append(fr.t, fr.pointing, z, update_channel(fr.t, z, fr.pointing, orbit, model))
    return st


def test_channel_collapses_to_least_squares(model):
    c = 3e-6 * np.exp(0.7j)
    fr = noiseless(10.0, model, c, direction(10.0, GAMMA + [0.001, 0, 0], model.shape))
    z = matched_filter(fr, model.pilot)
    s = update_channel(fr.t, z, fr.pointing, OrbitSurrogate.point(GAMMA), model)
    assert abs(s.mean - c) <= 1e-12 * abs(c)
    x = model.response(fr.t, GAMMA, fr.pointing)[:, None] * model.pilot
    assert s.variance == pytest.approx(1.0 / (model.gamma_v * np.vdot(x, x).real), rel=1e-12)


def test_orbit_uncertainty_shrinks_channel_variance(model):
    fr = noiseless(10.0, model, 1e-6)
    z = matched_filter(fr, model.pilot)
    point = update_channel(fr.t, z, fr.pointing, OrbitSurrogate.point(GAMMA), model)
    spread = update_channel(fr.t, z, fr.pointing, OrbitSurrogate(GAMMA, np.eye(3) * 1e-8), model)
    assert spread.variance < point.variance
    from dataclasses import replace
    damped = update_channel(fr.t, z, fr.pointing, OrbitSurrogate.point(GAMMA), replace(model, gamma_p=1e12))
    assert damped.variance < point.variance
    assert damped.variance > 0


def test_gradient_gram_psd(model):
    p = direction(10.0, GAMMA, model.shape)
    G = gradient_gram(10.0, GAMMA, p, model)
    np.testing.assert_allclose(G, G.T, rtol=1e-12)
    assert np.linalg.eigvalsh(G).min() > -1e-9 * np.abs(G).max()
    jac = response_gradient(10.0, GAMMA, p, model.hybrid, model.shape)
    assert G[0, 0] == pytest.approx(model.gamma_v * model.pilot_energy * np.vdot(jac[0], jac[0]).real)


def test_expected_energy_first_order(model):
    p = direction(10.0, GAMMA, model.shape)
    cov = np.diag([1e-8, 4e-8, 1e-8])
    base = expected_energy(10.0, OrbitSurrogate.point(GAMMA), p, model)
    with_cov = expected_energy(10.0, OrbitSurrogate(GAMMA, cov), p, model)
    assert with_cov - base == pytest.approx(np.trace(cov @ gradient_gram(10.0, GAMMA, p, model)))


def test_rho_one_is_plain_sum(model):
    st = stats_for([noiseless(t, model, 1e-6 * np.exp(1j * t)) for t in (0.0, 20.0, 40.0)], model)
    g = GAMMA + [1e-4, -2e-4, 1e-4]
    assert log_q_gamma(g, st, rho=1.0, model=model) == pytest.approx(frame_log_terms(g, st, model).sum())
    np.testing.assert_allclose(window_weights(3, 0.5), [0.25, 0.5, 1.0])
    with pytest.raises(ValueError):
        window_weights(3, 0.0)


def test_empty_frame_contributes_nothing(model):
    st = stats_for([noiseless(0.0, model, 1e-6), noiseless(20.0, model, 1e-6)], model)
    p = direction(40.0, GAMMA, model.shape)
    blank = st.append(40.0, p, np.zeros(model.hybrid.n_subarrays), ChannelSurrogate(0j, 1e-300))
    g = GAMMA + [2e-4, 0, -1e-4]
    assert log_q_gamma(g, blank, model=model) == pytest.approx(log_q_gamma(g, st, model=model), rel=1e-12)


def test_phase_invariance(model):
    fr = noiseless(10.0, model, 1e-6)
    st = stats_for([fr], model)
    rot = FrameStatistics(st.t, st.pointing, st.z * np.exp(0.9j), st.h_mean * np.exp(-2.1j), st.h_var)
    g = GAMMA + [3e-4, 1e-4, 0]
    assert log_q_gamma(g, rot, model=model) == pytest.approx(log_q_gamma(g, st, model=model), rel=1e-12)


def test_ascent_from_truth_stays_at_truth(model):
    from leotrack.vmp.optimize import maximize_from
    st = stats_for([noiseless(30.0, model, 2e-6)], model)
    f = partial(log_q_gamma, stats=st, model=model)
    x, fx = maximize_from(f, GAMMA)
    # the optimum is a whole family of orbits through the true AoA; truth is on it
    assert fx == pytest.approx(f(GAMMA), rel=1e-9)
    d = direction(30.0, x, model.shape) @ direction(30.0, GAMMA, model.shape)
    assert np.degrees(np.arccos(min(1.0, d))) < 1e-4


def test_grid_maximum_at_true_direction(model):
    # single noiseless frame, flat prior, true channel: best grid orbit sees the true AoA
    st = stats_for([noiseless(30.0, model, 2e-6)], model)
    rng = np.random.default_rng(0)
    grid = GAMMA + rng.uniform(-0.02, 0.02, (4000, 3))
    grid = np.vstack([grid, GAMMA])
    vals = log_q_gamma(grid, st, model=model)
    best = grid[np.argmax(vals)]
    d_best, d_true = direction(30.0, best, model.shape), direction(30.0, GAMMA, model.shape)
    assert np.degrees(np.arccos(min(1.0, d_best @ d_true))) < 1e-6


def test_single_frame_has_flat_direction(model):
    # one snapshot fixes the AoA (two constraints) but not all three angles
    t = 30.0
    st = stats_for([noiseless(t, model, 2e-6)], model)
    H = numerical_hessian(partial(log_q_gamma, stats=st, model=model), GAMMA)
    w, v = np.linalg.eigh(-H)
    assert w[0] < 1e-3 * w[1]
    null = v[:, 0]
    h = 1e-4
    moved = direction(t, GAMMA + h * null, model.shape) @ direction(t, GAMMA, model.shape)
    across = direction(t, GAMMA + h * v[:, 1], model.shape) @ direction(t, GAMMA, model.shape)
    assert np.arccos(min(1.0, moved)) < 0.05 * np.arccos(min(1.0, across))


def test_profiled_matches_refitted_channels(model):
    frames = [noiseless(t, model, 1e-6 * np.exp(0.3j * t)) for t in (0.0, 20.0)]
    g = GAMMA + [2e-4, -1e-4, 1e-4]
    refit = stats_for(frames, model, OrbitSurrogate.point(g))
    assert profiled_log_q(g, stats_for(frames, model), model=model) == pytest.approx(
        log_q_gamma(g, refit, model=model), rel=1e-10)


def test_objective_batches_match_scalar(model):
    st = stats_for([noiseless(t, model, 1e-6) for t in (0.0, 20.0)], model)
    g = GAMMA + 1e-3 * np.random.default_rng(0).standard_normal((5, 3))
    batch = log_q_gamma(g, st, model=model, rho=0.5)
    np.testing.assert_allclose(batch, [log_q_gamma(x, st, model=model, rho=0.5) for x in g], rtol=1e-12)
    with pytest.raises(ValueError):
        log_q_gamma(GAMMA, st)


def test_dropping_negligible_old_frame(model):
    frames = [noiseless(t, model, 1e-6) for t in np.arange(0.0, 30 * 20.0, 20.0)]
    st = stats_for(frames, model)
    g = GAMMA + [1e-4, 1e-4, -1e-4]
    assert 0.1 ** (len(st) - 1) < 1e-10
    full = log_q_gamma(g, st, rho=0.1, model=model)
    trimmed = log_q_gamma(g, st.drop_first(), rho=0.1, model=model)
    assert abs(full - trimmed) < 1e-8 * abs(full)


def test_channel_surrogate_validation():
    with pytest.raises(ValueError):
        ChannelSurrogate(0j, 0.0)


def test_energy_expectation_needs_curvature_term(model):
    # Monte Carlo oracle for E[<x|L|x>]: the full second-order expansion
    # f(mean) + tr(C H_f) / 2 agrees, while the first-order form in
    # expected_energy adds tr(C G) with the wrong sign at the beam peak.
    t = 20.0
    p = direction(t, GAMMA, model.shape)
    f = lambda g: model.gamma_v * model.pilot_energy * np.sum(np.abs(model.response(t, g, p)) ** 2, axis=-1)
    hess = numerical_hessian(f, GAMMA)
    rng = np.random.default_rng(7)
    cov = (1e-4) ** 2 * np.diag([1.0, 0.5, 2.0])
    vals = f(rng.multivariate_normal(GAMMA, cov, 100_000))
    mc, se = vals.mean(), vals.std() / np.sqrt(vals.size)
    assert abs(f(GAMMA) + 0.5 * np.trace(cov @ hess) - mc) < 4 * se
    first = expected_energy(t, OrbitSurrogate(GAMMA, cov), p, model)
    assert first > f(GAMMA) > mc
