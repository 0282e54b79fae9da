import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leotrack.hybrid import (
    GRADIENT_STEP,
    HybridConfig,
    UpaConfig,
    array_factor,
    beamformed_template,
    combining_weights,
    local_steering,
    phase_factors,
    response_gradient,
    steering_vector,
    subarray_phase_factor,
    subarray_response,
    template_gradient,
    template_of_gamma,
)
from leotrack.orbit import direction

BROADSIDE = np.array([0.0, 0.0, 1.0])


def unit(ux, uy):
    return np.array([ux, uy, np.sqrt(1.0 - ux * ux - uy * uy)])


def full_combined(d, pointing, hybrid):
    """Brute-force per-subarray output built from the full-aperture steering vector."""
    a = steering_vector(d, hybrid.full_upa).reshape(hybrid.full_upa.rows, hybrid.full_upa.cols)
    b = steering_vector(pointing, UpaConfig(*hybrid.subarray_shape))
    nr, nc = hybrid.subarray_shape
    out = []
    for i in range(hybrid.subarray_grid[0]):
        for j in range(hybrid.subarray_grid[1]):
            block = a[i * nr:(i + 1) * nr, j * nc:(j + 1) * nc].ravel()
            out.append(np.vdot(b, block))
    return np.array(out)


def test_broadside_steering_is_all_ones():
    np.testing.assert_allclose(steering_vector(BROADSIDE, UpaConfig(4, 4)), np.ones(16))


def test_endfire_two_element_phase():
    np.testing.assert_allclose(steering_vector([1.0, 0.0, 0.0], UpaConfig(2, 1)), [1, -1], atol=1e-15)


def test_matched_gain_equals_element_count():
    a = steering_vector(unit(0.3, -0.2), UpaConfig(5, 3))
    assert np.vdot(a, a).real == pytest.approx(15)


def test_phase_factor_reference_and_broadside(hybrid):
    d = unit(0.21, 0.37)
    assert subarray_phase_factor(d, 0, hybrid) == pytest.approx(1.0)
    for m in range(hybrid.n_subarrays):
        assert subarray_phase_factor(BROADSIDE, m, hybrid) == pytest.approx(1.0)
    with pytest.raises(IndexError):
        subarray_phase_factor(d, hybrid.n_subarrays, hybrid)


def test_brute_force_grating_pair(hybrid):
    # Search a grid of in-plane shifts for ones that leave every subarray phase unchanged.
    base = unit(-0.2, 0.1)
    f0 = phase_factors(base, hybrid)
    shifts = np.round(np.arange(0.01, 1.0, 0.01), 10)
    found = [s for s in shifts if np.allclose(phase_factors(unit(base[0] + s, base[1]), hybrid), f0, atol=1e-9)]
    assert found and found[0] == pytest.approx(hybrid.grating_period[0])
    # the pair lies inside a single subarray's null-to-null beamwidth (2 * 2/4 in u)
    assert found[0] < 2 * 2.0 / hybrid.subarray_shape[0]


def test_ambiguous_templates_share_phases(hybrid, pilot):
    d1, d2 = unit(-0.2, 0.1), unit(0.3, 0.1)
    pointing = unit(0.05, 0.1)
    x1 = beamformed_template(d1, pointing, hybrid, pilot)
    x2 = beamformed_template(d2, pointing, hybrid, pilot)
    # identical up to a per-subarray real gain (the subarray pattern)
    ratio = x1[:, 0] / x2[:, 0]
    np.testing.assert_allclose(ratio.imag, 0.0, atol=1e-12)
    np.testing.assert_allclose(ratio.real, ratio.real[0], rtol=1e-12)


def test_combining_weights(hybrid):
    np.testing.assert_allclose(combining_weights(BROADSIDE, hybrid), np.ones((hybrid.n_subarrays, hybrid.n_sub)))
    w = combining_weights(unit(0.4, -0.3), hybrid)
    np.testing.assert_allclose(np.abs(w), 1.0)
    np.testing.assert_allclose(np.abs(phase_factors(unit(0.4, -0.3), hybrid)), 1.0)


def test_matched_subarray_gain(hybrid):
    d = unit(0.12, 0.05)
    b = local_steering(d, hybrid)
    assert np.vdot(b, b).real == pytest.approx(hybrid.n_sub)
    assert array_factor(d, d, hybrid) == pytest.approx(hybrid.n_sub)


def test_mispointing_by_null_spacing(hybrid):
    d = unit(0.1, 0.0)
    null = 2.0 / hybrid.subarray_shape[0]
    assert abs(array_factor(unit(0.1 + null, 0.0), d, hybrid)) < 1e-12 * hybrid.n_sub


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6), st.floats(-0.1, 0.1), st.floats(-0.1, 0.1))
def test_separable_response_matches_full_aperture(ux, uy, dx, dy):
    hybrid = HybridConfig()
    d, p = unit(ux, uy), unit(ux + dx, uy + dy)
    r = subarray_response(d, p, hybrid)
    brute = full_combined(d, p, hybrid)
    # the fast form references phases to subarray centres: equal up to one common phase
    common = brute[0] / r[0]
    assert abs(abs(common) - 1.0) < 1e-9
    np.testing.assert_allclose(r * common, brute, atol=1e-9)


def test_full_aperture_gain(hybrid):
    d = unit(0.2, 0.3)
    r = subarray_response(d, d, hybrid)
    assert abs(np.vdot(phase_factors(d, hybrid), r)) == pytest.approx(hybrid.n_subarrays * hybrid.n_sub)
    assert hybrid.n_subarrays * hybrid.n_sub == 1024


def test_broadside_template_unit_pilot(hybrid):
    x = beamformed_template(BROADSIDE, BROADSIDE, hybrid, np.ones(1))
    np.testing.assert_allclose(x[:, 0], hybrid.n_sub)


def test_template_norm_peaks_at_pointing(hybrid, pilot):
    p = unit(0.2, -0.1)
    grid = np.linspace(-0.05, 0.05, 21)
    norms = np.array([[np.linalg.norm(beamformed_template(unit(0.2 + a, -0.1 + b), p, hybrid, pilot))
                       for b in grid] for a in grid])
    i, j = np.unravel_index(np.argmax(norms), norms.shape)
    assert (grid[i], grid[j]) == (0.0, 0.0)


def test_template_of_gamma_matches_direction(shape, hybrid, pilot):
    g = np.array([1.5, 0.7, 4.5])
    p = direction(30.0, g, shape)
    np.testing.assert_array_equal(template_of_gamma(30.0, g, p, hybrid, pilot, shape),
                                  beamformed_template(direction(30.0, g, shape), p, hybrid, pilot))
    dg = np.array([0, 0, 1e-8])
    delta = np.linalg.norm(template_of_gamma(30.0, g + dg, p, hybrid, pilot, shape)
                           - template_of_gamma(30.0, g, p, hybrid, pilot, shape))
    assert delta < 1e-3  # O(1e-8) times the template's sensitivity
    # below the horizon the template is still defined
    below = template_of_gamma(0.0, [np.pi / 2, 0.0, 0.0], p, hybrid, pilot, shape)
    assert np.all(np.isfinite(below))


def _gradient_setup(shape):
    g = np.array([1.5, 0.7, 4.5])
    p = direction(30.0, g + [0.002, -0.001, 0.0], shape)
    return g, p


def test_gradient_is_central_difference(shape, hybrid, pilot):
    g, p = _gradient_setup(shape)
    jac = template_gradient(30.0, g, p, hybrid, pilot, shape)
    h = GRADIENT_STEP
    for i in range(3):
        e = np.eye(3)[i] * h
        fd = (template_of_gamma(30.0, g + e, p, hybrid, pilot, shape)
              - template_of_gamma(30.0, g - e, p, hybrid, pilot, shape)) / (2 * h)
        np.testing.assert_allclose(jac[i], fd, rtol=1e-6, atol=1e-6 * np.abs(fd).max())


def test_gradient_against_four_point_stencil(shape, hybrid):
    g, p = _gradient_setup(shape)
    jac = response_gradient(30.0, g, p, hybrid, shape)
    from leotrack.hybrid import response_of_gamma
    h = 1e-4
    for i in range(3):
        e = np.eye(3)[i] * h
        f = [response_of_gamma(30.0, g + k * e, p, hybrid, shape) for k in (2, 1, -1, -2)]
        oracle = (-f[0] + 8 * f[1] - 8 * f[2] + f[3]) / (12 * h)
        assert np.linalg.norm(jac[i] - oracle) <= 1e-4 * np.linalg.norm(oracle)


def test_gradient_predicts_small_step(shape, hybrid, pilot):
    g, p = _gradient_setup(shape)
    delta = np.array([1e-4, -0.5e-4, 0.8e-4])
    jac = template_gradient(30.0, g, p, hybrid, pilot, shape)
    x0 = template_of_gamma(30.0, g, p, hybrid, pilot, shape)
    x1 = template_of_gamma(30.0, g + delta, p, hybrid, pilot, shape)
    first_order = np.tensordot(delta, jac, axes=1)
    resid = np.linalg.norm(x1 - x0 - first_order)
    assert resid < 1e-2 * np.linalg.norm(x1 - x0)


def test_config_validation():
    with pytest.raises(ValueError):
        UpaConfig(0, 3)
    with pytest.raises(ValueError):
        UpaConfig(2, 2, spacing=0.7)
    with pytest.raises(ValueError):
        HybridConfig(subarray_grid=(0, 8))
    with pytest.raises(ValueError):
        beamformed_template(BROADSIDE, BROADSIDE, HybridConfig(), np.zeros(0))
