import numpy as np
import pytest

from leotrack.errors import InsufficientSamples
from leotrack.orbit import direction, sample_prior
from leotrack.vmp import KdePrior, abc_accepts, abc_sample, kde_log_density
from leotrack.vmp.kde import angle_difference

BW = 0.005


def test_peak_value_single_sample():
    prior = KdePrior(np.array([[1.5, 2.0, 3.0]]), BW)
    assert kde_log_density([1.5, 2.0, 3.0], prior) == pytest.approx(-1.5 * np.log(2 * np.pi * BW**2))


def test_single_kernel_integrates_to_one():
    c = np.array([1.5, 2.0, 3.0])
    prior = KdePrior(c[None], BW)
    ax = np.linspace(-6 * BW, 6 * BW, 49)
    a, b, e = np.meshgrid(ax, ax, ax, indexing="ij")
    pts = c + np.stack([a, b, e], axis=-1)
    dv = (ax[1] - ax[0]) ** 3
    assert np.exp(kde_log_density(pts, prior)).sum() * dv == pytest.approx(1.0, rel=0.01)


def test_far_query_is_tiny():
    prior = KdePrior(sample_prior(np.random.default_rng(0), 50), BW)
    q = prior.samples[0] + [11 * BW, 0, 0]
    far = q if np.min(np.linalg.norm(angle_difference(prior.samples, q), axis=1)) > 10 * BW else None
    if far is None:
        far = np.array([5.0, 0.0, 0.0])
    assert kde_log_density(far, prior) < -50


def test_periodic_components_wrap():
    prior = KdePrior(np.array([[1.5, 0.001, 6.283]]), BW)
    a = kde_log_density([1.5, 2 * np.pi - 0.001, 6.283], prior)
    b = kde_log_density([1.5, 0.003, 6.283], prior)
    assert a == pytest.approx(b, abs=1e-9)
    # alpha does not wrap
    assert kde_log_density([1.5 + 2 * np.pi, 0.001, 6.283], prior) < -1e5


def test_single_and_batch_queries_agree():
    rng = np.random.default_rng(3)
    samples = np.array([1.5, 1.0, 4.0]) + 0.01 * rng.standard_normal((500, 3))
    prior = KdePrior(samples, BW)
    q = np.array([1.5, 1.0, 4.0]) + 0.01 * rng.standard_normal((40, 3))
    batch = kde_log_density(q, prior)
    single = np.array([kde_log_density(x, prior) for x in q])
    np.testing.assert_allclose(single, batch, rtol=1e-10, atol=1e-10)


def test_kde_validation():
    with pytest.raises(ValueError):
        KdePrior(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        KdePrior(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        KdePrior(np.zeros((1, 3)), bandwidth=0.0)


def _aoa(shape):
    return direction(0.0, [1.5, 0.7, 4.5], shape)


def test_abc_samples_pass_acceptance(shape):
    res = abc_sample(_aoa(shape), 300, np.random.default_rng(1), shape, n_trials=50_000)
    assert res.samples.shape == (300, 3)
    assert np.all(abc_accepts(res.samples, shape, 20.0))
    np.testing.assert_allclose(direction(0.0, res.samples, shape) @ _aoa(shape), res.fitness, atol=1e-12)
    assert np.all(np.diff(res.fitness) <= 0)
    assert np.all(res.fitness <= 1.0)


def test_abc_keeps_exact_top_k(shape):
    # Replay the candidate stream and rank every accepted draw by hand.
    aoa, n_trials, chunk = _aoa(shape), 30_000, 10_000
    res = abc_sample(aoa, 200, np.random.default_rng(5), shape, n_trials=n_trials, chunk=chunk)
    rng = np.random.default_rng(5)
    cand = np.concatenate([sample_prior(rng, chunk) for _ in range(n_trials // chunk)])
    cand = cand[abc_accepts(cand, shape, 20.0)]
    fit = direction(0.0, cand, shape) @ aoa
    assert res.n_accepted == cand.shape[0]
    np.testing.assert_allclose(res.fitness, np.sort(fit)[::-1][:200])
    rejected = np.sort(fit)[::-1][200:]
    assert res.fitness.min() >= rejected.max()


def test_exact_match_has_unit_fitness(shape):
    g = np.array([1.5, 0.7, 4.5])
    assert direction(0.0, g, shape) @ _aoa(shape) == pytest.approx(1.0)


def test_abc_insufficient(shape):
    with pytest.raises(InsufficientSamples):
        abc_sample(_aoa(shape), 500, np.random.default_rng(0), shape, n_trials=1000)
