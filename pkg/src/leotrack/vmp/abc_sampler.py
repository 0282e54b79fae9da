"""Rejection/ranking sampler for orbits consistent with an initial AoA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientSamples
from ..orbit import OrbitShape, direction, polar_rate, position, sample_prior

N_TRIALS = 10**6
DEFAULT_N_SAMPLES = 2000


@dataclass(frozen=True)
class AbcResult:
    samples: np.ndarray  # (n_samp, 3), best fitness first
    fitness: np.ndarray  # (n_samp,)
    n_accepted: int
    n_trials: int


def abc_accepts(gamma, shape: OrbitShape, lookahead: float, rate_dt: float = 1.0) -> np.ndarray:
    """Above the horizon at ``lookahead`` seconds and rising at t = 0."""
    visible = position(lookahead, gamma, shape)[..., 2] > 0.0
    rising = polar_rate(0.0, gamma, shape, rate_dt) < 0.0
    return visible & rising


def abc_sample(initial_aoa, n_samp: int, rng: np.random.Generator, shape: OrbitShape,
               lookahead: float = 20.0, n_trials: int = N_TRIALS,
               chunk: int = 200_000) -> AbcResult:
    """Keep the ``n_samp`` accepted prior draws whose t=0 direction best matches ``initial_aoa``.

    Candidates pass when they are visible at ``lookahead`` seconds and rising;
    fitness is the cosine between the candidate's t=0 direction and the AoA.
    """
    if n_samp < 1:
        raise ValueError("n_samp must be at least 1")
    aoa = np.asarray(initial_aoa, dtype=float)
    aoa = aoa / np.linalg.norm(aoa)
    kept_g, kept_f = [], []
    n_accepted = 0
    for start in range(0, n_trials, chunk):
        cand = sample_prior(rng, min(chunk, n_trials - start))
        ok = abc_accepts(cand, shape, lookahead)
        cand = cand[ok]
        n_accepted += cand.shape[0]
        fit = direction(0.0, cand, shape) @ aoa
        kept_g.append(cand)
        kept_f.append(fit)
        # bound memory: only the running best n_samp can survive
        g = np.concatenate(kept_g)
        f = np.concatenate(kept_f)
        if f.size > n_samp:
            top = np.argpartition(-f, n_samp - 1)[:n_samp]
            g, f = g[top], f[top]
        kept_g, kept_f = [g], [f]
    if n_accepted < n_samp:
        raise InsufficientSamples(f"accepted {n_accepted} < {n_samp} candidates in {n_trials} trials")
    g, f = kept_g[0], kept_f[0]
    order = np.argsort(-f, kind="stable")
    return AbcResult(g[order], f[order], n_accepted, n_trials)
