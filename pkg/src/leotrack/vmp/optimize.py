"""Multi-start simplex maximisation and Laplace covariance for orbit angles."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from ..errors import SingularHessian
from ..orbit import as_gamma

SIMPLEX_EDGE = 0.01
SIMPLEX_XTOL = 1e-7
MAX_ITER = 500
HESSIAN_STEP = 1e-4
EIG_FLOOR = 1e-12
MAX_CONDITION = 1e14


def _initial_simplex(x0: np.ndarray, edge: float) -> np.ndarray:
    return np.vstack([x0, x0 + edge * np.eye(x0.size)])


def maximize_from(objective: Callable, start, edge: float = SIMPLEX_EDGE,
                  xtol: float = SIMPLEX_XTOL, max_iter: int = MAX_ITER) -> tuple[np.ndarray, float]:
    """Nelder-Mead ascent from one start; returns (argmax, max)."""
    x0 = as_gamma(start).astype(float)
    res = minimize(
        lambda x: -float(objective(x)),
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": _initial_simplex(x0, edge),
            "xatol": xtol,
            "fatol": np.inf,
            "maxiter": max_iter,
        },
    )
    return np.asarray(res.x, dtype=float), -float(res.fun)


def optimize_gamma(objective: Callable, starts: Sequence, **kwargs) -> tuple[np.ndarray, float]:
    """Run the simplex from every start and keep the best terminal point."""
    starts = np.atleast_2d(np.asarray([as_gamma(s) for s in starts], dtype=float))
    if starts.shape[0] == 0:
        raise ValueError("need at least one start")
    best_x, best_f = None, -np.inf
    for s in starts:
        x, f = maximize_from(objective, s, **kwargs)
        if best_x is None or f > best_f:
            best_x, best_f = x, f
    return best_x, best_f


def _central_stencil(x: np.ndarray, step: float) -> tuple[list, list]:
    n = x.size
    eye = np.eye(n) * step
    pts = [x + eye[i] * sgn for i in range(n) for sgn in (1, -1)]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for i, j in pairs:
        pts += [x + eye[i] + eye[j], x + eye[i] - eye[j], x - eye[i] + eye[j], x - eye[i] - eye[j]]
    return pts, pairs


def _central_hessian(f: np.ndarray, f0: float, n: int, pairs, step: float) -> np.ndarray:
    hess = np.empty((n, n))
    for i in range(n):
        hess[i, i] = (f[2 * i] - 2 * f0 + f[2 * i + 1]) / step**2
    for k, (i, j) in enumerate(pairs):
        pp, pm, mp, mm = f[2 * n + 4 * k: 2 * n + 4 * k + 4]
        hess[i, j] = hess[j, i] = (pp - pm - mp + mm) / (4 * step**2)
    return hess


def numerical_hessian(objective: Callable, x, step: float = HESSIAN_STEP) -> np.ndarray:
    """Central-difference Hessian at steps ``h`` and ``2h``, Richardson-extrapolated.

    The log-density curvature spans several decades, so the second-order
    stencil alone leaves visible error in the weakly curved directions of the
    inverse.  One batched objective call.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    fine, pairs = _central_stencil(x, step)
    coarse, _ = _central_stencil(x, 2 * step)
    f = np.asarray(objective(np.array([x] + fine + coarse)), dtype=float)
    m = len(fine)
    h1 = _central_hessian(f[1: 1 + m], f[0], n, pairs, step)
    h2 = _central_hessian(f[1 + m:], f[0], n, pairs, 2 * step)
    return (4.0 * h1 - h2) / 3.0


def covariance_from_hessian(hess: np.ndarray) -> np.ndarray:
    """Invert the negated Hessian, flooring non-positive curvature."""
    neg = -0.5 * (hess + hess.T)
    w, v = np.linalg.eigh(neg)
    w = np.maximum(w, EIG_FLOOR)
    if w.max() / w.min() > MAX_CONDITION:
        raise SingularHessian(f"condition number {w.max() / w.min():.3g} exceeds {MAX_CONDITION:g}")
    cov = (v / w) @ v.T
    return 0.5 * (cov + cov.T)


def laplace_covariance(objective: Callable, gamma_mean, step: float = HESSIAN_STEP) -> np.ndarray:
    """Gaussian covariance at a mode from the curvature of the log-density."""
    return covariance_from_hessian(numerical_hessian(objective, as_gamma(gamma_mean), step))
