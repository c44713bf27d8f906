"""The Gaussian fluctuation field around the Wulff shape.

The unconditioned field has independent increments with local variance
``L''((1-x) h0 + h1)``, i.e. covariance ``C(s,t) = int_0^{s^t} L''((1-x) h0
+ h1) dx`` (a time-changed Brownian motion).  The conditioned version pins
``xi(1) = 0`` and the trapezoid approximation of ``int_0^1 xi = 0`` by
Gaussian conditioning; sampling subtracts the conditional-mean correction
from an unconditioned draw, so the constraints hold to machine precision
and the sample covariance is exactly the Schur complement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .thermo import Tilt, log_mgf, solve_tilt

__all__ = ["GaussianFieldSpec", "xi_field", "sample_xi"]

from numpy.polynomial.legendre import leggauss

_N32, _W32 = leggauss(32)
_X32 = 0.5 * (_N32 + 1.0)
_W32 = 0.5 * _W32


@dataclass(frozen=True)
class GaussianFieldSpec:
    """Centered Gaussian field on a grid, optionally bridge/area conditioned."""

    beta: float
    tilt: Tilt
    grid: np.ndarray
    covariance: np.ndarray
    conditioned: bool
    # conditioning data (None when unconditioned): response matrix mapping
    # raw constraint values to the mean correction, the constraint weights
    # (rows: [xi(1), trapezoid integral of xi]), and the internal fine grid
    _response: np.ndarray | None = None
    _constraints: np.ndarray | None = None
    _full_grid: np.ndarray | None = None
    _grid_index: np.ndarray | None = None


def _running_variance(beta: float, tilt: Tilt, t: float) -> float:
    """``int_0^t L''((1-x) h0 + h1) dx`` by Gauss-Legendre on [0, t]."""
    if t == 0.0:
        return 0.0
    u = _X32 * t
    return t * float(np.dot(_W32, log_mgf(beta, (1.0 - u) * tilt.h0 + tilt.h1, 2)))


def _trapezoid_weights(full: np.ndarray) -> np.ndarray:
    """Trapezoid weights for ``int_0^1 xi`` on knots ``[0] + full`` with xi(0)=0."""
    m = full.size
    tz = np.zeros(m)
    knots = np.concatenate([[0.0], full])
    for i in range(m):
        left = knots[i + 1] - knots[i]
        right = knots[i + 2] - knots[i + 1] if i + 1 < m else 0.0
        tz[i] = 0.5 * (left + right)
    return tz


def xi_field(beta: float, q: float, grid, conditioned: bool = False,
             tilt: Tilt | None = None, integral_points: int = 64) -> GaussianFieldSpec:
    """Covariance of the fluctuation field on ``grid`` (strictly increasing in (0, 1]).

    ``conditioned`` returns the law of the field given ``xi(1) = 0`` and a
    vanishing integral over [0, 1].  The integral constraint is discretized
    by the trapezoid rule on the union of ``grid`` with ``integral_points``
    equispaced interior points (coarse grids would otherwise misrepresent
    the constraint); the covariance returned is the restriction of the
    conditioned law to ``grid``.
    """
    g = np.atleast_1d(np.asarray(grid, dtype=float))
    if g.size < 1 or np.any(np.diff(g) <= 0) or g[0] <= 0 or g[-1] > 1:
        raise ValueError("grid must be strictly increasing inside (0, 1]")
    tl = tilt if tilt is not None else solve_tilt(beta, q)
    if not conditioned:
        iv = np.array([_running_variance(beta, tl, t) for t in g])
        return GaussianFieldSpec(beta, tl, g, np.minimum.outer(iv, iv), False)
    fine = np.linspace(0.0, 1.0, max(int(integral_points), 2) + 1)[1:]
    full = np.union1d(g, fine)
    iv = np.array([_running_variance(beta, tl, t) for t in full])
    cov_full = np.minimum.outer(iv, iv)  # iv is increasing, so this is C(s^t)
    idx = np.searchsorted(full, g)
    rows = np.vstack([np.eye(full.size)[-1], _trapezoid_weights(full)])
    a = rows @ cov_full @ rows.T
    c = cov_full @ rows.T
    sol = np.linalg.solve(a, c.T)     # A^{-1} C^T
    cond_full = cov_full - c @ sol
    cond = cond_full[np.ix_(idx, idx)]
    w = np.linalg.eigvalsh((cond + cond.T) / 2)
    if w.min() < -1e-9 * max(w.max(), 1.0):
        raise RuntimeError(f"conditioned covariance not PSD: min eigenvalue {w.min():.3e}")
    return GaussianFieldSpec(
        beta, tl, g, cond, True, _response=sol, _constraints=rows,
        _full_grid=full, _grid_index=idx,
    )


def sample_xi(spec: GaussianFieldSpec, rng: np.random.Generator,
              size: int = 1) -> np.ndarray:
    """Draws of the field on its grid, shape ``(size, len(grid))``.

    Unconditioned draws use independent Gaussian increments of the
    time-changed Brownian motion; conditioned draws subtract the
    conditional-mean response of an unconditioned draw on the augmented
    grid, which enforces the constraints to machine precision.
    """
    tl = spec.tilt
    if not spec.conditioned:
        iv = np.array([_running_variance(spec.beta, tl, t) for t in spec.grid])
        steps = np.diff(np.concatenate([[0.0], iv]))
        z = rng.standard_normal((size, spec.grid.size))
        return np.cumsum(z * np.sqrt(steps), axis=1)
    full = spec._full_grid
    iv = np.array([_running_variance(spec.beta, tl, t) for t in full])
    steps = np.diff(np.concatenate([[0.0], iv]))
    z = rng.standard_normal((size, full.size))
    raw = np.cumsum(z * np.sqrt(steps), axis=1)
    zc = raw @ spec._constraints.T          # constraint values, (size, 2)
    corrected = raw - zc @ spec._response   # response is A^{-1} C^T, (2, m)
    return corrected[:, spec._grid_index]
