"""Brownian-excursion area density and the critical constants built from it.

``excursion_area_density`` evaluates the density of the area under a
normalized Brownian excursion through its confluent-hypergeometric series
over Airy zeros; it integrates to 1 and has mean ``sqrt(pi/8)`` and second
moment ``5/12`` (checked against quadrature and a random-walk Monte Carlo
oracle in the tests).

The critical constants of the model follow from it via
``w(t) = C f_ex(C t)`` with ``C = (E V_1^2)^{-1/2}``:

* ``airy_integral = int_0^inf u^{-3} w(u^{-3/2}) du = (2/3) int t^{1/3} w(t) dt``
* tail constant ``c_tail = sqrt(E V_1^2 / 2 pi) / (1 + e^{-beta/2}) * airy_integral``
  of the inter-arrival law of the critical excursion renewal, and
* the critical partition-function prefactor
  ``z_prefactor = (1+e^{beta/2}) (1+e^{-beta/2})^2 / (sqrt(24 pi E V_1^2) * airy_integral)``.

The last two carry corrected prefactors, pinned by the exact renewal chain
(see tests: the inter-arrival tail, the renewal mass, and the reassembled
partition function agree with the direct dynamic program only with these
normalizations; both are validated at the critical point).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import ai_zeros, hyperu

from .thermo import increment_variance, model_params

__all__ = [
    "excursion_area_density",
    "excursion_area_moment",
    "scaled_area_density",
    "CritConstants",
    "crit_constants",
]

_N_ZEROS = 100
_AIRY_ZEROS = -ai_zeros(_N_ZEROS)[0]  # a_j > 0 with Ai(-a_j) = 0

# effective support of the density: below 0.06 the value is < 1e-100
# (left tail ~ e^{-0.95/x^2}), above 6 it is < 1e-90 (right tail ~ e^{-6x^2})
_SUPPORT = (0.06, 6.0)


# beyond this point the series loses all relative accuracy to cancellation
# (values ~ 1e-12 and below); the right tail is grafted on continuously with
# the known x^2 e^{-6 x^2} asymptotic shape
_TAIL_CROSSOVER = 2.2


def _series_density(ts):
    vj = 2.0 * _AIRY_ZEROS[None, :] ** 3 / (27.0 * ts[:, None] ** 2)
    terms = np.where(
        vj < 690.0,
        vj ** (2.0 / 3.0) * np.exp(-vj) * hyperu(-5.0 / 6.0, 4.0 / 3.0, vj),
        0.0,
    )
    return (2.0 * math.sqrt(6.0) / ts ** 2) * terms.sum(axis=1)


_TAIL_LEVEL = None  # series value at the crossover, filled lazily


def excursion_area_density(t):
    """Density ``f_ex(t)`` of the normalized Brownian excursion area.

    Series over Airy zeros ``a_j``:
    ``f_ex(t) = 2 sqrt(6) / t^2 * sum_j v_j^{2/3} e^{-v_j} U(-5/6, 4/3, v_j)``
    with ``v_j = 2 a_j^3 / (27 t^2)``; past the crossover the tail follows
    the asymptotic shape ``const * t^2 e^{-6 t^2}`` matched continuously
    (total mass there is ~1e-8; the series itself validates the known tail
    constant ``72 sqrt(6/pi)`` to a few percent at the crossover).
    """
    global _TAIL_LEVEL
    tarr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(tarr)
    mid = (tarr > 0.02) & (tarr <= _TAIL_CROSSOVER)
    if np.any(mid):
        out[mid] = _series_density(tarr[mid])
    tail = tarr > _TAIL_CROSSOVER
    if np.any(tail):
        if _TAIL_LEVEL is None:
            _TAIL_LEVEL = float(_series_density(np.array([_TAIL_CROSSOVER]))[0])
        xc = _TAIL_CROSSOVER
        ts = tarr[tail]
        out[tail] = _TAIL_LEVEL * (ts / xc) ** 2 * np.exp(-6.0 * (ts ** 2 - xc ** 2))
    return float(out[0]) if np.ndim(t) == 0 else out


def excursion_area_moment(power: float) -> float:
    """``E[B_ex^power]`` by adaptive quadrature of the series density."""
    lo, hi = _SUPPORT
    val, _ = quad(lambda s: s ** power * excursion_area_density(s), lo, hi, limit=200)
    return val


def scaled_area_density(beta: float, t):
    """``w(t) = C_beta f_ex(C_beta t)`` with ``C_beta = (E V_1^2)^{-1/2}``."""
    tarr = np.asarray(t, dtype=float)
    if np.any(tarr <= 0):
        raise ValueError("t must be > 0")
    c = increment_variance(beta) ** -0.5
    return c * excursion_area_density(c * tarr)


@dataclass(frozen=True)
class CritConstants:
    """Constants entering the critical partition-function and renewal laws."""

    beta: float
    var_v1: float
    c_big: float
    airy_integral: float
    c_tail: float
    z_prefactor: float


def crit_constants(beta: float) -> CritConstants:
    """Critical constants at inverse temperature ``beta``.

    Meaningful at the collapse point (the renewal identities behind
    ``c_tail`` and ``z_prefactor`` hold for the critical walk); the fields
    are computed from the stated formulas for any ``beta > 0``.
    """
    p = model_params(beta)
    var = increment_variance(beta)
    c_big = var ** -0.5
    # change of variables u = t^{-2/3}:
    # int_0^inf u^{-3} w(u^{-3/2}) du = (2/3) int_0^inf t^{1/3} w(t) dt
    #                                 = (2/3) C^{-1/3} E[B_ex^{1/3}]
    airy_integral = (2.0 / 3.0) * c_big ** (-1.0 / 3.0) * excursion_area_moment(1.0 / 3.0)
    c_tau = math.sqrt(var / (2.0 * math.pi)) / (1.0 + p.x)
    c_tail = c_tau * airy_integral
    z_prefactor = (
        (1.0 + 1.0 / p.x)
        * (1.0 + p.x) ** 2
        / (math.sqrt(24.0 * math.pi * var) * airy_integral)
    )
    return CritConstants(
        beta=beta,
        var_v1=var,
        c_big=c_big,
        airy_integral=airy_integral,
        c_tail=c_tail,
        z_prefactor=z_prefactor,
    )


def tau_tail_constant(beta: float) -> float:
    """``lim n^{3/2} P_mu(tau = n)`` for the critical excursion clock."""
    p = model_params(beta)
    return math.sqrt(increment_variance(beta) / (2.0 * math.pi)) / (1.0 + p.x)


def excursion_area_mc(n: int, reps: int, rng: np.random.Generator,
                      chunk: int = 2000) -> np.ndarray:
    """Monte Carlo oracle: areas of simple-random-walk excursions, /n^{3/2}.

    A uniformly shuffled +-1 bridge of length ``n`` rotated at its minimum
    is an exact lattice excursion (cycle-lemma construction); its area is
    ``sum(S) - n * min(S)`` without materializing the rotation.  The law of
    area/n^{3/2} converges to the normalized excursion area with an
    O(n^{-1/2}) lattice bias.
    """
    if n % 2:
        raise ValueError("n must be even")
    out = np.empty(reps)
    done = 0
    while done < reps:
        b = min(chunk, reps - done)
        ranks = np.argsort(rng.random((b, n)), axis=1)
        steps = np.where(ranks < n // 2, 1, -1)
        cum = np.cumsum(steps, axis=1)
        out[done : done + b] = cum.sum(axis=1) - n * cum.min(axis=1)
        done += b
    return out / n ** 1.5
