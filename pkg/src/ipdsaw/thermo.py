"""Closed-form and numerically solved thermodynamic quantities.

The auxiliary walk has i.i.d. two-sided geometric increments
``P(U = k) = x^{|k|} / c_beta`` with ``x = exp(-beta/2)`` and
``c_beta = (1+x)/(1-x)``.  Everything in this module is a function of that
law: its log-moment-generating function ``L(h)`` and derivatives, the mixed
generating function ``L_Lam(h0, h1) = int_0^1 L(x h0 + h1) dx`` of the
(area/n, endpoint) pair, the tilt ``H(q) = (h0, h1)`` that makes area
``q n^2`` and endpoint ``0`` typical, the large-deviation rate
``rho(q) = q h0 - L_Lam(H)``, the collapsed-phase rate curve
``G(a) = a (log Gamma - rho(1/a^2))`` with its maximizer ``a(beta)``, and
the limiting Wulff profile ``gamma*_q``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

__all__ = [
    "ModelParams",
    "Tilt",
    "model_params",
    "beta_critical",
    "log_mgf",
    "log_mgf_mixed",
    "solve_tilt",
    "solve_tilt_discrete",
    "collapse_rate",
    "a_beta",
    "wulff",
    "wulff_envelope",
    "mu_beta",
    "sample_mu_beta",
]

# 64-node Gauss-Legendre on [0,1]; integrands are analytic on the tilt domain,
# so this is accurate far beyond 1e-12 (a 128-node refinement check is in tests).
_N64, _W64 = leggauss(64)
_X64 = 0.5 * (_N64 + 1.0)
_W64 = 0.5 * _W64
_N128, _W128 = leggauss(128)
_X128 = 0.5 * (_N128 + 1.0)
_W128 = 0.5 * _W128


@dataclass(frozen=True)
class ModelParams:
    """beta and its derived constants ``x``, ``c_beta``, ``Gamma_beta``."""

    beta: float
    x: float
    c_beta: float
    gamma_beta: float


@dataclass(frozen=True)
class Tilt:
    """A tilt ``H = (h0, h1)`` with the residual of the stationarity equations."""

    h0: float
    h1: float
    residual: float

    def as_array(self) -> np.ndarray:
        return np.array([self.h0, self.h1])


def model_params(beta: float) -> ModelParams:
    if beta <= 0:
        raise ValueError("beta must be > 0")
    x = math.exp(-beta / 2.0)
    c_beta = (1.0 + x) / (1.0 - x)
    return ModelParams(beta=beta, x=x, c_beta=c_beta, gamma_beta=c_beta * math.exp(-beta))


def beta_critical() -> float:
    """The collapse point: unique beta with ``Gamma_beta = 1``.

    Equivalently ``x = exp(-beta/2)`` is the root of ``x^3 + x^2 + x = 1``
    in (0, 1).
    """
    xr = brentq(lambda t: ((t + 1.0) * t + 1.0) * t - 1.0, 0.4, 0.7, xtol=1e-16, rtol=8.9e-16)
    return -2.0 * math.log(xr)


# ---------------------------------------------------------------------------
# log-MGF of one increment and its derivatives
# ---------------------------------------------------------------------------

def _geom_frac(x: float, h):
    """f(h) = x e^h / (1 - x e^h); valid while x e^h < 1."""
    g = x * np.exp(h)
    return g / (1.0 - g)


def log_mgf(beta: float, h, order: int = 0):
    """``L(h) = log E[e^{h U}]`` of the increment law, or a derivative.

    Closed form: ``L = log(1 + f(h) + f(-h)) - log(c_beta)`` with
    ``f(h) = x e^h/(1 - x e^h)``; derivatives follow from
    ``f' = f(1+f)``.  Valid on ``|h| < beta/2``; ``order`` in 0..3.
    """
    p = model_params(beta)
    harr = np.asarray(h, dtype=float)
    if np.any(np.abs(harr) >= beta / 2.0):
        raise ValueError("h outside the domain (-beta/2, beta/2)")
    fp = _geom_frac(p.x, harr)
    fm = _geom_frac(p.x, -harr)
    s = 1.0 + fp + fm
    if order == 0:
        out = np.log(s) - math.log(p.c_beta)
    else:
        d1p = fp * (1.0 + fp)
        d1m = fm * (1.0 + fm)
        s1 = d1p - d1m
        if order == 1:
            out = s1 / s
        else:
            d2p = d1p * (1.0 + 2.0 * fp)
            d2m = d1m * (1.0 + 2.0 * fm)
            s2 = d2p + d2m
            if order == 2:
                out = s2 / s - (s1 / s) ** 2
            elif order == 3:
                d3p = d1p * (1.0 + 6.0 * fp * (1.0 + fp))
                d3m = d1m * (1.0 + 6.0 * fm * (1.0 + fm))
                s3 = d3p - d3m
                r1 = s1 / s
                out = s3 / s - 3.0 * (s2 / s) * r1 + 2.0 * r1 ** 3
            else:
                raise ValueError("order must be in 0..3")
    return float(out) if np.isscalar(h) or np.ndim(h) == 0 else out


def increment_variance(beta: float) -> float:
    """``E[V_1^2] = L''(0) = 2x/(1-x)^2``."""
    x = model_params(beta).x
    return 2.0 * x / (1.0 - x) ** 2


# ---------------------------------------------------------------------------
# mixed generating function L_Lam and the tilt equations
# ---------------------------------------------------------------------------

def _check_domain(beta: float, h0: float, h1: float, slack: float = 0.0):
    half = beta / 2.0 - slack
    if not (abs(h1) < half and abs(h0 + h1) < half):
        raise ValueError(f"tilt ({h0}, {h1}) outside the domain for beta={beta}")


def log_mgf_mixed(beta: float, tilt, want: str = "value", nodes: int = 64):
    """``L_Lam(H) = int_0^1 L(x h0 + h1) dx`` and its gradient / Hessian.

    ``want`` is one of ``'value' | 'gradient' | 'hessian'``; fixed-order
    Gauss-Legendre quadrature (``nodes`` in {64, 128}).
    """
    h0, h1 = (tilt.h0, tilt.h1) if isinstance(tilt, Tilt) else (float(tilt[0]), float(tilt[1]))
    _check_domain(beta, h0, h1)
    xg, wg = (_X64, _W64) if nodes == 64 else (_X128, _W128)
    args = xg * h0 + h1
    if want == "value":
        return float(np.dot(wg, log_mgf(beta, args, 0)))
    if want == "gradient":
        d1 = log_mgf(beta, args, 1)
        return np.array([np.dot(wg * xg, d1), np.dot(wg, d1)])
    if want == "hessian":
        d2 = log_mgf(beta, args, 2)
        a = np.dot(wg * xg * xg, d2)
        b = np.dot(wg * xg, d2)
        c = np.dot(wg, d2)
        return np.array([[a, b], [b, c]])
    raise ValueError("want must be 'value', 'gradient' or 'hessian'")


def solve_tilt(beta: float, q: float, tol: float = 1e-12, max_iter: int = 100) -> Tilt:
    """Solve ``grad L_Lam(H) = (q, 0)`` (damped Newton after a 1-D bracket).

    The solution satisfies ``h1 = -h0/2`` (the endpoint constraint pins the
    tilt ramp symmetric about its midpoint); the solver only uses that to
    seed the Newton iteration, whose final residual certifies the answer.
    """
    if q == 0.0:
        return Tilt(0.0, 0.0, 0.0)
    if q < 0.0:
        t = solve_tilt(beta, -q, tol=tol, max_iter=max_iter)
        return Tilt(-t.h0, -t.h1, t.residual)
    target = np.array([q, 0.0])
    delta = 1e-6 * beta
    half = beta / 2.0 - delta

    # seed: along h1 = -h0/2 the endpoint equation is exact and the area
    # equation is monotone in h0, so a bracketed root is cheap and safe
    cs = _X64 - 0.5

    def area_slope(h0):
        return float(np.dot(_W64 * cs, log_mgf(beta, h0 * cs, 1)))

    hi = 2.0 * half * (1.0 - 1e-12)
    if area_slope(hi) < q:
        raise ValueError(f"q = {q} unreachable inside the tilt domain at beta = {beta}")
    h0 = brentq(lambda h: area_slope(h) - q, 0.0, hi, xtol=1e-13, rtol=8.9e-16)
    H = np.array([h0, -h0 / 2.0])

    def residual(Hv):
        return log_mgf_mixed(beta, Hv, "gradient") - target

    r = residual(H)
    for _ in range(max_iter):
        nr = float(np.linalg.norm(r))
        if nr < tol:
            return Tilt(float(H[0]), float(H[1]), nr)
        step = np.linalg.solve(log_mgf_mixed(beta, H, "hessian"), -r)
        t = 1.0
        while t > 1e-15:
            Hn = H + t * step
            if abs(Hn[1]) < half and abs(Hn[0] + Hn[1]) < half:
                rn = residual(Hn)
                if np.linalg.norm(rn) < nr:
                    H, r = Hn, rn
                    break
            t *= 0.5
        else:
            break
    nr = float(np.linalg.norm(r))
    if nr >= tol:
        raise RuntimeError(f"tilt solver did not converge: residual {nr:.3e}")
    return Tilt(float(H[0]), float(H[1]), nr)


def solve_tilt_discrete(beta: float, n: int, q: float, tol: float = 1e-12,
                        max_iter: int = 200) -> Tilt:
    """Finite-``n`` tilt: solve ``grad (1/n) sum_i L((1-i/n) h0 + h1) = (q, 0)``.

    Converges to ``solve_tilt(beta, q)`` as ``n`` grows; per-step tilts are
    ``h_i = (1-i/n) h0 + h1`` for ``i = 1..n``.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    target = np.array([q, 0.0])
    coef = 1.0 - np.arange(1, n + 1) / n
    delta = 1e-6 * beta
    half = beta / 2.0 - delta
    seed = solve_tilt(beta, q, tol=1e-10)

    def ok(Hv):
        args = coef * Hv[0] + Hv[1]
        return float(np.max(np.abs(args))) < half and abs(Hv[1]) < half

    def residual(Hv):
        d1 = log_mgf(beta, coef * Hv[0] + Hv[1], 1)
        return np.array([float(np.dot(coef, d1)) / n, float(np.sum(d1)) / n]) - target

    def hess(Hv):
        d2 = log_mgf(beta, coef * Hv[0] + Hv[1], 2)
        a = float(np.dot(coef * coef, d2)) / n
        b = float(np.dot(coef, d2)) / n
        c = float(np.sum(d2)) / n
        return np.array([[a, b], [b, c]])

    H = seed.as_array()
    if not ok(H):
        H = np.zeros(2)
    r = residual(H)
    for _ in range(max_iter):
        nr = float(np.linalg.norm(r))
        if nr < tol:
            return Tilt(float(H[0]), float(H[1]), nr)
        step = np.linalg.solve(hess(H), -r)
        t = 1.0
        while t > 1e-15:
            Hn = H + t * step
            if ok(Hn):
                rn = residual(Hn)
                if np.linalg.norm(rn) < nr:
                    H, r = Hn, rn
                    break
            t *= 0.5
        else:
            break
    nr = float(np.linalg.norm(r))
    if nr >= tol:
        raise RuntimeError(f"discrete tilt solver did not converge: residual {nr:.3e}")
    return Tilt(float(H[0]), float(H[1]), nr)


# ---------------------------------------------------------------------------
# collapsed-phase rate function and its maximizer
# ---------------------------------------------------------------------------

def collapse_rate(beta: float, value: float, which: str = "rho") -> float:
    """``rho(q) = q h0(q) - L_Lam(H(q))`` or ``G(a) = a (log Gamma - rho(1/a^2))``.

    ``which='rho'`` interprets ``value`` as ``q > 0``; ``which='Gtilde'`` as
    ``a > 0``.  ``rho`` is the convex rate of the event
    {algebraic area = q n^2, endpoint 0} and is strictly positive for q > 0.
    """
    if which == "rho":
        q = value
        if q <= 0:
            raise ValueError("q must be > 0")
        t = solve_tilt(beta, q)
        return q * t.h0 - log_mgf_mixed(beta, t, "value")
    if which == "Gtilde":
        a = value
        if a <= 0:
            raise ValueError("a must be > 0")
        lg = math.log(model_params(beta).gamma_beta)
        return a * (lg - collapse_rate(beta, 1.0 / (a * a), "rho"))
    raise ValueError("which must be 'rho' or 'Gtilde'")


def _gtilde_prime(beta: float, a: float) -> float:
    # envelope theorem: rho'(q) = h0(q), so
    # G'(a) = log Gamma - rho(q) + 2 q h0(q) with q = 1/a^2
    q = 1.0 / (a * a)
    t = solve_tilt(beta, q)
    rho = q * t.h0 - log_mgf_mixed(beta, t, "value")
    return math.log(model_params(beta).gamma_beta) - rho + 2.0 * q * t.h0


def a_beta(beta: float) -> float:
    """Maximizer of ``G`` on (0, inf); defined for ``beta > beta_c`` only.

    Bracket expansion is feasibility-aware: tilts for very small ``a``
    (huge area ratio ``q = 1/a^2``) fall outside the guarded domain, but
    there ``G ~ -beta/a`` is increasing, i.e. left of the maximizer, so
    the bracket simply stops at the smallest feasible point.
    """
    if beta <= beta_critical():
        raise ValueError("a(beta) requires beta > beta_c (collapsed phase)")
    lo = hi = 1.0
    flo = fhi = _gtilde_prime(beta, 1.0)
    for _ in range(60):
        if flo > 0:
            break
        lo /= 2.0
        try:
            flo = _gtilde_prime(beta, lo)
        except ValueError:
            raise RuntimeError("no feasible left bracket for G'") from None
    for _ in range(60):
        if fhi < 0:
            break
        hi *= 2.0
        fhi = _gtilde_prime(beta, hi)
    if not (flo > 0 > fhi):
        raise RuntimeError("no sign change found for G'")
    return brentq(lambda a: _gtilde_prime(beta, a), lo, hi, xtol=1e-12, rtol=8.9e-16)


# ---------------------------------------------------------------------------
# Wulff shapes
# ---------------------------------------------------------------------------

def wulff(beta: float, q: float, t, tilt: Tilt | None = None):
    """Limiting profile ``gamma*_q(t) = int_0^t L'((1-u) h0 + h1) du``.

    With ``h1 = -h0/2`` this is ``int_0^t L'((1/2-u) h0) du``: a symmetric
    dome with ``gamma*_q(0) = gamma*_q(1) = 0`` and total area ``q``.
    """
    if q <= 0:
        raise ValueError("q must be > 0")
    tl = tilt if tilt is not None else solve_tilt(beta, q)
    tarr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any((tarr < 0) | (tarr > 1)):
        raise ValueError("t must lie in [0, 1]")
    out = np.empty_like(tarr)
    for i, ti in enumerate(tarr):
        if ti == 0.0:
            out[i] = 0.0
            continue
        u = _X64 * ti
        out[i] = ti * float(np.dot(_W64, log_mgf(beta, (1.0 - u) * tl.h0 + tl.h1, 1)))
    return float(out[0]) if np.ndim(t) == 0 else out


def wulff_envelope(beta: float, t):
    """Limiting upper envelope ``gamma*_beta / 2`` at ``q = 1/a(beta)^2``."""
    q = 1.0 / a_beta(beta) ** 2
    return 0.5 * wulff(beta, q, t)


# ---------------------------------------------------------------------------
# the symmetrized-geometric law mu_beta
# ---------------------------------------------------------------------------

def mu_beta(beta: float, k: int) -> float:
    """``mu_beta(k) = (1-x)/2 * x^{|k|}`` for k != 0 and ``1-x`` at k = 0."""
    x = model_params(beta).x
    if k == 0:
        return 1.0 - x
    return 0.5 * (1.0 - x) * x ** abs(k)


def sample_mu_beta(beta: float, rng: np.random.Generator, size=None):
    """Exact inverse-CDF draws from ``mu_beta`` (sign times geometric)."""
    x = model_params(beta).x
    scalar = size is None
    n = 1 if scalar else int(size)
    u = rng.random(n)
    out = np.zeros(n, dtype=np.int64)
    nz = u >= (1.0 - x)
    m = int(nz.sum())
    if m:
        # |k| >= 1 geometric with ratio x, then a fair sign
        mag = 1 + np.floor(np.log(rng.random(m)) / math.log(x)).astype(np.int64)
        sign = np.where(rng.random(m) < 0.5, 1, -1)
        out[nz] = sign * mag
    return int(out[0]) if scalar else out
