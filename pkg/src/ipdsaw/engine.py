"""Exact dynamic-programming engine: partition functions, laws, samplers.

Everything rests on the walk representation of the polymer measure: with
``Gamma = c_beta e^{-beta}`` and the auxiliary walk ``V``,

    Ztilde_L = e^{-beta L} Z_L = c_beta * sum_N Gamma^N P(G_N = L-N, V_{N+1} = 0)

(the prefactor convention is pinned by the enumeration oracle).  One forward
pass of the slice DP yields the closing masses for every ``(N, L)`` with
``L <= size`` at once; keeping the slices enables exact backward sampling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from . import _kernels
from .paths import PolymerPath, from_aux_walk, AuxWalk
from .thermo import model_params, beta_critical

__all__ = [
    "DpTable",
    "walk_area_table",
    "excess_log_partition",
    "constrained_excess_log_partition",
    "ExtensionLaw",
    "extension_law",
    "exact_sampler",
    "mixture_sampler",
    "mixture_window",
    "pattern_log_weights",
    "RegenerativeConstants",
    "extended_constants",
    "CriticalRenewal",
    "critical_renewal",
    "ENGINE_LIMIT",
    "clear_cache",
]

ENGINE_LIMIT = 2048
_SLICE_BUDGET_BYTES = 600 * 1024 * 1024


@dataclass
class DpTable:
    """Log-space mass table of the constrained walk, indexed (step, value, area).

    For the free walk, ``log_close[n, t] = log P(G_n = t, V_{n+1} = 0)`` and
    ``log_zero[n, t] = log P(G_n = t, V_n = 0)``.  For the
    positive-until-return walk (nonzero until the first zero hit),
    ``log_return[n, s] = log P(T = n, G_n = s)`` and ``y2_return`` holds
    ``E[Y_n^2; T = n, G_n = s]``.  When built with ``keep_slices`` the
    per-step occupancy slices are retained for backward sampling and for
    the ``log_mass`` view.
    """

    beta: float
    n_max: int
    g_max: int
    constraint: str
    log_close: np.ndarray | None = None
    log_zero: np.ndarray | None = None
    log_return: np.ndarray | None = None
    y2_return: np.ndarray | None = None
    slices: list[np.ndarray] | None = None
    log_scales: np.ndarray | None = None

    def log_mass(self, n: int) -> np.ndarray:
        """Dense ``log P(V_n = v, G_n = g)`` over ``v in [-g_max, g_max]``.

        Requires the table to have been built with ``keep_slices``.
        """
        if self.slices is None:
            raise ValueError("table was built without slices")
        out = np.full((2 * self.g_max + 1, self.g_max + 1), -np.inf)
        sl = self.slices[n]
        gcap = sl.shape[0] - 1
        with np.errstate(divide="ignore"):
            logs = np.where(sl > 0.0, np.log(np.maximum(sl, 1e-320)), -np.inf)
        logs = logs + self.log_scales[n]
        if self.constraint == "free":
            v0 = (sl.shape[1] - 1) // 2
            for g in range(gcap + 1):
                width = min(g, v0)
                out[self.g_max - width : self.g_max + width + 1, g] = logs[
                    g, v0 - width : v0 + width + 1
                ]
        else:
            # folded storage (v >= 1): half the mass on each sign
            for g in range(gcap + 1):
                row = logs[g, 1 : g + 1] - math.log(2.0)
                out[self.g_max + 1 : self.g_max + g + 1, g] = row
                out[self.g_max - g : self.g_max, g] = row[::-1]
        return out


_table_cache: dict = {}


def clear_cache():
    _table_cache.clear()
    _renewal_cache.clear()


def walk_area_table(
    beta: float,
    size: int,
    constraint: str = "free",
    keep_slices: bool = False,
    cache: bool = True,
    prune: bool = True,
) -> DpTable:
    """Forward DP over the walk, exact for every target with ``N + G <= size``.

    ``constraint='free'`` produces the closing/zero-return aggregates used
    by the partition functions; ``'positive-until-return'`` produces the
    first-return law with its Y^2 accumulators (pattern statistics).

    With ``prune`` (default) states that cannot reach any assembly target
    (``g > size - n``) are dropped; they are irrelevant for partition
    functions, extension laws and backward sampling.  ``prune=False`` keeps
    the complete (value, area) law of every step up to ``g <= size``,
    which the ``log_mass`` contract view exposes.
    """
    if size > ENGINE_LIMIT:
        raise ValueError(f"size {size} exceeds engine limit {ENGINE_LIMIT}")
    if size < 1:
        raise ValueError("size must be >= 1")
    key = (repr(float(beta)), int(size), constraint, keep_slices, prune)
    if cache and key in _table_cache:
        return _table_cache[key]
    p = model_params(beta)
    if constraint == "positive-until-return":
        if keep_slices and size > 192:
            raise MemoryError("slice retention for the constrained table is limited to size <= 192")
        xpow = p.x ** np.arange(size + 1)
        R, Q, slc = _kernels.pattern_dp(p.x, p.c_beta, size, xpow, keep_slices)
        with np.errstate(divide="ignore"):
            logR = np.where(R > 0.0, np.log(np.maximum(R, 1e-320)), -np.inf)
        table = DpTable(
            beta=beta,
            n_max=size,
            g_max=size,
            constraint=constraint,
            log_return=logR,
            y2_return=Q,
            slices=[slc[n] for n in range(size + 1)] if keep_slices else None,
            log_scales=np.zeros(size + 1) if keep_slices else None,
        )
        if cache:
            _table_cache[key] = table
        return table
    if constraint != "free":
        raise ValueError("constraint must be 'free' or 'positive-until-return'")

    if keep_slices and 5.4 * size**3 > _SLICE_BUDGET_BYTES:
        raise MemoryError(
            f"slice retention at size {size} exceeds the memory budget; "
            "use the aggregated table or a smaller size"
        )
    g_max = size
    v0 = g_max
    nv = 2 * g_max + 1
    W = np.zeros((g_max + 1, nv))
    W[0, v0] = 1.0
    Wn = np.zeros_like(W)
    C = np.zeros_like(W)
    xpow = p.x ** np.arange(g_max + 1)
    inv_cb = 1.0 / p.c_beta
    log_close = np.full((size + 1, g_max + 1), -np.inf)
    log_zero = np.full((size + 1, g_max + 1), -np.inf)
    close_row = np.zeros(g_max + 1)
    zero_row = np.zeros(g_max + 1)
    slices: list[np.ndarray] | None = [W[:1, v0:v0 + 1].copy()] if keep_slices else None
    log_scales = np.zeros(size + 1)
    logscale = 0.0
    for n in range(1, size + 1):
        gcap = g_max - n if prune else g_max
        mx = _kernels.free_step(W, Wn, C, v0, gcap, p.x, inv_cb)
        if mx <= 0.0:
            break
        _kernels.slice_scale(Wn, gcap, 1.0 / mx)
        logscale += math.log(mx)
        log_scales[n] = logscale
        _kernels.close_and_zero_rows(Wn, v0, gcap, xpow, inv_cb, close_row, zero_row)
        with np.errstate(divide="ignore"):
            log_close[n, : gcap + 1] = np.where(
                close_row[: gcap + 1] > 0.0,
                np.log(np.maximum(close_row[: gcap + 1], 1e-320)) + logscale,
                -np.inf,
            )
            log_zero[n, : gcap + 1] = np.where(
                zero_row[: gcap + 1] > 0.0,
                np.log(np.maximum(zero_row[: gcap + 1], 1e-320)) + logscale,
                -np.inf,
            )
        if keep_slices:
            slices.append(Wn[: gcap + 1, v0 - gcap : v0 + gcap + 1].copy())
        W, Wn = Wn, W
    table = DpTable(
        beta=beta,
        n_max=size,
        g_max=g_max,
        constraint="free",
        log_close=log_close,
        log_zero=log_zero,
        slices=slices,
        log_scales=log_scales if keep_slices else None,
    )
    if cache:
        _table_cache[key] = table
    return table


# ---------------------------------------------------------------------------
# partition functions and the horizontal-extension law
# ---------------------------------------------------------------------------

def _log_terms(table: DpTable, L: int, which: str) -> np.ndarray:
    rows = table.log_close if which == "close" else table.log_zero
    if L > table.n_max:
        raise ValueError(f"L = {L} exceeds table size {table.n_max}")
    lg = math.log(model_params(table.beta).gamma_beta)
    N = np.arange(1, L + 1)
    return N * lg + rows[N, L - N]


def excess_log_partition(beta: float, L: int, table: DpTable | None = None) -> float:
    """``log Ztilde_L`` via the walk representation."""
    t = table if table is not None else walk_area_table(beta, L)
    p = model_params(beta)
    return math.log(p.c_beta) + float(logsumexp(_log_terms(t, L, "close")))


def constrained_excess_log_partition(beta: float, L: int, table: DpTable | None = None) -> float:
    """``log Ztilde^c_L`` (paths whose last stretch has zero length)."""
    t = table if table is not None else walk_area_table(beta, L)
    return float(logsumexp(_log_terms(t, L, "zero")))


@dataclass(frozen=True)
class ExtensionLaw:
    """Exact law of the horizontal extension ``N`` at fixed ``(beta, L)``."""

    beta: float
    L: int
    probs: np.ndarray          # index N-1 for N = 1..L
    log_contrib: np.ndarray    # log of Gamma^N * closing mass (unnormalized)

    @property
    def support(self) -> np.ndarray:
        return np.arange(1, self.L + 1)

    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    def argmax(self) -> int:
        # ties broken toward the smallest N
        return int(np.argmax(self.probs)) + 1

    def cdf_rescaled(self, exponent: float = 2.0 / 3.0):
        """Support rescaled by ``L**exponent`` with the CDF values."""
        xs = self.support / self.L ** exponent
        return xs, np.cumsum(self.probs)


def extension_law(beta: float, L: int, table: DpTable | None = None) -> ExtensionLaw:
    t = table if table is not None else walk_area_table(beta, L)
    terms = _log_terms(t, L, "close")
    m = float(np.max(terms))
    if not np.isfinite(m):
        raise RuntimeError("no admissible extension at this L")
    w = np.exp(terms - m)
    return ExtensionLaw(beta=beta, L=L, probs=w / w.sum(), log_contrib=terms)


# ---------------------------------------------------------------------------
# exact backward sampler and the window mixture
# ---------------------------------------------------------------------------

def _draw(rng: np.random.Generator, weights: np.ndarray) -> int:
    tot = weights.sum()
    u = rng.random() * tot
    c = np.cumsum(weights)
    return int(np.searchsorted(c, u, side="right"))


def _step_weights(t: DpTable, xpow: np.ndarray, n: int, g: int, v_next):
    """Support and weights of ``V_n`` given the later state ``(v_next, g + |v_next|)``.

    ``v_next=None`` asks for ``V_N | G_N = g`` with the closing step to 0
    already weighted in.  Slice scale factors cancel in the normalization.
    """
    sl = t.slices[n]
    v0 = (sl.shape[1] - 1) // 2
    vr = np.arange(-min(g, v0), min(g, v0) + 1)
    if v_next is None:
        w = sl[g, v0 + vr] * xpow[np.abs(vr)]
    else:
        w = sl[g, v0 + vr] * xpow[np.abs(vr - v_next)]
    return vr, w


def exact_sampler(beta: float, L: int, rng: np.random.Generator,
                  table: DpTable | None = None) -> PolymerPath:
    """One exact draw from the polymer measure ``P_{L,beta}``.

    Samples the extension ``N`` from its exact law, then walks the slice
    tables backward from ``(V_{N+1} = 0, G_N = L - N)``; per-slice scale
    factors cancel in every conditional.
    """
    t = table if table is not None else walk_area_table(beta, L, keep_slices=True)
    if t.slices is None:
        raise ValueError("exact_sampler needs a table built with keep_slices=True")
    law = extension_law(beta, L, t)
    N = 1 + _draw(rng, law.probs)
    p = model_params(beta)
    xpow = p.x ** np.arange(t.g_max + 2)
    g = L - N
    vals = np.zeros(N + 2, dtype=np.int64)
    vr, w = _step_weights(t, xpow, N, g, None)
    vals[N] = int(vr[_draw(rng, w)])
    for n in range(N, 1, -1):
        g2 = g - abs(int(vals[n]))
        vr, w = _step_weights(t, xpow, n - 1, g2, int(vals[n]))
        vals[n - 1] = int(vr[_draw(rng, w)])
        g = g2
    walk = AuxWalk(tuple(int(v) for v in vals[: N + 2]))
    return from_aux_walk(walk, N)


def exact_sample_log_prob(beta: float, path: PolymerPath,
                          table: DpTable | None = None) -> float:
    """Log-probability the backward sampler assigns to ``path``.

    Evaluates the same chain of conditionals the sampler draws from; used
    to certify exactness against the enumeration law without Monte Carlo
    noise.
    """
    from .paths import to_aux_walk

    L = path.total_length
    N = path.horizontal_extension
    t = table if table is not None else walk_area_table(beta, L, keep_slices=True)
    law = extension_law(beta, L, t)
    logp = math.log(law.probs[N - 1])
    p = model_params(beta)
    xpow = p.x ** np.arange(t.g_max + 2)
    vals = to_aux_walk(path).values
    g = L - N
    vr, w = _step_weights(t, xpow, N, g, None)
    logp += math.log(w[np.searchsorted(vr, vals[N])] / w.sum())
    for n in range(N, 1, -1):
        g2 = g - abs(vals[n])
        vr, w = _step_weights(t, xpow, n - 1, g2, vals[n])
        logp += math.log(w[np.searchsorted(vr, vals[n - 1])] / w.sum())
        g = g2
    return logp


def mixture_window(L: int, limit: int = ENGINE_LIMIT) -> int:
    """Half-width of the size window: ``min(floor(log(L)^6), L//4, limit - L)``."""
    return max(0, min(int(math.log(L) ** 6), L // 4, limit - L))


def mixture_sampler(beta: float, L: int, rng: np.random.Generator,
                    table: DpTable | None = None):
    """Draw ``L'`` proportional to ``Ztilde_{L'}`` over the window, then sample.

    Returns ``(L', path)``.  A zero-width window degenerates to
    ``exact_sampler``.
    """
    eps = mixture_window(L)
    hi = L + eps
    t = table if table is not None else walk_area_table(beta, hi, keep_slices=True)
    if t.n_max < hi:
        raise ValueError("table too small for the mixture window")
    sizes = np.arange(L - eps, L + eps + 1)
    logz = np.array([excess_log_partition(beta, int(k), t) for k in sizes])
    w = np.exp(logz - logz.max())
    Lp = int(sizes[_draw(rng, w)])
    return Lp, exact_sampler(beta, Lp, rng, t)


# ---------------------------------------------------------------------------
# pattern renewal: excess free energy and regenerative constants
# ---------------------------------------------------------------------------

def pattern_log_weights(beta: float, t_max: int, table: DpTable | None = None) -> np.ndarray:
    """``log Zhat^c_t`` for ``t = 0..t_max`` (one-pattern excess weights).

    ``Zhat^c_t = sum_N Gamma^N P(T = N, G_N = t - N)`` with ``T`` the first
    zero hit of the walk; ``t = 0`` entry is ``-inf`` (no empty pattern).
    """
    t = table if table is not None else walk_area_table(beta, t_max, "positive-until-return")
    if t.n_max < t_max:
        raise ValueError("pattern table too small")
    lg = math.log(model_params(beta).gamma_beta)
    out = np.full(t_max + 1, -np.inf)
    for tt in range(1, t_max + 1):
        N = np.arange(1, tt + 1)
        out[tt] = logsumexp(N * lg + t.log_return[N, tt - N])
    return out


@dataclass(frozen=True)
class RegenerativeConstants:
    """Extended-phase constants from the pattern renewal.

    ``f_tilde`` solves ``sum_t Zhat^c_t e^{-alpha t} = 1``; ``c_renewal`` is
    the limit of ``Ztilde^c_L e^{-f_tilde L}`` (= 1/E[sigma]); ``e_beta`` the
    extension fraction; ``sigma_beta`` the Brownian amplitude of the middle
    line.  ``tail_bound`` bounds the truncation error (geometric tail) on
    every reported moment.
    """

    beta: float
    f_tilde: float
    c_renewal: float
    e_beta: float
    sigma_beta: float
    mean_pattern_length: float
    t_max: int
    tail_bound: float


def extended_constants(beta: float, t_max: int | None = None,
                       tol: float = 1e-11) -> RegenerativeConstants:
    """Solve the pattern-renewal identities in the extended phase."""
    if beta >= beta_critical():
        raise ValueError("extended constants require beta < beta_c")
    p = model_params(beta)
    log_gamma = math.log(p.gamma_beta)
    sizes = [t_max] if t_max is not None else [256, 512, 1024, 2048]
    last_err = None
    for size in sizes:
        tab = walk_area_table(beta, size, "positive-until-return")
        logzc = pattern_log_weights(beta, size, tab)
        ts = np.arange(1, size + 1)

        def phi(alpha):
            return float(np.exp(logzc[1:] - alpha * ts).sum())

        # phi is decreasing; phi(log Gamma) < 1 < phi(0+)
        f_tilde = brentq(lambda a: phi(a) - 1.0, 1e-12, log_gamma - 1e-12,
                         xtol=1e-15, rtol=8.9e-16)
        sig_mass = np.exp(logzc[1:] - f_tilde * ts)       # P(sigma = t)
        # geometric tail bound from the observed decay of t * P(sigma = t)
        tail_t = ts[-1]
        r = float((sig_mass[-1] * ts[-1]) / (sig_mass[-2] * ts[-2]))
        if not (0.0 < r < 1.0):
            last_err = f"no geometric decay at t_max={size}"
            continue
        tail = float(sig_mass[-1] * ts[-1] * r / (1.0 - r)) * (1.0 + tail_t)
        if tail > tol and size != sizes[-1] and t_max is None:
            last_err = f"tail {tail:.2e} above tolerance at t_max={size}"
            continue
        # moments of (sigma, nu, y^2) under the pattern law
        lg_contrib = tab.log_return  # log P(T=N, G=s)
        e_sigma = float((ts * sig_mass).sum())
        e_nu = 0.0
        e_y2 = 0.0
        for tt in range(1, size + 1):
            N = np.arange(1, tt + 1)
            w = np.exp(N * log_gamma + lg_contrib[N, tt - N] - f_tilde * tt)
            e_nu += float((N * w).sum())
            e_y2 += float(
                (np.exp(N * log_gamma - f_tilde * tt) * tab.y2_return[N, tt - N]).sum()
            )
        return RegenerativeConstants(
            beta=beta,
            f_tilde=f_tilde,
            c_renewal=1.0 / e_sigma,
            e_beta=e_nu / e_sigma,
            sigma_beta=math.sqrt(e_y2 / e_nu),
            mean_pattern_length=e_sigma,
            t_max=size,
            tail_bound=tail,
        )
    raise RuntimeError(f"extended_constants failed: {last_err}")


# ---------------------------------------------------------------------------
# critical renewal structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalRenewal:
    """Excursion renewal at the critical point.

    ``x_law_mu`` / ``x_law_zero``: inter-arrival law ``P(X = n)`` of
    ``X = extension + area`` started from ``mu_beta`` resp. from zero
    (exact for ``n <= n_max``); ``renewal_mass[m] = P(m in X-renewal set)``
    with a zero-started first excursion; ``tau_law_mu`` the clock marginal.
    """

    beta: float
    n_max: int
    x_law_mu: np.ndarray
    x_law_zero: np.ndarray
    renewal_mass: np.ndarray
    tau_law_mu: np.ndarray
    tau_truncation_loss: float

    def ttf_log_partition(self, L: int) -> float:
        """Reassemble ``log Ztilde_L`` from the renewal masses.

        ``Ztilde_L / c_beta = c_beta^{-(L+1)} +
        (1 - x) sum_{r=0}^{L-1} c_beta^{-r} u(L - r + 1)``.
        """
        if L + 1 > self.n_max:
            raise ValueError("renewal table too small for this L")
        p = model_params(self.beta)
        lcb = math.log(p.c_beta)
        terms = [-(L + 1) * lcb]
        for r in range(L):
            u = self.renewal_mass[L - r + 1]
            if u > 0.0:
                terms.append(math.log1p(-p.x) - r * lcb + math.log(u))
        return lcb + float(logsumexp(np.array(terms)))


_renewal_cache: dict = {}


def critical_renewal(n_max: int, beta: float | None = None) -> CriticalRenewal:
    """Build the critical excursion renewal (defaults to ``beta_c``)."""
    if n_max > 2 * ENGINE_LIMIT:
        raise ValueError("n_max exceeds the engine limit for the renewal DP")
    key = (int(n_max), None if beta is None else repr(float(beta)))
    if key in _renewal_cache:
        return _renewal_cache[key]
    b = beta_critical() if beta is None else beta
    p = model_params(b)
    xpow = p.x ** np.arange(n_max + 1)
    px_mu = _kernels.excursion_xlaw(p.x, p.c_beta, n_max, xpow, False)
    px_0 = _kernels.excursion_xlaw(p.x, p.c_beta, n_max, xpow, True)
    u = _kernels.renewal_masses(px_0, px_mu, n_max)
    var = 2.0 * p.x / (1.0 - p.x) ** 2
    vmax = int(12.0 * math.sqrt(var * n_max)) + 50
    tau_mu, lost = _kernels.excursion_tau_law(p.x, p.c_beta, n_max, vmax, False)
    out = CriticalRenewal(
        beta=b,
        n_max=n_max,
        x_law_mu=px_mu,
        x_law_zero=px_0,
        renewal_mass=u,
        tau_law_mu=tau_mu,
        tau_truncation_loss=float(lost),
    )
    _renewal_cache[key] = out
    return out
