"""Random samplers: free/tilted walks, perfect simulation, critical excursions.

All randomness flows through :class:`RngStream`, a counter-based (Philox)
stream addressed by ``(seed, stream_id)``: identical addresses reproduce
identical output, distinct stream ids are independent, so experiments can
fan replicas across workers deterministically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .paths import AuxWalk, PolymerPath, from_aux_walk
from .thermo import (
    Tilt,
    beta_critical,
    log_mgf,
    model_params,
    solve_tilt_discrete,
)

__all__ = [
    "RngStream",
    "sample_increment",
    "sample_tilted_increment",
    "PerfectSample",
    "perfect_critical_sample",
    "lifetime_sample",
    "tilted_walk_sample",
    "conditioned_bead_sample",
    "ExcursionRecord",
    "critical_excursions",
]

_BUFFER = 1 << 22  # uniforms per refill for the buffer-driven kernels


@dataclass(frozen=True)
class RngStream:
    """Address of a reproducible random stream."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = (int(self.seed) & (2**64 - 1), int(self.stream_id) & (2**64 - 1))
        return np.random.Generator(np.random.Philox(key=key))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


# ---------------------------------------------------------------------------
# increment draws (exact inverse CDF, no rejection)
# ---------------------------------------------------------------------------

def sample_increment(beta: float, rng, size=None):
    """Two-sided geometric increments ``P(U = k) = x^{|k|}/c_beta``."""
    return sample_tilted_increment(beta, 0.0, rng, size)


def sample_tilted_increment(beta: float, h: float, rng, size=None):
    """Tilted increments ``P(U = k) proportional to x^{|k|} e^{h k}``.

    The two sides are geometric with ratios ``x e^{h}`` and ``x e^{-h}``;
    branch and magnitude come from one folded uniform each.
    """
    if abs(h) >= beta / 2:
        raise ValueError("tilt h outside (-beta/2, beta/2)")
    x = math.exp(-beta / 2)
    gp = x * math.exp(h)
    gm = x * math.exp(-h)
    fp = gp / (1 - gp)
    fm = gm / (1 - gm)
    s = 1.0 + fp + fm
    g = _as_generator(rng)
    scalar = size is None
    n = 1 if scalar else int(np.prod(size))
    u = g.random(n)
    out = np.zeros(n, dtype=np.int64)
    pos = u < fp / s
    neg = u >= (fp + 1.0) / s
    for mask, ratio, sign in ((pos, gp, 1), (neg, gm, -1)):
        m = int(mask.sum())
        if m:
            uf = np.maximum(g.random(m), 1e-300)
            out[mask] = sign * (1 + np.floor(np.log(uf) / math.log(ratio))).astype(np.int64)
    if scalar:
        return int(out[0])
    return out.reshape(size)


# ---------------------------------------------------------------------------
# perfect simulation (acceptance-rejection on the walk representation)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerfectSample:
    path: PolymerPath
    trials: int


def _run_rejection(L: int, beta: float, rng, want: int, max_trials: int,
                   lifetime_log_gamma: float):
    g = _as_generator(rng)
    p = model_params(beta)
    out_walks = np.zeros((want, L + 1), dtype=np.int64)
    out_n = np.zeros(want, dtype=np.int64)
    got = 0
    trials = 0
    # the buffer grows on exhaustion so cheap calls stay cheap
    size = max(64 * (L + 3), 1 << 14)
    buf = g.random(size)
    pos = 0
    while got < want:
        got, t, pos, exhausted = _kernels.perfect_trials(
            buf, pos, L, p.x, p.c_beta, out_walks, out_n, got, want,
            lifetime_log_gamma,
        )
        trials += t
        if trials - got > max_trials:
            raise RuntimeError(
                f"rejection sampler budget exhausted after {trials} trials "
                f"({got} acceptances)"
            )
        if exhausted and got < want:
            size = min(4 * size, _BUFFER)
            buf = g.random(size)
            pos = 0
    return out_walks, out_n, trials


def perfect_critical_sample(L: int, rng, max_trials: int = 10_000_000,
                            count: int = 1):
    """Exact draws from the critical polymer measure by acceptance-rejection.

    A free walk is simulated while ``G_n + n`` (strictly increasing) stays
    below ``L``; hitting ``L`` exactly at ``n = N`` makes the unique
    candidate, accepted when the next step closes the walk.  The expected
    trial count is ``c_beta / Ztilde_{L, beta_c}``, i.e. grows like L^{2/3}.

    Returns a :class:`PerfectSample` (``count == 1``) or a list of them.
    """
    beta = beta_critical()
    walks, ns, trials = _run_rejection(L, beta, rng, count, max_trials, 1.0)
    samples = []
    for i in range(count):
        N = int(ns[i])
        vals = tuple(int(v) for v in walks[i, : N + 1]) + (0,)
        samples.append(PerfectSample(from_aux_walk(AuxWalk(vals), N), trials))
    # per-sample trial counts are not separable from a batched run; the
    # total is attached to each sample only when a single draw was asked
    if count == 1:
        return samples[0]
    return samples, trials


def lifetime_sample(beta: float, L: int, rng, budget: int = 1_000_000):
    """Acceptance-rejection with a geometric lifetime for ``beta > beta_c``.

    The walk is killed by an independent lifetime of parameter
    ``1 - Gamma_beta``, which reweights candidates by ``Gamma^N``; an
    accepted draw is exact.  Returns ``None`` when the budget is exhausted
    (never a biased sample); the expected cost grows like
    ``e^{|G(a)| sqrt(L)}``.
    """
    p = model_params(beta)
    if p.gamma_beta >= 1.0:
        raise ValueError("lifetime sampler requires beta > beta_c (Gamma < 1)")
    try:
        walks, ns, trials = _run_rejection(
            L, beta, rng, 1, budget, math.log(p.gamma_beta)
        )
    except RuntimeError:
        return None
    N = int(ns[0])
    vals = tuple(int(v) for v in walks[0, : N + 1]) + (0,)
    return PerfectSample(from_aux_walk(AuxWalk(vals), N), trials)


# ---------------------------------------------------------------------------
# tilted walks and the window-conditioned bead stand-in
# ---------------------------------------------------------------------------

def _tilted_increment_batch(beta: float, hs: np.ndarray, g: np.random.Generator,
                            batch: int) -> np.ndarray:
    """(batch, n) tilted increments, step ``i`` tilted by ``hs[i]``."""
    x = math.exp(-beta / 2)
    gp = x * np.exp(hs)[None, :]
    gm = x * np.exp(-hs)[None, :]
    fp = gp / (1 - gp)
    fm = gm / (1 - gm)
    s = 1.0 + fp + fm
    n = hs.size
    u = g.random((batch, n))
    pos = u < fp / s
    neg = u >= (fp + 1.0) / s
    loguf = np.log(np.maximum(g.random((batch, n)), 1e-300))
    denom = np.where(pos, np.log(gp), np.log(gm))
    mag = 1 + np.floor(loguf / denom).astype(np.int64)
    return np.where(pos, mag, 0) - np.where(neg, mag, 0)


def tilted_walk_sample(beta: float, n: int, q: float, rng, size: int = 1,
                       tilt: Tilt | None = None) -> np.ndarray:
    """Walks of length ``n`` under the discrete area tilt ``H_n^q``.

    Step ``i`` has law tilted by ``h_i = (1 - i/n) h0 + h1``; under this
    product measure ``E[A_n] = q n^2`` and ``E[V_n] = 0``.  Returns an
    ``(size, n+1)`` array of walk values ``V_0..V_n``.
    """
    t = tilt if tilt is not None else solve_tilt_discrete(beta, n, q)
    hs = (1.0 - np.arange(1, n + 1) / n) * t.h0 + t.h1
    g = _as_generator(rng)
    inc = _tilted_increment_batch(beta, hs, g, size)
    out = np.zeros((size, n + 1), dtype=np.int64)
    np.cumsum(inc, axis=1, out=out[:, 1:])
    return out


def conditioned_bead_sample(beta: float, n: int, q: float, rng,
                            window_area: float | None = None,
                            window_end: float | None = None,
                            budget: int = 10_000_000,
                            size: int = 1,
                            tilt: Tilt | None = None,
                            batch: int = 4096):
    """Tilted walks accepted on ``{|A_n - q n^2| <= w, |V_n| <= w'}``.

    Defaults ``w = n^{3/4}``, ``w' = n^{1/4}``.  The accepted law is the
    exact conditional law of the tilted walk on the window; it stands in
    for the area-conditioned bead in the fluctuation experiments.  Returns
    ``(walks, trials)`` with ``walks`` of shape ``(size, n+1)``, or ``None``
    if the budget is exhausted first.
    """
    w = float(window_area) if window_area is not None else n ** 0.75
    wp = float(window_end) if window_end is not None else n ** 0.25
    t = tilt if tilt is not None else solve_tilt_discrete(beta, n, q)
    hs = (1.0 - np.arange(1, n + 1) / n) * t.h0 + t.h1
    g = _as_generator(rng)
    target = q * n * n
    got = []
    have = 0
    trials = 0
    while have < size:
        if trials > budget:
            return None
        b = min(batch, max(256, 2 * (size - have)))
        inc = _tilted_increment_batch(beta, hs, g, b)
        walks = np.zeros((b, n + 1), dtype=np.int64)
        np.cumsum(inc, axis=1, out=walks[:, 1:])
        trials += b
        area = walks[:, 1:].sum(axis=1)
        ok = (np.abs(area - target) <= w) & (np.abs(walks[:, n]) <= wp)
        if np.any(ok):
            got.append(walks[ok])
            have += int(ok.sum())
    return np.concatenate(got, axis=0)[:size], trials


# ---------------------------------------------------------------------------
# critical excursion records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExcursionRecord:
    """One excursion: clock, swept area, landing value, start value."""

    extension: int
    area: int
    v_tau: int
    v_start: int
    censored: bool

    @property
    def x_value(self) -> int:
        return self.extension + self.area


def critical_excursions(count: int, rng, start: str = "mu_beta",
                        beta: float | None = None,
                        cap: int = 200_000) -> list[ExcursionRecord]:
    """Chop a chain of walk excursions at sign-change/zero-hit times.

    The chain restarts each excursion at the recorded landing value
    (its law is exactly ``mu_beta``, which the experiments verify).  The
    clock has infinite mean at criticality, so excursions longer than
    ``cap`` steps are emitted with ``censored=True`` (statistics that use
    completed excursions stay unbiased because the landing value is
    independent of the clock and area).
    """
    if start not in ("mu_beta", "zero"):
        raise ValueError("start must be 'mu_beta' or 'zero'")
    b = beta_critical() if beta is None else beta
    p = model_params(b)
    g = _as_generator(rng)
    out = np.zeros((count, 5), dtype=np.int64)
    got = 0
    cur = 0
    have = start == "zero"
    from_mu = start == "mu_beta"
    while got < count:
        buf = g.random(_BUFFER)
        got, pos, cur, have, exhausted = _kernels.excursion_chopper(
            buf, 0, p.x, p.c_beta, cur, have, from_mu, cap, out, got, count
        )
        if not exhausted:
            break
    return [
        ExcursionRecord(
            extension=int(r[0]),
            area=int(r[1]),
            v_tau=int(r[2]),
            v_start=int(r[3]),
            censored=bool(r[4]),
        )
        for r in out
    ]
