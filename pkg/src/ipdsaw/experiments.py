"""Named, seeded experiments confronting the engine and samplers with theory.

Every experiment returns an :class:`ExperimentReport` that embeds its
parameters and seed (bit-for-bit reproducible), each criterion with its
measured value, reference, tolerance and provenance tag, and the curves it
measured.  Reference values never come from the run itself; solver
residuals are the only self-certified quantities and are labeled as such.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .airy import crit_constants, tau_tail_constant
from .engine import (
    constrained_excess_log_partition,
    critical_renewal,
    exact_sampler,
    excess_log_partition,
    extended_constants,
    extension_law,
    walk_area_table,
)
from .gaussian import sample_xi, xi_field
from .paths import geometry
from .samplers import (
    RngStream,
    conditioned_bead_sample,
    critical_excursions,
    perfect_critical_sample,
    tilted_walk_sample,
)
from .stats import empirical_covariance, ks_discrete_laws, ks_sample_vs_law, loglog_slope
from .thermo import a_beta, beta_critical, collapse_rate, model_params, mu_beta, solve_tilt_discrete, wulff

__all__ = ["Criterion", "ExperimentReport", "run", "EXPERIMENTS"]


@dataclass(frozen=True)
class Criterion:
    name: str
    passed: bool
    measured: float
    reference: float | None
    tolerance: float
    mode: str                    # 'rel' | 'abs' | 'le' | 'se'
    provenance: str
    stderr: float | None = None

    def to_json(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "measured": self.measured,
            "reference": self.reference,
            "tolerance": self.tolerance,
            "mode": self.mode,
            "provenance": self.provenance,
            "stderr": self.stderr,
        }


def _rel(name, measured, reference, tol, prov):
    ok = abs(measured - reference) <= tol * abs(reference)
    return Criterion(name, ok, float(measured), float(reference), tol, "rel", prov)


def _abs(name, measured, reference, tol, prov):
    ok = abs(measured - reference) <= tol
    return Criterion(name, ok, float(measured), float(reference), tol, "abs", prov)


def _le(name, measured, tol, prov):
    return Criterion(name, measured <= tol, float(measured), None, tol, "le", prov)


def _se(name, measured, reference, stderr, nsig, prov):
    ok = abs(measured - reference) <= nsig * stderr
    return Criterion(name, ok, float(measured), float(reference), nsig, "se", prov,
                     stderr=float(stderr))


@dataclass
class ExperimentReport:
    name: str
    params: dict
    seed: int
    criteria: list[Criterion] = field(default_factory=list)
    measurements: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def to_json(self):
        def clean(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v

        return {
            "name": self.name,
            "params": clean(self.params),
            "seed": self.seed,
            "passed": bool(self.passed),
            "criteria": [c.to_json() for c in self.criteria],
            "measurements": clean(self.measurements),
            "wall_time_s": self.wall_time_s,
        }


# ---------------------------------------------------------------------------
# the registry
# ---------------------------------------------------------------------------

def ext_lln(seed=0, beta=0.8, L=512, mc_L=160, replicas=4000, threads=1):
    """Extended phase: extension LLN and the Brownian middle line."""
    t0 = time.time()
    rep = ExperimentReport("ext_lln", dict(beta=beta, L=L, mc_L=mc_L,
                                           replicas=replicas), seed)
    rc = extended_constants(beta)
    table = walk_area_table(beta, L)
    law = extension_law(beta, L, table)
    rep.criteria.append(_rel(
        "extension_lln_mean", law.mean() / L, rc.e_beta, 0.02,
        "[PAPER: N_l/L -> e(beta)] vs [DERIVED: pattern renewal]"))
    zc = constrained_excess_log_partition(beta, L, table)
    rep.criteria.append(_rel(
        "constrained_partition_renewal_constant",
        math.exp(zc - rc.f_tilde * L), rc.c_renewal, 0.02,
        "[PAPER: Ztilde^c ~ c e^{fL}, c = 1/E sigma] vs [DERIVED: renewal]"))
    # Monte Carlo middle line: Var(sqrt(N) Mtilde(s)) ~ sigma_beta^2 s
    grid = np.array([0.2, 0.4, 0.6, 0.8, 1.0])
    mc_table = walk_area_table(beta, mc_L, keep_slices=True)
    rng = RngStream(seed, 0).generator()
    z = np.zeros((replicas, grid.size))
    for r in range(replicas):
        p = exact_sampler(beta, mc_L, rng, mc_table)
        n_l = p.horizontal_extension
        m2 = np.asarray(geometry(p).middle_x2)
        idx = np.minimum((grid * (n_l + 1)).astype(int), n_l + 1)
        z[r] = math.sqrt(n_l) * (m2[idx] / 2.0) / (n_l + 1)
    var = z.var(axis=0, ddof=1)
    slope = float(np.dot(grid, var) / np.dot(grid, grid))
    rep.criteria.append(_rel(
        "middle_line_brownian_variance_slope", slope, rc.sigma_beta**2, 0.10,
        "[PAPER: sqrt(N) envelopes -> sigma_beta B] vs [DERIVED: E y^2/E nu]"))
    rep.measurements["variance_curve"] = {"s": grid, "var": var}
    rep.measurements["constants"] = {
        "f_tilde": rc.f_tilde, "e_beta": rc.e_beta, "sigma_beta": rc.sigma_beta,
        "c_renewal": rc.c_renewal, "tail_bound": rc.tail_bound,
    }
    rep.wall_time_s = time.time() - t0
    return rep


def crit_extension(seed=0, L_small=512, L_big=2048, mc_L=300, mc_replicas=20000,
                   threads=1):
    """Critical extension law: cross-size stability of N_l / L^{2/3}."""
    t0 = time.time()
    rep = ExperimentReport("crit_extension",
                           dict(L_small=L_small, L_big=L_big, mc_L=mc_L,
                                mc_replicas=mc_replicas), seed)
    bc = beta_critical()
    tab = walk_area_table(bc, L_big)
    law1 = extension_law(bc, L_small, tab)
    law2 = extension_law(bc, L_big, tab)
    ks = ks_discrete_laws(
        law1.support / L_small ** (2 / 3), law1.probs,
        law2.support / L_big ** (2 / 3), law2.probs,
    ).value
    rep.criteria.append(_le(
        "ks_rescaled_extension_cross_size", ks, 0.05,
        "[PAPER: N_l/L^{2/3} converges in law] (cross-L stability stand-in)"))
    # perfect-sampler empirical law vs the exact one at a mid size
    law_mc = extension_law(bc, mc_L, tab)
    samples, trials = perfect_critical_sample(mc_L, RngStream(seed, 1),
                                              count=mc_replicas)
    ns = np.array([s.path.horizontal_extension for s in samples])
    ks2 = ks_sample_vs_law(ns / mc_L ** (2 / 3),
                           law_mc.support / mc_L ** (2 / 3), law_mc.probs).value
    rep.criteria.append(_le(
        "ks_perfect_sampler_vs_exact_law", ks2, 0.02,
        "[DERIVED: DP oracle at the sampler size]"))
    rep.measurements["laws"] = {
        "L_small": L_small, "probs_small": law1.probs,
        "L_big": L_big, "probs_big": law2.probs,
    }
    rep.measurements["mc"] = {"trials": trials, "replicas": mc_replicas}
    rep.wall_time_s = time.time() - t0
    return rep


def crit_prefactor(seed=0, sizes=(64, 128, 256, 512), threads=1):
    """Critical decay of the excess partition function and its prefactor."""
    t0 = time.time()
    rep = ExperimentReport("crit_prefactor", dict(sizes=list(sizes)), seed)
    bc = beta_critical()
    tab = walk_area_table(bc, max(sizes))
    logz = np.array([excess_log_partition(bc, L, tab) for L in sizes])
    est = loglog_slope(np.array(sizes, dtype=float), np.exp(logz))
    rep.criteria.append(_abs(
        "log_partition_loglog_slope", est.value, -2.0 / 3.0, 0.05,
        "[PAPER: Ztilde ~ c/L^{2/3}]"))
    cc = crit_constants(bc)
    L = max(sizes)
    measured = math.exp(logz[-1]) * L ** (2 / 3)
    rep.criteria.append(_rel(
        "prefactor_at_largest_size", measured, cc.z_prefactor, 0.15,
        "[PAPER: Theorem prefactor, corrected normalization (see ledger)]"))
    rep.measurements["curve"] = {"L": np.array(sizes), "log_ztilde": logz}
    rep.measurements["z_prefactor"] = cc.z_prefactor
    rep.wall_time_s = time.time() - t0
    return rep


def collapsed_extension(seed=0, beta=2.0, sizes=(256, 512, 1024), threads=1):
    """Collapsed phase: sqrt(L) extension and the G(a(beta)) rate."""
    t0 = time.time()
    rep = ExperimentReport("collapsed_extension",
                           dict(beta=beta, sizes=list(sizes)), seed)
    ab = a_beta(beta)
    g_star = collapse_rate(beta, ab, "Gtilde")
    L = max(sizes)
    tab = walk_area_table(beta, L)
    law = extension_law(beta, L, tab)
    rep.criteria.append(_rel(
        "argmax_extension_vs_a_beta", float(law.argmax()), ab * math.sqrt(L), 0.05,
        "[PAPER: N_l/sqrt(L) -> a(beta)]"))
    rates = np.array([excess_log_partition(beta, s, tab) / math.sqrt(s) for s in sizes])
    rep.criteria.append(_rel(
        "sqrt_rate_at_largest_size", rates[-1], g_star, 0.05,
        "[PAPER: Ztilde ~ e^{G(a) sqrt(L)}]"))
    gaps = np.abs(rates - g_star)
    rep.criteria.append(Criterion(
        "sqrt_rate_monotone_trend", bool(np.all(np.diff(gaps) < 0)),
        float(gaps[-1]), 0.0, 0.0, "le",
        "[DERIVED: trend monitor over sizes]"))
    rep.measurements["rates"] = {"L": np.array(sizes), "log_ztilde_over_sqrtL": rates}
    rep.measurements["a_beta"] = ab
    rep.measurements["G_at_a"] = g_star
    rep.wall_time_s = time.time() - t0
    return rep


def _bead_batch(args):
    beta, n, q, tilt, stream, count = args
    out = conditioned_bead_sample(beta, n, q, stream, size=count, tilt=tilt,
                                  batch=8192)
    if out is None:
        raise RuntimeError("bead sampler budget exhausted")
    return out


def _bead_samples(beta, n, q, tilt, seed, total, threads, stream_base=10):
    chunks = max(1, min(threads, 8))
    per = [total // chunks + (1 if i < total % chunks else 0) for i in range(chunks)]
    args = [(beta, n, q, tilt, RngStream(seed, stream_base + i), c)
            for i, c in enumerate(per) if c > 0]
    if len(args) == 1:
        walks, trials = _bead_batch(args[0])
        return walks, trials
    with ThreadPoolExecutor(max_workers=len(args)) as ex:
        parts = list(ex.map(_bead_batch, args))
    walks = np.concatenate([p[0] for p in parts], axis=0)
    trials = sum(p[1] for p in parts)
    return walks, trials


def wulff_shape(seed=0, beta=2.0, n=400, replicas=10_000, bead_replicas=2000,
                threads=1):
    """Collapsed-phase limit shapes: profile and envelope against the dome."""
    t0 = time.time()
    rep = ExperimentReport("wulff_shape",
                           dict(beta=beta, n=n, replicas=replicas,
                                bead_replicas=bead_replicas), seed)
    ab = a_beta(beta)
    q = 1.0 / ab**2
    tilt = solve_tilt_discrete(beta, n, q)
    ts = np.arange(n + 1) / n
    dome = wulff(beta, q, ts)
    # analytic identities of the dome
    rep.criteria.append(_abs("wulff_endpoint", wulff(beta, q, 1.0), 0.0, 1e-10,
                             "[TRIVIAL: antisymmetry of the integrand]"))
    from scipy.integrate import quad

    area, _ = quad(lambda t: wulff(beta, q, t), 0, 1, limit=100)
    rep.criteria.append(_abs("wulff_area", area, q, 1e-8,
                             "[TRIVIAL: Fubini + area constraint]"))
    # tilted-walk mean path
    walks = tilted_walk_sample(beta, n, q, RngStream(seed, 2), size=replicas,
                               tilt=tilt)
    mean_path = walks.mean(axis=0) / n
    rep.criteria.append(_le(
        "tilted_mean_path_sup_distance", float(np.max(np.abs(mean_path - dome))),
        0.05, "[PAPER: rescaled profile -> gamma*_q]"))
    # conditioned beads: profile and envelope versions
    bw, trials = _bead_samples(beta, n, q, tilt, seed, bead_replicas, threads)
    prof = np.abs(bw).mean(axis=0) / n
    rep.criteria.append(_le(
        "bead_profile_sup_distance", float(np.max(np.abs(prof - dome))),
        0.05, "[PAPER: profile limit under the conditioned law]"))
    upper = _upper_envelope_paths(bw)
    env = upper.mean(axis=0) / n
    rep.criteria.append(_le(
        "bead_upper_envelope_vs_half_dome",
        float(np.max(np.abs(env - dome / 2.0))), 0.05,
        "[PAPER: envelope -> gamma*_beta/2]"))
    rep.measurements["profile"] = {"t": ts, "mean_path": mean_path,
                                   "bead_profile": prof, "dome": dome}
    rep.measurements["bead_trials"] = trials
    rep.wall_time_s = time.time() - t0
    return rep


def _upper_envelope_paths(walks: np.ndarray) -> np.ndarray:
    """Upper envelopes of the polymer paths carried by walk samples.

    The polymer stretches are ``l_i = (-1)^{i-1} V_i``; the upper envelope
    at ``i`` is ``max(partial_{i-1}, partial_i)`` of stretch partial sums,
    which equals ``M_i + |l_i|/2`` with the middle line M.
    """
    reps, n1 = walks.shape
    n = n1 - 1
    signs = np.where(np.arange(1, n + 1) % 2 == 1, 1, -1)
    stretches = walks[:, 1:] * signs
    partial = np.concatenate([np.zeros((reps, 1)), np.cumsum(stretches, axis=1)],
                             axis=1)
    upper = np.maximum(partial[:, :-1], partial[:, 1:])
    return np.concatenate([np.zeros((reps, 1)), upper], axis=1)


def fluctuations(seed=0, beta=2.0, sizes=(200, 400), replicas=6000,
                 grid=(0.2, 0.35, 0.5, 0.65, 0.8), gauss_replicas=100_000,
                 threads=1):
    """Gaussian fluctuation fields around the Wulff shape."""
    t0 = time.time()
    rep = ExperimentReport("fluctuations",
                           dict(beta=beta, sizes=list(sizes), replicas=replicas,
                                grid=list(grid), gauss_replicas=gauss_replicas),
                           seed)
    ab = a_beta(beta)
    q = 1.0 / ab**2
    g = np.asarray(grid, dtype=float)
    spec_u = xi_field(beta, q, g)
    spec_c = xi_field(beta, q, g, conditioned=True)
    # 1) the Gaussian sampler itself: exact constraints, covariance within 3 SE
    rng = RngStream(seed, 3).generator()
    draws_c = sample_xi(spec_c, rng, size=gauss_replicas)
    full = np.union1d(g, np.linspace(0, 1, 65)[1:])
    spec_chk = xi_field(beta, q, full, conditioned=True)
    chk = sample_xi(spec_chk, rng, size=200)
    cons_err = max(
        float(np.max(np.abs(chk[:, -1]))),
        float(np.max(np.abs(chk @ _trap_weights(full)))),
    )
    rep.criteria.append(_le("conditioned_sampler_constraint_error", cons_err,
                            1e-9, "[TRIVIAL: by construction]"))
    emp = empirical_covariance(draws_c)
    dev = np.max(np.abs(emp.value - spec_c.covariance) / emp.stderr)
    rep.criteria.append(_le("gaussian_sampler_covariance_max_dev_se", float(dev),
                            3.5, "[TRIVIAL: sampler vs its own covariance]"))
    draws_u = sample_xi(xi_field(beta, q, g), rng, size=gauss_replicas)
    emp_u = empirical_covariance(draws_u)
    dev_u = np.max(np.abs(emp_u.value - spec_u.covariance) / emp_u.stderr)
    rep.criteria.append(_le("gaussian_unconditioned_covariance_max_dev_se",
                            float(dev_u), 3.5,
                            "[PAPER: cov = int L'' over (0, s^t)]"))
    # 2) Monte Carlo bead fields at each size
    for k, n in enumerate(sizes):
        tilt = solve_tilt_discrete(beta, n, q)
        walks, trials = _bead_samples(beta, n, q, tilt, seed, replicas, threads,
                                      stream_base=20 + 10 * k)
        idx = (g * n).astype(int)
        prof = np.abs(walks[:, idx]) / math.sqrt(n)
        u = np.diff(walks, axis=1)
        signs = np.where(np.arange(1, n + 1) % 2 == 1, 1, -1)
        mid2 = np.cumsum(u * signs, axis=1)[:, idx - 1] / math.sqrt(n)
        cov_p = np.cov(prof, rowvar=False)
        cov_m = np.cov(mid2, rowvar=False)
        scale_c = np.sqrt(np.outer(np.diag(spec_c.covariance),
                                   np.diag(spec_c.covariance)))
        scale_u = np.sqrt(np.outer(np.diag(spec_u.covariance),
                                   np.diag(spec_u.covariance)))
        dev_p = float(np.max(np.abs(cov_p - spec_c.covariance) / scale_c))
        dev_m = float(np.max(np.abs(cov_m - spec_u.covariance) / scale_u))
        tag = f"_n{n}"
        last = n == max(sizes)
        rep.criteria.append(_le(
            "profile_covariance_vs_conditioned_field" + tag, dev_p,
            0.15 if last else 0.25,
            "[PAPER: profile fluctuations -> xi^c] (entrywise, per-entry scale)"))
        rep.criteria.append(_le(
            "middle_doubled_covariance_vs_field" + tag, dev_m,
            0.15 if last else 0.25,
            "[PAPER: doubled middle line -> xi_H] (entrywise, per-entry scale)"))
        cross = (prof - prof.mean(0)).T @ (mid2 - mid2.mean(0)) / (replicas - 1)
        se_cross = np.sqrt(
            (np.outer(np.diag(cov_p), np.diag(cov_m)) + cross**2) / replicas
        )
        rep.criteria.append(_le(
            "profile_middle_cross_covariance_max_dev_se" + tag,
            float(np.max(np.abs(cross) / se_cross)), 3.5,
            "[PAPER: asymptotic decorrelation]"))
        rep.measurements[f"cov_profile_n{n}"] = cov_p
        rep.measurements[f"cov_middle_n{n}"] = cov_m
        rep.measurements[f"bead_trials_n{n}"] = trials
    rep.measurements["cov_conditioned_field"] = spec_c.covariance
    rep.measurements["cov_field"] = spec_u.covariance
    rep.measurements["grid"] = g
    rep.wall_time_s = time.time() - t0
    return rep


def _trap_weights(grid: np.ndarray) -> np.ndarray:
    knots = np.concatenate([[0.0], grid])
    w = np.zeros(grid.size)
    for i in range(grid.size):
        left = knots[i + 1] - knots[i]
        right = knots[i + 2] - knots[i + 1] if i + 1 < grid.size else 0.0
        w[i] = 0.5 * (left + right)
    return w


def renewal_tail(seed=0, n_max=2048, mc_replicas=100_000, ttf_sizes=(16, 64, 256),
                 threads=1):
    """Critical renewal: inter-arrival tail, clock constant, TTF identity."""
    t0 = time.time()
    rep = ExperimentReport("renewal_tail",
                           dict(n_max=n_max, mc_replicas=mc_replicas,
                                ttf_sizes=list(ttf_sizes)), seed)
    bc = beta_critical()
    cr = critical_renewal(n_max)
    tab = walk_area_table(bc, max(ttf_sizes))
    worst = 0.0
    for L in ttf_sizes:
        got = cr.ttf_log_partition(L)
        want = excess_log_partition(bc, L, tab)
        worst = max(worst, abs(got - want))
    rep.criteria.append(_le("ttf_vs_dp_log_partition_max_gap", worst, 1e-8,
                            "[PAPER: renewal reassembly identity]"))
    cc = crit_constants(bc)
    n_chk = min(2000, n_max - 8)
    rep.criteria.append(_rel(
        "x_tail_constant", cr.x_law_mu[n_chk] * n_chk ** (4 / 3), cc.c_tail, 0.10,
        "[PAPER: P(X=n) ~ c1/n^{4/3}, corrected constant (see ledger)]"))
    rep.criteria.append(_rel(
        "tau_tail_constant", cr.tau_law_mu[n_chk] * n_chk**1.5,
        tau_tail_constant(bc), 0.02,
        "[PAPER: P(tau=n) ~ C/n^{3/2}, corrected constant (see ledger)]"))
    ratios = [cr.tau_law_mu[m] * m**1.5 / tau_tail_constant(bc)
              for m in (n_chk // 4, n_chk // 2, n_chk)]
    rep.criteria.append(Criterion(
        "tau_tail_trend", bool(abs(ratios[2] - 1) <= abs(ratios[0] - 1) + 1e-12),
        float(ratios[2]), 1.0, 0.0, "le", "[DERIVED: trend monitor]"))
    # Monte Carlo: landing law, independence of consecutive X
    recs = critical_excursions(mc_replicas, RngStream(seed, 4))
    done = [r for r in recs if not r.censored]
    vals, counts = np.unique([r.v_tau for r in done], return_counts=True)
    freq = counts / len(done)
    tv = 0.5 * float(sum(abs(f - mu_beta(bc, int(v))) for v, f in zip(vals, freq)))
    tv += 0.5 * float(1.0 - sum(mu_beta(bc, int(v)) for v in vals))
    rep.criteria.append(_le("vtau_tv_vs_mu_beta", tv, 0.02,
                            "[PAPER: V_tau ~ mu_beta]"))
    pairs = []
    prev = None
    for r in recs:
        if r.censored:
            prev = None
            continue
        xval = min(r.x_value, 10_000)
        if prev is not None:
            pairs.append((prev, xval))
        prev = xval
    a = np.array([p[0] for p in pairs], dtype=float)
    b = np.array([p[1] for p in pairs], dtype=float)
    rho = float(np.corrcoef(a, b)[0, 1])
    rep.criteria.append(_se("consecutive_x_correlation", rho, 0.0,
                            1.0 / math.sqrt(len(pairs)), 3.0,
                            "[PAPER: excursions are independent]"))
    rep.measurements["x_tail_curve"] = {
        "n": np.array([n_chk // 4, n_chk // 2, n_chk]),
        "n43_p": np.array([cr.x_law_mu[m] * m ** (4 / 3)
                           for m in (n_chk // 4, n_chk // 2, n_chk)]),
    }
    rep.measurements["censored_fraction"] = 1.0 - len(done) / len(recs)
    rep.wall_time_s = time.time() - t0
    return rep


EXPERIMENTS = {
    "ext_lln": ext_lln,
    "crit_extension": crit_extension,
    "crit_prefactor": crit_prefactor,
    "collapsed_extension": collapsed_extension,
    "wulff_shape": wulff_shape,
    "fluctuations": fluctuations,
    "renewal_tail": renewal_tail,
}


def run(name: str, params: dict | None = None, seed: int = 0) -> ExperimentReport:
    """Run a registry experiment with the given parameters and seed."""
    try:
        fn = EXPERIMENTS[name]
    except KeyError:
        raise ValueError(
            f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}"
        ) from None
    return fn(seed=seed, **(params or {}))
