"""Acceptance suite: one test per criterion, one printed line per check.

Heavy experiments run once in session fixtures; every tolerance is pinned
here, none deferred.  Names carry the item ids so that
``pytest -k "A1 or A2 or A4 or A10"`` is the quick subset.
"""
import math

import numpy as np
import pytest

from ipdsaw.airy import crit_constants, tau_tail_constant
from ipdsaw.engine import (
    constrained_excess_log_partition,
    excess_log_partition,
    extended_constants,
    extension_law,
    walk_area_table,
)
from ipdsaw.experiments import run
from ipdsaw.paths import enumerate_partition_value
from ipdsaw.samplers import RngStream, perfect_critical_sample
from ipdsaw.thermo import (
    a_beta,
    beta_critical,
    log_mgf_mixed,
    model_params,
    solve_tilt,
    solve_tilt_discrete,
)

BC = beta_critical()


def _line(item, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {item}: {detail}")
    assert ok, f"{item}: {detail}"


# ---------------------------------------------------------------------------
# session fixtures for the heavy experiments
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def fluct_report():
    return run("fluctuations", {"replicas": 6000, "sizes": (200, 400)}, seed=2)


@pytest.fixture(scope="session")
def renewal_report():
    return run("renewal_tail", {"n_max": 2048, "mc_replicas": 100_000}, seed=3)


# ---------------------------------------------------------------------------
# A1 -- oracle equivalence fixes the representation convention
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("beta", [0.5, BC, 2.0], ids=["b0.5", "bc", "b2.0"])
def test_A1_oracle_equivalence(beta):
    table = walk_area_table(beta, 12)
    worst = 0.0
    for L in range(1, 13):
        want = math.log(enumerate_partition_value(L, beta)) - beta * L
        got = excess_log_partition(beta, L, table)
        worst = max(worst, abs(got - want) / abs(want) if want else abs(got - want))
    _line("A1", worst < 1e-10,
          f"DP vs enumeration, beta={beta:.4g}: max rel gap {worst:.2e} < 1e-10")


# ---------------------------------------------------------------------------
# A2 -- the critical point
# ---------------------------------------------------------------------------

def test_A2_beta_critical():
    gap = abs(model_params(BC).gamma_beta - 1.0)
    _line("A2", gap < 1e-12, f"|Gamma(beta_c) - 1| = {gap:.2e} < 1e-12")
    x = math.exp(-BC / 2)
    cube = abs(x**3 + x**2 + x - 1.0)
    _line("A2", cube < 1e-10, f"cubic residual {cube:.2e} < 1e-10")


# ---------------------------------------------------------------------------
# A3 -- critical decay and prefactor
# ---------------------------------------------------------------------------

def test_A3_critical_decay():
    rep = run("crit_prefactor", seed=1)
    for c in rep.criteria:
        _line("A3", c.passed,
              f"{c.name}: measured={c.measured:.6g} ref={c.reference} "
              f"tol={c.tolerance} ({c.mode})")


# ---------------------------------------------------------------------------
# A4 -- perfect-sampler exactness at the critical point
# ---------------------------------------------------------------------------

def test_A4_perfect_sampler():
    L, n = 30, 100_000
    samples, trials = perfect_critical_sample(L, RngStream(7, 0), count=n)
    law = extension_law(BC, L)
    counts = np.zeros(L + 2)
    for s in samples:
        counts[s.path.horizontal_extension] += 1
    tv = 0.5 * float(np.abs(counts[1 : L + 1] / n - law.probs).sum())
    _line("A4", tv < 0.02, f"TV(empirical N law, exact) = {tv:.4f} < 0.02 at L=30")
    p_acc = math.exp(excess_log_partition(BC, L)) / model_params(BC).c_beta
    want = 1.0 / p_acc
    se = math.sqrt((1 - p_acc) / p_acc**2 / n)
    gap = abs(trials / n - want)
    _line("A4", gap < 3 * se,
          f"mean trials {trials / n:.2f} vs c_beta/Ztilde = {want:.2f} "
          f"(|gap| = {gap:.3f} < 3 SE = {3 * se:.3f})")


# ---------------------------------------------------------------------------
# A5 -- extended regime constants
# ---------------------------------------------------------------------------

def test_A5_extended_regime():
    beta, L = 0.8, 512
    rc = extended_constants(beta)
    table = walk_area_table(beta, L)
    zc = constrained_excess_log_partition(beta, L, table)
    got = math.exp(zc - rc.f_tilde * L)
    rel = abs(got - rc.c_renewal) / rc.c_renewal
    _line("A5", rel < 0.02,
          f"Ztilde^c e^(-fL) = {got:.6f} vs 1/E[sigma] = {rc.c_renewal:.6f} "
          f"(rel {rel:.2e} < 2%)")
    law = extension_law(beta, L, table)
    rel2 = abs(law.mean() / L - rc.e_beta) / rc.e_beta
    _line("A5", rel2 < 0.02,
          f"E[N_l]/L = {law.mean() / L:.6f} vs e(beta) = {rc.e_beta:.6f} "
          f"(rel {rel2:.2e} < 2%)")


# ---------------------------------------------------------------------------
# A6 -- collapsed regime
# ---------------------------------------------------------------------------

def test_A6_collapsed_regime():
    rep = run("collapsed_extension", seed=1)
    for c in rep.criteria:
        _line("A6", c.passed,
              f"{c.name}: measured={c.measured:.6g} ref={c.reference} "
              f"tol={c.tolerance} ({c.mode})")


# ---------------------------------------------------------------------------
# A7 -- tilt solver grid
# ---------------------------------------------------------------------------

def test_A7_tilt_solver():
    worst_res, worst_sym = 0.0, 0.0
    for beta in (0.8, 1.5, 2.0, 3.0):
        for q in (0.1, 0.25, 0.5, 1.0, 1.8):
            t = solve_tilt(beta, q)
            r = np.linalg.norm(log_mgf_mixed(beta, t, "gradient") - np.array([q, 0.0]))
            worst_res = max(worst_res, float(r))
            worst_sym = max(worst_sym, abs(t.h1 + t.h0 / 2))
    _line("A7", worst_res < 1e-10,
          f"20-point grid: max residual {worst_res:.2e} < 1e-10")
    _line("A7", worst_sym < 1e-9,
          f"20-point grid: max |h1 + h0/2| = {worst_sym:.2e} < 1e-9")
    beta, q = 2.0, 0.5
    tc = solve_tilt(beta, q)
    gaps = []
    for n in (50, 100, 200, 400):
        td = solve_tilt_discrete(beta, n, q)
        gaps.append(float(np.hypot(td.h0 - tc.h0, td.h1 - tc.h1)))
    mono = all(a > b for a, b in zip(gaps, gaps[1:]))
    _line("A7", mono, f"discrete tilt gap decreasing over n: {gaps}")


# ---------------------------------------------------------------------------
# A8 -- Wulff identities and the mean tilted path
# ---------------------------------------------------------------------------

def test_A8_wulff():
    rep = run("wulff_shape", {"replicas": 10_000, "bead_replicas": 2000}, seed=5)
    for c in rep.criteria:
        _line("A8", c.passed,
              f"{c.name}: measured={c.measured:.6g} ref={c.reference} "
              f"tol={c.tolerance} ({c.mode})")


# ---------------------------------------------------------------------------
# A9 -- fluctuation fields (property-based at finite n)
# ---------------------------------------------------------------------------

def test_A9_fluctuations(fluct_report):
    for c in fluct_report.criteria:
        _line("A9", c.passed,
              f"{c.name}: measured={c.measured:.6g} tol={c.tolerance} ({c.mode})")


# ---------------------------------------------------------------------------
# A10 -- critical renewal structure
# ---------------------------------------------------------------------------

def test_A10_critical_renewal(renewal_report):
    for c in renewal_report.criteria:
        _line("A10", c.passed,
              f"{c.name}: measured={c.measured:.6g} ref={c.reference} "
              f"tol={c.tolerance} ({c.mode})")


# ---------------------------------------------------------------------------
# A11 -- critical extension-law stability across sizes
# ---------------------------------------------------------------------------

def test_A11_extension_stability():
    from ipdsaw.stats import ks_discrete_laws

    tab = walk_area_table(BC, 2048)
    law1 = extension_law(BC, 512, tab)
    law2 = extension_law(BC, 2048, tab)
    ks = ks_discrete_laws(
        law1.support / 512 ** (2 / 3), law1.probs,
        law2.support / 2048 ** (2 / 3), law2.probs,
    ).value
    _line("A11", ks < 0.05,
          f"KS(N/L^(2/3) law at 512 vs 2048) = {ks:.4f} < 0.05")
