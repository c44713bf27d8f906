import math

import numpy as np
import pytest
from scipy.integrate import quad

from ipdsaw.airy import (
    crit_constants,
    excursion_area_density,
    excursion_area_mc,
    excursion_area_moment,
    scaled_area_density,
    tau_tail_constant,
)
from ipdsaw.thermo import beta_critical, increment_variance

BC = beta_critical()

_MC_CACHE = {}


def _mc_draws():
    if "draws" not in _MC_CACHE:
        rng = np.random.default_rng(20240811)
        reps = 40_000
        _MC_CACHE["draws"] = (
            excursion_area_mc(2_500, reps, rng),
            excursion_area_mc(10_000, reps, rng),
        )
    return _MC_CACHE["draws"]


def _mc_mean():
    d1, d2 = _mc_draws()
    est = 2 * d2.mean() - d1.mean()
    se = math.sqrt(4 * d2.var(ddof=1) / d2.size + d1.var(ddof=1) / d1.size)
    return est, se


class TestExcursionAreaDensity:
    def test_normalization(self):
        assert excursion_area_moment(0.0) == pytest.approx(1.0, abs=1e-9)

    def test_known_moments(self):
        # E[B] = sqrt(pi/8), E[B^2] = 5/12 (classical excursion-area moments)
        assert excursion_area_moment(1.0) == pytest.approx(math.sqrt(math.pi / 8), abs=1e-9)
        assert excursion_area_moment(2.0) == pytest.approx(5.0 / 12.0, abs=1e-9)

    def test_right_tail_constant(self):
        # in the last window where the series has relative accuracy the
        # compensated ratio approaches the known constant 72 sqrt(6/pi);
        # the fitted limit (O(1/x^2) correction removed) lands within 2%
        xs = np.array([1.9, 2.2])
        r = excursion_area_density(xs) / (xs**2 * np.exp(-6 * xs**2))
        # straight-line fit of r against 1/x^2, extrapolated to 0
        slope = (r[1] - r[0]) / (1 / xs[1] ** 2 - 1 / xs[0] ** 2)
        c3 = r[1] - slope / xs[1] ** 2
        assert c3 == pytest.approx(72 * math.sqrt(6 / math.pi), rel=0.02)

    def test_tail_graft_continuous_and_shaped(self):
        a = excursion_area_density(2.2 - 1e-9)
        b = excursion_area_density(2.2 + 1e-9)
        assert b == pytest.approx(a, rel=1e-6)
        xs = np.array([2.6, 3.0, 3.4])
        r = excursion_area_density(xs) / (xs**2 * np.exp(-6 * xs**2))
        assert np.allclose(r, r[0], rtol=1e-12)

    def test_left_tail_vanishes(self):
        assert excursion_area_density(0.05) < 1e-100

    def test_monte_carlo_oracle(self):
        """Richardson-extrapolated lattice excursions vs the analytic mean.

        The raw lattice bias is O(n^{-1/2}) (about 10 standard errors at
        n = 1e4 with 4e4 replicas), so the oracle extrapolates two sizes
        (n, 4n); the remaining O(1/n) bias is far below the Monte Carlo
        band.
        """
        est, se = _mc_mean()
        assert abs(est - excursion_area_moment(1.0)) < 3 * se

    def test_binned_density_vs_mc(self):
        d1, d2 = _mc_draws()
        edges = np.linspace(0.3, 1.2, 7)
        for a, b in zip(edges, edges[1:]):
            p1 = np.mean((d1 >= a) & (d1 < b))
            p2 = np.mean((d2 >= a) & (d2 < b))
            p_ext = 2 * p2 - p1  # Richardson in n^{-1/2}
            p_th, _ = quad(excursion_area_density, a, b)
            se = math.sqrt(
                4 * p2 * (1 - p2) / d2.size + p1 * (1 - p1) / d1.size
            )
            assert abs(p_ext - p_th) < 4 * se + 1e-3


class TestScaledDensity:
    def test_is_a_density(self):
        val, _ = quad(lambda t: scaled_area_density(BC, t), 0.05, 16, limit=200)
        assert val == pytest.approx(1.0, abs=1e-4)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            scaled_area_density(BC, 0.0)


class TestCritConstants:
    def test_var(self):
        cc = crit_constants(BC)
        assert cc.var_v1 == pytest.approx(increment_variance(BC), rel=1e-14)
        assert cc.c_big == pytest.approx(cc.var_v1 ** -0.5, rel=1e-14)

    def test_airy_integral_change_of_variables(self):
        # int_0^inf u^{-3} w(u^{-3/2}) du computed directly vs (2/3) int t^{1/3} w(t) dt
        cc = crit_constants(BC)
        direct, _ = quad(
            lambda u: u**-3 * scaled_area_density(BC, u**-1.5), 0.4, 40, limit=300
        )
        assert cc.airy_integral == pytest.approx(direct, abs=1e-6)

    def test_frozen_values_at_beta_c(self):
        # pinned by the independent renewal chain (see engine tests)
        cc = crit_constants(BC)
        assert cc.var_v1 == pytest.approx(5.222262523120398, rel=1e-10)
        assert cc.airy_integral == pytest.approx(0.746505130670517, rel=1e-7)
        assert cc.c_tail == pytest.approx(0.44087188049679066, rel=1e-6)
        assert cc.z_prefactor == pytest.approx(0.45675801664822085, rel=1e-6)

    def test_all_positive(self):
        cc = crit_constants(1.0)
        for f in (cc.var_v1, cc.c_big, cc.airy_integral, cc.c_tail, cc.z_prefactor):
            assert f > 0

    def test_tau_tail_constant(self):
        assert tau_tail_constant(BC) == pytest.approx(0.5905811793963103, rel=1e-8)
