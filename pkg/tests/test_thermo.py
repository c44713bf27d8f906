import math

import numpy as np
import pytest

from ipdsaw.thermo import (
    Tilt,
    a_beta,
    beta_critical,
    collapse_rate,
    increment_variance,
    log_mgf,
    log_mgf_mixed,
    model_params,
    mu_beta,
    sample_mu_beta,
    solve_tilt,
    solve_tilt_discrete,
    wulff,
    wulff_envelope,
)

BETAS = [0.5, 0.8, 1.2187557268720124, 2.0, 3.5]


def series_log_mgf(beta, h, order, kmax=4000):
    """Truncated-series oracle for L(h) and its derivatives."""
    x = math.exp(-beta / 2)
    c = (1 + x) / (1 - x)
    k = np.arange(-kmax, kmax + 1)
    w = np.exp(h * k - (beta / 2) * np.abs(k)) / c
    m0 = w.sum()
    if order == 0:
        return math.log(m0)
    m1 = (k * w).sum() / m0
    if order == 1:
        return m1
    m2 = (k**2 * w).sum() / m0
    if order == 2:
        return m2 - m1**2
    m3 = (k**3 * w).sum() / m0
    return m3 - 3 * m2 * m1 + 2 * m1**3


class TestModelParams:
    def test_example_beta2(self):
        # c_2 = (1+e^{-1})/(1-e^{-1}), cross-checked by summing the series
        p = model_params(2.0)
        assert p.c_beta == pytest.approx(2.1639534137386528, rel=1e-12)
        k = np.arange(-200, 201)
        assert p.c_beta == pytest.approx(np.exp(-abs(k)).sum(), rel=1e-12)

    def test_large_beta_limits(self):
        p = model_params(50.0)
        assert p.c_beta == pytest.approx(1.0, abs=1e-10)
        assert p.gamma_beta < 1e-20

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            model_params(0.0)

    def test_gamma_decreasing(self):
        g = [model_params(b).gamma_beta for b in np.linspace(0.1, 5, 60)]
        assert all(a > b for a, b in zip(g, g[1:]))


class TestBetaCritical:
    def test_gamma_is_one(self):
        bc = beta_critical()
        assert abs(model_params(bc).gamma_beta - 1.0) < 1e-12

    def test_cubic_root(self):
        x = math.exp(-beta_critical() / 2)
        assert abs(x**3 + x**2 + x - 1.0) < 1e-12
        assert x == pytest.approx(0.5436890126920764, abs=1e-12)

    def test_value(self):
        assert beta_critical() == pytest.approx(1.2187557268720124, abs=1e-12)

    def test_phase_split(self):
        bc = beta_critical()
        assert model_params(bc - 0.1).gamma_beta > 1
        assert model_params(bc + 0.1).gamma_beta < 1


class TestLogMgf:
    @pytest.mark.parametrize("beta", BETAS)
    def test_at_zero(self, beta):
        assert log_mgf(beta, 0.0, 0) == pytest.approx(0.0, abs=1e-14)
        assert log_mgf(beta, 0.0, 1) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("beta", BETAS)
    def test_variance_closed_form(self, beta):
        x = model_params(beta).x
        assert log_mgf(beta, 0.0, 2) == pytest.approx(2 * x / (1 - x) ** 2, rel=1e-12)
        assert increment_variance(beta) == pytest.approx(
            series_log_mgf(beta, 0.0, 2), rel=1e-12
        )

    @pytest.mark.parametrize("beta", BETAS)
    @pytest.mark.parametrize("order", [0, 1, 2, 3])
    def test_against_series(self, beta, order):
        for h in np.linspace(-0.9 * beta / 2, 0.9 * beta / 2, 7):
            assert log_mgf(beta, h, order) == pytest.approx(
                series_log_mgf(beta, h, order), abs=1e-11, rel=1e-11
            )

    def test_domain_error(self):
        with pytest.raises(ValueError):
            log_mgf(1.0, 0.51, 0)


class TestMixedMgf:
    def test_at_origin(self):
        assert log_mgf_mixed(2.0, (0.0, 0.0), "value") == pytest.approx(0.0, abs=1e-14)
        g = log_mgf_mixed(2.0, (0.0, 0.0), "gradient")
        assert np.allclose(g, 0.0, atol=1e-14)

    @pytest.mark.parametrize("beta", [0.8, 2.0])
    def test_quadrature_refinement(self, beta):
        # 64 vs 128 Gauss-Legendre nodes agree far below 1e-12
        for h0, h1 in [(0.3, -0.15), (0.8, -0.4), (-0.5, 0.3)]:
            H = (h0 * beta / 2, h1 * beta / 2)
            v64 = log_mgf_mixed(beta, H, "value", nodes=64)
            v128 = log_mgf_mixed(beta, H, "value", nodes=128)
            assert v64 == pytest.approx(v128, abs=1e-13)

    def test_hessian_spd(self):
        Hs = log_mgf_mixed(2.0, (0.9, -0.45), "hessian")
        assert np.allclose(Hs, Hs.T)
        assert np.all(np.linalg.eigvalsh(Hs) > 0)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            log_mgf_mixed(1.0, (0.6, 0.0), "value")


class TestTiltSolver:
    def test_zero_target(self):
        t = solve_tilt(2.0, 0.0)
        assert abs(t.h0) < 1e-12 and abs(t.h1) < 1e-12

    @pytest.mark.parametrize("beta", [0.8, 1.5, 2.0, 3.0])
    @pytest.mark.parametrize("q", [0.1, 0.3, 0.7, 1.2, 2.0])
    def test_residual_and_antisymmetry(self, beta, q):
        t = solve_tilt(beta, q)
        r = log_mgf_mixed(beta, t, "gradient") - np.array([q, 0.0])
        assert np.linalg.norm(r) < 1e-10
        assert abs(t.h1 + t.h0 / 2) < 1e-9

    def test_h0_increasing_in_q(self):
        h0s = [solve_tilt(2.0, q).h0 for q in np.linspace(0.1, 2.0, 8)]
        assert all(a < b for a, b in zip(h0s, h0s[1:]))

    def test_discrete_matches_mean_constraints(self):
        beta, n, q = 2.0, 200, 0.5
        t = solve_tilt_discrete(beta, n, q)
        coef = 1.0 - np.arange(1, n + 1) / n
        d1 = log_mgf(beta, coef * t.h0 + t.h1, 1)
        assert float(np.dot(coef, d1)) / n == pytest.approx(q, abs=1e-10)
        assert float(np.sum(d1)) / n == pytest.approx(0.0, abs=1e-10)

    def test_discrete_converges_to_continuous(self):
        beta, q = 2.0, 0.5
        tc = solve_tilt(beta, q)
        gaps = []
        for n in (50, 100, 200, 400):
            td = solve_tilt_discrete(beta, n, q)
            gaps.append(np.hypot(td.h0 - tc.h0, td.h1 - tc.h1))
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 5e-3


class TestCollapseRate:
    def test_rho_positive(self):
        for q in (0.1, 0.5, 1.0, 2.0):
            assert collapse_rate(2.0, q, "rho") > 0

    def test_gtilde_identity(self):
        # G(a) = a log Gamma - h0/a + a L_Lam(H) equals the rho form
        beta = 2.0
        for a in (0.7, 1.0, 1.36, 2.0):
            q = 1 / a**2
            t = solve_tilt(beta, q)
            direct = (
                a * math.log(model_params(beta).gamma_beta)
                - t.h0 / a
                + a * log_mgf_mixed(beta, t, "value")
            )
            assert collapse_rate(beta, a, "Gtilde") == pytest.approx(direct, abs=1e-10)

    def test_gtilde_negative_concave(self):
        beta = 2.0
        avals = np.linspace(0.6, 4.0, 25)
        g = np.array([collapse_rate(beta, a, "Gtilde") for a in avals])
        assert np.all(g < 0)
        assert np.all(np.diff(g, 2) < 1e-9)

    def test_a_beta_stationary(self):
        ab = a_beta(2.0)
        eps = 1e-5
        g1 = collapse_rate(2.0, ab - eps, "Gtilde")
        g2 = collapse_rate(2.0, ab + eps, "Gtilde")
        g0 = collapse_rate(2.0, ab, "Gtilde")
        assert g0 >= g1 - 1e-12 and g0 >= g2 - 1e-12
        assert abs(g2 - g1) / (2 * eps) < 1e-6

    def test_a_beta_frozen_value(self):
        assert a_beta(2.0) == pytest.approx(1.3595752991865673, abs=1e-9)
        assert collapse_rate(2.0, a_beta(2.0), "Gtilde") == pytest.approx(
            -2.5023298636878213, abs=1e-9
        )

    def test_a_beta_decreasing_trend(self):
        vals = [a_beta(b) for b in (1.5, 2.0, 3.0)]
        assert vals[0] > vals[1] > vals[2]

    def test_requires_collapsed_phase(self):
        with pytest.raises(ValueError):
            a_beta(1.0)


class TestWulff:
    @pytest.mark.parametrize("beta,q", [(2.0, 0.3), (2.0, 0.54), (1.5, 1.0)])
    def test_endpoint_area_symmetry(self, beta, q):
        ts = np.linspace(0, 1, 21)
        vals = wulff(beta, q, ts)
        assert abs(vals[0]) < 1e-14
        assert abs(vals[-1]) < 1e-10
        assert np.allclose(vals, vals[::-1], atol=1e-10)
        # Fubini: the area under the profile equals q
        from scipy.integrate import quad

        area, _ = quad(lambda t: wulff(beta, q, t), 0, 1, limit=100)
        assert area == pytest.approx(q, abs=1e-8)

    def test_envelope_is_half_profile(self):
        beta = 2.0
        q = 1 / a_beta(beta) ** 2
        ts = np.linspace(0, 1, 9)
        assert np.allclose(wulff_envelope(beta, ts), 0.5 * wulff(beta, q, ts), atol=1e-12)


class TestMuBeta:
    @pytest.mark.parametrize("beta", BETAS)
    def test_normalized_symmetric(self, beta):
        total = mu_beta(beta, 0) + 2 * sum(mu_beta(beta, k) for k in range(1, 300))
        assert total == pytest.approx(1.0, abs=1e-12)
        assert mu_beta(beta, 3) == mu_beta(beta, -3)

    def test_mass_at_zero(self):
        beta = 1.3
        assert mu_beta(beta, 0) == pytest.approx(1 - math.exp(-beta / 2), rel=1e-14)

    def test_sampler_matches_pmf(self):
        beta = 1.0
        rng = np.random.default_rng(7)
        draws = sample_mu_beta(beta, rng, size=200_000)
        for k in (0, 1, -2):
            freq = np.mean(draws == k)
            p = mu_beta(beta, k)
            se = math.sqrt(p * (1 - p) / draws.size)
            assert abs(freq - p) < 4 * se
