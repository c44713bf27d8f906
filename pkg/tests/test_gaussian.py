import numpy as np
import pytest

from ipdsaw.gaussian import sample_xi, xi_field
from ipdsaw.thermo import a_beta, log_mgf, solve_tilt

BETA = 2.0
QB = 1.0 / a_beta(BETA) ** 2
GRID = np.array([0.15, 0.35, 0.5, 0.75, 1.0])


class TestCovariance:
    def test_min_structure(self):
        spec = xi_field(BETA, QB, GRID)
        c = spec.covariance
        for i in range(len(GRID)):
            for j in range(len(GRID)):
                assert c[i, j] == pytest.approx(c[min(i, j), min(i, j)], rel=1e-12)

    def test_small_time_vanishes(self):
        # C(t, s) -> 0 linearly as the first grid point t -> 0
        v = [xi_field(BETA, QB, np.array([t, 0.5])).covariance[0, 0]
             for t in (1e-3, 1e-5, 1e-7)]
        assert v[0] < 0.1 and v[1] < 1e-3 * 60 and v[2] / v[1] == pytest.approx(1e-2, rel=0.05)

    def test_psd_and_symmetric(self):
        spec = xi_field(BETA, QB, GRID)
        assert np.allclose(spec.covariance, spec.covariance.T)
        assert np.linalg.eigvalsh(spec.covariance).min() > 0

    def test_integrand_is_variance(self):
        # d/dt C(t,t) = L''((1-t) h0 + h1)
        t = solve_tilt(BETA, QB)
        spec = xi_field(BETA, QB, np.array([0.499, 0.501]), tilt=t)
        deriv = (spec.covariance[1, 1] - spec.covariance[0, 0]) / 0.002
        assert deriv == pytest.approx(
            log_mgf(BETA, (1 - 0.5) * t.h0 + t.h1, 2), rel=1e-4
        )

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            xi_field(BETA, QB, np.array([0.0, 0.5]))
        with pytest.raises(ValueError):
            xi_field(BETA, QB, np.array([0.5, 0.4]))


class TestConditioned:
    def test_constraints_hold_exactly(self):
        # choose the report grid equal to the internal constraint grid so
        # the discretized constraints are directly observable
        fine = np.linspace(0.0, 1.0, 33)[1:]
        spec = xi_field(BETA, QB, fine, conditioned=True, integral_points=32)
        rng = np.random.default_rng(5)
        draws = sample_xi(spec, rng, size=500)
        assert np.max(np.abs(draws[:, -1])) < 1e-10      # xi(1) = 0
        knots = np.concatenate([[0.0], fine])
        w = np.zeros(len(fine))
        for i in range(len(fine)):
            left = knots[i + 1] - knots[i]
            right = knots[i + 2] - knots[i + 1] if i + 1 < len(fine) else 0.0
            w[i] = 0.5 * (left + right)
        assert np.max(np.abs(draws @ w)) < 1e-10         # trapezoid integral = 0

    def test_conditioned_covariance_is_schur(self):
        fine = np.linspace(0.0, 1.0, 33)[1:]
        spec_u = xi_field(BETA, QB, fine)
        spec_c = xi_field(BETA, QB, fine, conditioned=True, integral_points=32)
        c = spec_u.covariance
        knots = np.concatenate([[0.0], fine])
        w = np.zeros(len(fine))
        for i in range(len(fine)):
            left = knots[i + 1] - knots[i]
            right = knots[i + 2] - knots[i + 1] if i + 1 < len(fine) else 0.0
            w[i] = 0.5 * (left + right)
        rows = np.vstack([np.eye(len(fine))[-1], w])
        a = rows @ c @ rows.T
        cc = c @ rows.T
        schur = c - cc @ np.linalg.solve(a, cc.T)
        assert np.allclose(spec_c.covariance, schur, atol=1e-12)

    def test_constraint_discretization_converged(self):
        c64 = xi_field(BETA, QB, GRID, conditioned=True, integral_points=64).covariance
        c128 = xi_field(BETA, QB, GRID, conditioned=True, integral_points=128).covariance
        assert np.max(np.abs(c64 - c128)) < 2e-3

    def test_conditioned_variance_smaller(self):
        cu = xi_field(BETA, QB, GRID).covariance
        cc = xi_field(BETA, QB, GRID, conditioned=True).covariance
        assert np.all(np.diag(cc) <= np.diag(cu) + 1e-14)


class TestSampling:
    def test_empirical_covariance_unconditioned(self):
        spec = xi_field(BETA, QB, GRID)
        rng = np.random.default_rng(42)
        n = 100_000
        draws = sample_xi(spec, rng, size=n)
        emp = np.cov(draws, rowvar=False)
        c = spec.covariance
        se = np.sqrt((np.outer(np.diag(c), np.diag(c)) + c**2) / n)
        assert np.all(np.abs(emp - c) < 3.5 * se)

    def test_empirical_covariance_conditioned(self):
        spec = xi_field(BETA, QB, GRID, conditioned=True)
        rng = np.random.default_rng(43)
        n = 100_000
        draws = sample_xi(spec, rng, size=n)
        emp = np.cov(draws[:, :-1], rowvar=False)
        c = spec.covariance[:-1, :-1]
        se = np.sqrt((np.outer(np.diag(c), np.diag(c)) + c**2) / n) + 1e-12
        assert np.all(np.abs(emp - c) < 4 * se)

    def test_reproducible(self):
        spec = xi_field(BETA, QB, GRID, conditioned=True)
        a = sample_xi(spec, np.random.default_rng(9), size=4)
        b = sample_xi(spec, np.random.default_rng(9), size=4)
        assert np.array_equal(a, b)
