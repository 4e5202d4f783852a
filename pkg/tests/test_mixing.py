"""Ensemble-mixer tests: closed forms vs brute-force averaging and quadrature."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

import squeezedx as sx

OSC = sx.OscillatorConfig()
SGR2 = OSC.ground_variance
SGR = np.sqrt(SGR2)
T = OSC.period


def pure_squeeze(A0, phi_sq=0.0):
    return sx.SqueezeDynamics(A0, np.sqrt(A0**2 - 1.0), phi_sq)


def mixed(A0=1.0, phi_sq=0.0, X_amp=0.0, phi_c=0.0, sigma_a=0.0):
    base = sx.GaussianStateSpec(
        OSC,
        pure_squeeze(A0, phi_sq) if A0 > 1 else sx.SqueezeDynamics(1.0, 0.0, phi_sq),
        sx.CenterTrajectory(X_amp, phi_c))
    return sx.MixedGaussianSpec(base, sigma_a=sigma_a)


class TestMixedGaussianSpec:
    def test_rejects_non_pure_base(self):
        base = sx.GaussianStateSpec(OSC, sx.SqueezeDynamics(2.0, 0.5))
        with pytest.raises(sx.InvariantError, match="pure"):
            sx.MixedGaussianSpec(base, sigma_a=0.1)

    def test_rejects_negative_spread(self):
        base = sx.GaussianStateSpec(OSC, sx.SqueezeDynamics(1.0))
        with pytest.raises(sx.InvariantError, match="sigma_a >= 0"):
            sx.MixedGaussianSpec(base, sigma_a=-0.1)

    def test_mean_center_defaults_to_base_trajectory(self):
        ms = mixed(X_amp=2 * SGR, phi_c=0.3, sigma_a=SGR)
        x0, p0 = sx.center_state(ms.base.center, OSC, 0.0)
        assert ms.mean_center == (x0, p0)

    def test_mean_center_must_agree_with_base(self):
        base = sx.GaussianStateSpec(OSC, sx.SqueezeDynamics(1.0),
                                    sx.CenterTrajectory(1.0, 0.0))
        with pytest.raises(sx.InvariantError, match="mean center"):
            sx.MixedGaussianSpec(base, sigma_a=0.1, mean_center=(0.5, 0.0))

    @given(A0=st.floats(1.0, 4.0), s=st.floats(0.0, 3.0))
    @settings(max_examples=40, deadline=None)
    def test_purity_product_formula(self, A0, s):
        # P = 1 + (sigma_a/sigma_gr)^4 + 2 A0 (sigma_a/sigma_gr)^2
        ms = mixed(A0=A0, sigma_a=s * SGR)
        expected = 1.0 + s**4 + 2.0 * A0 * s**2
        assert ms.purity_product == pytest.approx(expected, rel=1e-10)
        assert ms.purity_product >= 1.0 - 1e-12


class TestReparameterize:
    def test_sigma_zero_is_identity(self):
        ms = mixed(A0=1.25, phi_sq=0.4, X_amp=SGR, sigma_a=0.0)
        assert sx.reparameterize(ms) == ms.base

    def test_ground_base_with_sigma_gr(self):
        rp = sx.reparameterize(mixed(sigma_a=SGR))
        assert rp.squeeze.A0 == pytest.approx(2.0, rel=1e-14)
        assert rp.purity_product == pytest.approx(4.0, rel=1e-14)

    def test_squeezed_base_with_half_variance_spread(self):
        rp = sx.reparameterize(mixed(A0=1.25, sigma_a=np.sqrt(0.5 * SGR2)))
        assert rp.squeeze.A0 == pytest.approx(1.75, rel=1e-14)
        assert rp.purity_product == pytest.approx(2.5, rel=1e-14)

    def test_preserves_dA_phi_sq_and_center(self):
        ms = mixed(A0=1.6, phi_sq=0.9, X_amp=1.3 * SGR, phi_c=0.2, sigma_a=0.8 * SGR)
        rp = sx.reparameterize(ms)
        assert rp.squeeze.dA == ms.base.squeeze.dA
        assert rp.squeeze.phi_sq == ms.base.squeeze.phi_sq
        assert rp.center == ms.base.center

    @given(s1=st.floats(0.0, 2.0), s2=st.floats(0.0, 2.0))
    @settings(max_examples=30, deadline=None)
    def test_P_monotone_in_sigma_a(self, s1, s2):
        p1 = mixed(A0=1.5, sigma_a=s1 * SGR).purity_product
        p2 = mixed(A0=1.5, sigma_a=s2 * SGR).purity_product
        if s1 + 1e-6 < s2:  # strict growth needs a gap floats can resolve
            assert p1 < p2

    @given(A0=st.floats(1.0, 4.0), s=st.floats(0.0, 2.0), t=st.floats(0.0, 10.0))
    @settings(max_examples=40, deadline=None)
    def test_total_variance_identity(self, A0, s, t):
        # sigma_gr^2 A(t) + sigma_a^2 = sigma_gr^2 (A(t) + sigma_a^2/sigma_gr^2)
        ms = mixed(A0=A0, sigma_a=s * SGR)
        rp = sx.reparameterize(ms)
        A_base, _ = sx.quadrature_shape(ms.base.squeeze, 1.0, t)
        A_rep, _ = sx.quadrature_shape(rp.squeeze, 1.0, t)
        assert SGR2 * A_rep == pytest.approx(SGR2 * A_base + ms.sigma_a**2, rel=1e-12)


class TestEvalMixedDensity:
    def test_P_one_reduces_to_pure_density(self):
        spec = sx.GaussianStateSpec(OSC, pure_squeeze(1.25, 0.4),
                                    sx.CenterTrajectory(SGR, 0.9))
        grid = sx.GridSpec.for_state(spec, n_points=256)
        t = 0.9
        dm = sx.eval_mixed_density(spec, grid, t)
        dp = sx.eval_pure_density(spec, grid, t)
        assert np.abs(dm.values - dp.values).max() <= 1e-12

    def test_diagonal_gaussian_independent_of_P(self):
        ms = mixed(A0=1.25, X_amp=SGR, sigma_a=SGR)
        rp = sx.reparameterize(ms)
        grid = sx.GridSpec.for_state(rp, n_points=256)
        t = 1.3
        dm = sx.eval_mixed_density(rp, grid, t)
        A, _ = sx.quadrature_shape(rp.squeeze, 1.0, t)
        x_c, _ = sx.center_state(rp.center, OSC, t)
        x = grid.points()
        gauss = np.exp(-(x - x_c) ** 2 / (2 * SGR2 * A)) / np.sqrt(2 * np.pi * SGR2 * A)
        assert np.abs(np.diagonal(dm.values).real - gauss).max() <= 1e-13

    def test_purity_for_P4(self):
        rp = sx.reparameterize(mixed(sigma_a=SGR))
        grid = sx.GridSpec.for_state(rp, n_points=256)
        assert sx.purity(sx.eval_mixed_density(rp, grid, 0.35)) == pytest.approx(0.5, abs=1e-5)

    @pytest.mark.parametrize("s_ratio", [0.0, 0.5, 1.0, 2.0, 3.0])
    def test_unit_trace_across_P_range(self, s_ratio):
        # covers P from 1 to 1 + 81 + 2*1.5*9 = 109ish at the top ratio
        ms = mixed(A0=1.5, X_amp=SGR, sigma_a=s_ratio * SGR)
        rp = sx.reparameterize(ms)
        grid = sx.GridSpec.for_state(rp, n_points=512)
        rng = np.random.default_rng(17)
        for t in rng.uniform(0.0, T, 4):
            dm = sx.eval_mixed_density(rp, grid, float(t))
            assert abs(dm.trace() - 1.0) <= 1e-8

    def test_mixed_moments_and_uncertainty_floor(self):
        # sigma_x^2 = sigma_gr^2 A(t) and sigma_x sigma_p >= (hbar/2) sqrt(P),
        # quadrature-verified; equality at shape extrema (B = 0)
        ms = mixed(A0=1.4, phi_sq=0.6, sigma_a=0.9 * SGR)
        rp = sx.reparameterize(ms)
        P = rp.purity_product
        grid = sx.GridSpec.for_state(rp, n_points=512)
        rng = np.random.default_rng(23)
        for t in rng.uniform(0.0, T, 5):
            dm = sx.eval_mixed_density(rp, grid, float(t))
            m = sx.moments(dm, OSC)
            A, B = sx.quadrature_shape(rp.squeeze, 1.0, float(t))
            assert m.var_x == pytest.approx(SGR2 * A, rel=1e-9)
            assert m.uncertainty_product >= 0.5 * OSC.hbar * np.sqrt(P) * (1 - 1e-9)
            assert m.uncertainty_product == pytest.approx(
                0.5 * OSC.hbar * np.sqrt(P + B**2), rel=1e-8)
        t_min = (np.pi - rp.squeeze.phi_sq) / 2.0
        dm = sx.eval_mixed_density(rp, grid, t_min)
        m = sx.moments(dm, OSC)
        assert m.uncertainty_product == pytest.approx(0.5 * OSC.hbar * np.sqrt(P), rel=1e-9)


class TestEnsembleAverage:
    def test_sigma_zero_returns_pure_density(self):
        ms = mixed(A0=1.25, X_amp=SGR, sigma_a=0.0)
        grid = sx.GridSpec.for_state(ms.base, n_points=128)
        ens = sx.ensemble_average_density(ms, grid, 0.7, 16)
        dp = sx.eval_pure_density(ms.base, grid, 0.7)
        assert np.abs(ens.values - dp.values).max() == 0.0

    def test_ground_base_unit_spread_at_t0(self):
        ms = mixed(sigma_a=SGR)
        rp = sx.reparameterize(ms)
        grid = sx.GridSpec.for_state(rp, n_points=256)
        ens = sx.ensemble_average_density(ms, grid, 0.0, 32)
        cf = sx.eval_mixed_density(rp, grid, 0.0)
        err = np.abs(ens.values - cf.values).max() / np.abs(cf.values).max()
        assert err <= 1e-8

    def test_time_shifted_agreement(self):
        # the averaged matrix keeps solving the dynamics at later times
        ms = mixed(sigma_a=SGR)
        rp = sx.reparameterize(ms)
        grid = sx.GridSpec.for_state(rp, n_points=256)
        ens = sx.ensemble_average_density(ms, grid, 1.3, 32)
        cf = sx.eval_mixed_density(rp, grid, 1.3)
        err = np.abs(ens.values - cf.values).max() / np.abs(cf.values).max()
        assert err <= 1e-8

    def test_agreement_at_random_times_over_a_period(self):
        ms = mixed(A0=1.25, phi_sq=0.4, X_amp=SGR, phi_c=1.0, sigma_a=SGR)
        rp = sx.reparameterize(ms)
        grid = sx.GridSpec.for_state(rp, n_points=256)
        rng = np.random.default_rng(29)
        worst = 0.0
        for t in rng.uniform(0.0, T, 10):
            ens = sx.ensemble_average_density(ms, grid, float(t), 32)
            cf = sx.eval_mixed_density(rp, grid, float(t))
            worst = max(worst, float(np.abs(ens.values - cf.values).max()
                                     / np.abs(cf.values).max()))
        assert worst <= 1e-8

    def test_wide_spread_needs_more_nodes_and_then_agrees(self):
        # at sigma_a = 2 sigma_gr the 32-node rule is not converged: the
        # node-doubling guard must fire, and a 96-node rule must agree
        ms = mixed(A0=1.25, phi_sq=0.4, X_amp=SGR, phi_c=1.0, sigma_a=2 * SGR)
        rp = sx.reparameterize(ms)
        grid = sx.GridSpec.for_state(rp, n_points=256, margin=8.0)
        with pytest.raises(sx.ConvergenceError, match="increase n_nodes"):
            sx.ensemble_average_density(ms, grid, 1.3, 32)
        for t in (0.0, 1.3):
            ens = sx.ensemble_average_density(ms, grid, t, 96, check_convergence=False)
            cf = sx.eval_mixed_density(rp, grid, t)
            err = np.abs(ens.values - cf.values).max() / np.abs(cf.values).max()
            assert err <= 1e-8

    def test_rejects_too_few_nodes(self):
        ms = mixed(sigma_a=SGR)
        grid = sx.GridSpec.for_state(sx.reparameterize(ms), n_points=128)
        with pytest.raises(sx.InvariantError, match="n_nodes >= 16"):
            sx.ensemble_average_density(ms, grid, 0.0, 8)

    def test_monte_carlo_mode_agrees_at_statistical_tolerance(self):
        ms = mixed(A0=1.25, phi_sq=0.4, X_amp=SGR, phi_c=1.0, sigma_a=SGR)
        rp = sx.reparameterize(ms)
        grid = sx.GridSpec.for_state(rp, n_points=256)
        ens = sx.ensemble_average_density(ms, grid, 1.3, method="monte-carlo")
        cf = sx.eval_mixed_density(rp, grid, 1.3)
        rms = np.sqrt(np.mean(np.abs(ens.values - cf.values) ** 2))
        assert rms / np.abs(cf.values).max() <= 1e-3

    def test_monte_carlo_is_seed_deterministic(self):
        ms = mixed(sigma_a=0.5 * SGR)
        grid = sx.GridSpec.for_state(sx.reparameterize(ms), n_points=64)
        a = sx.ensemble_average_density(ms, grid, 0.4, method="monte-carlo",
                                        n_samples=2000, seed=7)
        b = sx.ensemble_average_density(ms, grid, 0.4, method="monte-carlo",
                                        n_samples=2000, seed=7)
        assert np.array_equal(a.values, b.values)


class TestGaussianIdentities:
    def quad_shifted(self, x, a, s1, s2):
        def f(y):
            return (np.exp(-((x + y) ** 2 + a * (x + y)) / (2 * s1)) / np.sqrt(2 * np.pi * s1)
                    * np.exp(-y**2 / (2 * s2)) / np.sqrt(2 * np.pi * s2))
        re = quad(lambda y: f(y).real, -np.inf, np.inf, epsabs=1e-14, limit=200)[0]
        im = quad(lambda y: f(y).imag, -np.inf, np.inf, epsabs=1e-14, limit=200)[0]
        return re + 1j * im

    def quad_exponential(self, x, a, s):
        def f(y):
            return np.exp(a * (x + y)) * np.exp(-y**2 / (2 * s)) / np.sqrt(2 * np.pi * s)
        re = quad(lambda y: f(y).real, -np.inf, np.inf, epsabs=1e-14, limit=200)[0]
        im = quad(lambda y: f(y).imag, -np.inf, np.inf, epsabs=1e-14, limit=200)[0]
        return re + 1j * im

    def test_shifted_delta_limit(self):
        got = sx.gaussian_identity_shifted(0.4, 0.0, 1.7, 1e-12)
        expected = np.exp(-0.4**2 / (2 * 1.7)) / np.sqrt(2 * np.pi * 1.7)
        assert abs(got - expected) / abs(expected) <= 1e-10

    def test_shifted_unit_convolution(self):
        assert sx.gaussian_identity_shifted(0.0, 0.0, 1.0, 1.0) == pytest.approx(
            1.0 / np.sqrt(4 * np.pi), rel=1e-14)

    def test_shifted_complex_example_vs_quadrature(self):
        a, s1, s2, x = 0.7 + 0.3j, 0.8, 0.5, 0.2
        got = sx.gaussian_identity_shifted(x, a, s1, s2)
        oracle = self.quad_shifted(x, a, s1, s2)
        assert abs(got - oracle) / abs(oracle) <= 1e-10

    def test_exponential_trivial(self):
        assert sx.gaussian_identity_exponential(0.3, 0.0, 1.0) == 1.0

    def test_exponential_lognormal_mean(self):
        assert sx.gaussian_identity_exponential(0.0, 1.0, 1.0) == pytest.approx(
            np.exp(0.5), rel=1e-14)

    def test_exponential_characteristic_function(self):
        got = sx.gaussian_identity_exponential(0.5, 2.0j, 0.6)
        assert got == pytest.approx(np.exp(1j) * np.exp(-1.2), rel=1e-14)
        oracle = self.quad_exponential(0.5, 2.0j, 0.6)
        assert abs(got - oracle) / abs(oracle) <= 1e-10

    def test_rejects_nonpositive_variances(self):
        with pytest.raises(sx.InvariantError):
            sx.gaussian_identity_shifted(0.0, 0.0, -1.0, 1.0)
        with pytest.raises(sx.InvariantError):
            sx.gaussian_identity_exponential(0.0, 0.0, 0.0)

    @given(ar=st.floats(-3.0, 3.0), ai=st.floats(-3.0, 3.0),
           s1=st.floats(0.25, 4.0), s2=st.floats(0.25, 4.0), x=st.floats(-2.0, 2.0))
    @settings(max_examples=25, deadline=None)
    def test_shifted_identity_random_parameters(self, ar, ai, s1, s2, x):
        # parameter box kept where double-precision quadrature is reliable;
        # the acceptance suite covers the full box with an mpmath oracle
        a = ar + 1j * ai
        got = sx.gaussian_identity_shifted(x, a, s1, s2)
        oracle = self.quad_shifted(x, a, s1, s2)
        assert abs(got - oracle) <= 1e-10 * max(abs(oracle), 1e-30)
