"""Boundary-integral kernels: Green's functions, on/off-curve flow, forcing."""

import numpy as np
import pytest

from ibstring import (
    CurveState,
    GridField,
    PerturbationMode,
    dissipation_rate,
    forcing_derivative_integrand,
    forcing_derivative_integrand_direct,
    forcing_derivative_quadrature,
    make_circle,
    make_perturbed_circle,
    make_reparam_circle,
    nonstiff_forcing,
    off_curve_velocity,
    on_curve_velocity,
    pressure_at,
    pressure_kernel,
    sample_flow,
    stokeslet,
    velocity_integrand,
)
from ibstring.spectral import derivative, fractional_laplacian_half
from ibstring.stokeslet import OnCurvePointError, _tau_factor, on_curve_velocity_zero_gauge

from conftest import random_smooth_curve


class TestGreensFunctions:
    def test_stokeslet_unit_x(self):
        G = stokeslet(np.array([1.0, 0.0]))
        assert np.allclose(G, np.array([[1.0, 0.0], [0.0, 0.0]]) / (4 * np.pi), atol=1e-15)

    def test_stokeslet_at_e_on_y_axis(self):
        G = stokeslet(np.array([0.0, np.e]))
        expected = (-np.eye(2) + np.diag([0.0, 1.0])) / (4 * np.pi)
        assert np.allclose(G, expected, atol=1e-15)

    def test_stokeslet_even_symmetric_eigenvalues(self, rng):
        for _ in range(5):
            x = rng.normal(size=2) * 3
            G = stokeslet(x)
            assert np.allclose(G, stokeslet(-x), atol=1e-15)
            assert np.allclose(G, G.T, atol=1e-15)
            r = np.linalg.norm(x)
            eig = np.sort(np.linalg.eigvalsh(G))
            expected = np.sort([-np.log(r) / (4 * np.pi), (1 - np.log(r)) / (4 * np.pi)])
            assert np.allclose(eig, expected, atol=1e-13)

    def test_stokeslet_origin_rejected(self):
        with pytest.raises(ValueError, match="singular"):
            stokeslet(np.zeros(2))

    def test_pressure_kernel_values(self):
        assert np.allclose(pressure_kernel(np.array([1.0, 0.0])), [1 / (2 * np.pi), 0.0])
        assert np.allclose(pressure_kernel(np.array([0.0, 2.0])), [0.0, 1 / (4 * np.pi)])

    def test_pressure_kernel_odd(self, rng):
        x = rng.normal(size=2)
        assert np.allclose(pressure_kernel(-x), -pressure_kernel(x), atol=1e-15)


class TestVelocityIntegrand:
    def test_circle_quadrature_sums_to_zero(self):
        X = make_circle(256)
        h = X.h
        for j in (0, 41):
            total = h * sum(velocity_integrand(X, j, jp) for jp in range(256))
            assert np.max(np.abs(total)) < 1e-12

    def test_circle_diagonal_limit(self):
        X = make_circle(256)
        assert np.allclose(velocity_integrand(X, 0, 0), [-1.0 / (4 * np.pi), 0.0], atol=1e-12)

    def test_near_diagonal_first_order_convergence(self):
        gaps = []
        for n in (64, 128, 256):
            X = make_perturbed_circle(n, 1.0, [PerturbationMode(3, 0.08, 0.0)])
            gaps.append(np.linalg.norm(velocity_integrand(X, 0, 1) - velocity_integrand(X, 0, 0)))
        ratios = [gaps[i] / gaps[i + 1] for i in range(2)]
        assert all(1.8 < r < 2.2 for r in ratios)

    def test_matches_vectorized_row(self, rng):
        X = random_smooth_curve(rng, n=64)
        u = on_curve_velocity(X)
        j = 9
        row = X.h * sum(velocity_integrand(X, j, jp) for jp in range(64))
        assert np.max(np.abs(row - u.values[j])) < 1e-13


class TestOnCurveVelocity:
    def test_circle_is_steady(self):
        u = on_curve_velocity(make_circle(256))
        assert np.max(np.abs(u.values)) < 1e-10

    def test_translated_rotated_circle_steady(self):
        u = on_curve_velocity(make_circle(256, 1.3, 2.1, (4.0, -7.0)))
        assert np.max(np.abs(u.values)) < 1e-10

    def test_reparam_circle_has_tangential_flow(self):
        X = make_reparam_circle(256, 1.0, 0.3)
        u = on_curve_velocity(X)
        tangent = X.xp.values / np.linalg.norm(X.xp.values, axis=1)[:, None]
        assert np.max(np.abs(np.einsum("ij,ij->i", u.values, tangent))) > 1e-3

    def test_translation_invariance(self, rng):
        X = random_smooth_curve(rng, n=128)
        shifted = CurveState(GridField(X.x.values + np.array([2.5, -0.75])))
        du = on_curve_velocity(shifted).values - on_curve_velocity(X).values
        assert np.max(np.abs(du)) < 1e-12

    def test_rotation_equivariance(self, rng):
        X = random_smooth_curve(rng, n=128)
        th = 1.234
        rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        u_rot = on_curve_velocity(CurveState(GridField(X.x.values @ rot.T))).values
        assert np.max(np.abs(u_rot - on_curve_velocity(X).values @ rot.T)) < 1e-12

    def test_zero_gauge_form_agrees_at_quadrature_order(self):
        # symmetric-exclusion principal value converges to the regularized
        # form at first order in h, realizing the vanishing p.v. identity
        diffs = []
        for n in (128, 256, 512):
            X = make_perturbed_circle(n, 1.0, [PerturbationMode(2, 0.05, 0.02)])
            d = np.abs(on_curve_velocity(X).values - on_curve_velocity_zero_gauge(X).values)
            diffs.append(np.max(d))
        assert diffs[1] < 2e-3
        ratios = [diffs[i] / diffs[i + 1] for i in range(2)]
        assert all(1.8 < r < 2.2 for r in ratios)


class TestOffCurveFlow:
    def test_circle_interior_point(self):
        u = off_curve_velocity(make_circle(256), np.array([0.0, 0.0]))
        assert np.max(np.abs(u)) < 1e-12

    def test_circle_exterior_point(self):
        u = off_curve_velocity(make_circle(256), np.array([5.0, 5.0]))
        assert np.max(np.abs(u)) < 1e-12

    def test_far_field_inverse_distance_decay(self):
        X = make_perturbed_circle(256, 1.0, [PerturbationMode(2, 0.1, 0.05, 0.2, 0.9)])
        d = np.array([1.0, 0.3])
        d /= np.linalg.norm(d)
        ratio = np.linalg.norm(off_curve_velocity(X, 200 * d)) / np.linalg.norm(
            off_curve_velocity(X, 100 * d)
        )
        assert 0.4 < ratio < 0.6

    def test_sample_coincidence_rejected(self):
        X = make_circle(64)
        with pytest.raises(OnCurvePointError):
            off_curve_velocity(X, X.x.values[3].copy())

    def test_pressure_at_circle_center(self):
        X = make_circle(256)
        p = pressure_at(X, np.array([0.0, 0.0]))
        assert abs(p - 1.0) < 1e-12
        # dense-quadrature oracle of the same integrand (constant 1/(2 pi))
        m = 100_000
        s = 2 * np.pi * np.arange(m) / m
        integrand = 1.0 / (2 * np.pi) * np.ones(m)
        assert abs(p - (2 * np.pi / m) * np.sum(integrand)) < 1e-12

    def test_pressure_far_field_decay(self):
        X = make_circle(256)
        assert abs(pressure_at(X, np.array([100.0, 0.0]))) < 1e-3

    def test_pressure_rotational_symmetry(self):
        X = make_circle(256)
        a = 1.7
        pa = pressure_at(X, np.array([a, 0.0]))
        pb = pressure_at(X, np.array([0.0, a]))
        assert abs(pa - pb) < 1e-12

    def test_pressure_on_curve_rejected(self):
        X = make_circle(64)
        with pytest.raises(OnCurvePointError):
            pressure_at(X, X.x.values[0].copy())

    def test_sample_flow_bundles_both(self):
        X = make_circle(128)
        fs = sample_flow(X, np.array([0.2, 0.1]))
        assert np.max(np.abs(fs.u)) < 1e-10
        assert abs(fs.p - 1.0) < 1e-8
        assert np.allclose(fs.location, [0.2, 0.1])

    def test_membrane_continuity_light(self):
        # joint-refinement behavior at moderate resolution; the acceptance
        # suite runs the N = 1024 version
        X = make_perturbed_circle(512, 1.0, [PerturbationMode(3, 0.05, 0.0)])
        u_on = on_curve_velocity(X)
        t = X.xp.values[0] / np.linalg.norm(X.xp.values[0])
        normal = np.array([-t[1], t[0]])
        gaps = []
        for d in (1e-1, 1e-2, 1e-3):
            gap = max(
                np.linalg.norm(off_curve_velocity(X, X.x.values[0] + sgn * d * normal) - u_on.values[0])
                for sgn in (+1.0, -1.0)
            )
            gaps.append(gap)
        assert gaps[0] > gaps[1] > gaps[2]


class TestDissipation:
    def test_circle_zero(self):
        assert abs(dissipation_rate(make_circle(256))) < 1e-12

    def test_nonnegative_on_test_curves(self, rng):
        for _ in range(5):
            X = random_smooth_curve(rng, n=128)
            assert dissipation_rate(X) >= -1e-10

    def test_quadratic_scaling_in_amplitude(self):
        # leading order of the dissipation is quadratic in the perturbation
        values = []
        for eps in (1e-2, 5e-3, 2.5e-3):
            X = make_perturbed_circle(256, 1.0, [PerturbationMode(2, eps, 0.0)])
            values.append(dissipation_rate(X))
        ratios = [values[i] / values[i + 1] for i in range(2)]
        assert all(abs(r - 4.0) < 0.05 for r in ratios)


class TestNonstiffForcing:
    def test_unit_circle_quarter_of_position(self):
        X = make_circle(256)
        g = nonstiff_forcing(X)
        assert np.max(np.abs(g.values - 0.25 * X.x.values)) < 1e-10

    def test_radius_scaling(self):
        X = make_circle(256, radius=2.0, center=(1.0, -1.0))
        g = nonstiff_forcing(X)
        s = X.s
        expected = 0.5 * np.stack([np.cos(s), np.sin(s)], axis=1)  # R/4 = 0.5, mean dropped
        assert np.max(np.abs(g.values - expected)) < 1e-10

    def test_splitting_identity(self, rng):
        X = random_smooth_curve(rng, n=128)
        u = on_curve_velocity(X)
        recomposed = -0.25 * fractional_laplacian_half(X.x).values + nonstiff_forcing(X, u).values
        assert np.max(np.abs(recomposed - u.values)) < 1e-14


class TestForcingDerivative:
    def test_diagonal_is_zero(self, rng):
        X = random_smooth_curve(rng, n=64)
        assert np.array_equal(forcing_derivative_integrand(X, 5, 5), np.zeros(2))

    def test_direct_form_rejects_diagonal(self, rng):
        X = random_smooth_curve(rng, n=64)
        with pytest.raises(ValueError, match="diagonal"):
            forcing_derivative_integrand_direct(X, 5, 5)

    def test_two_forms_agree_on_random_pairs(self, rng):
        X = random_smooth_curve(rng, n=256)
        worst = 0.0
        for _ in range(300):
            j, jp = rng.integers(0, 256, size=2)
            if j == jp:
                continue
            d = forcing_derivative_integrand(X, int(j), int(jp)) - forcing_derivative_integrand_direct(
                X, int(j), int(jp)
            )
            worst = max(worst, float(np.max(np.abs(d))))
        assert worst < 1e-10

    def test_circle_antipodal_pair(self):
        X = make_circle(256)
        a = forcing_derivative_integrand(X, 0, 128)
        b = forcing_derivative_integrand_direct(X, 0, 128)
        assert np.all(np.isfinite(a)) and np.all(np.isfinite(b))
        assert np.max(np.abs(a - b)) < 1e-12

    def test_quadrature_matches_spectral_derivative_unit_circle(self):
        X = make_circle(256)
        g = nonstiff_forcing(X)
        gap = forcing_derivative_quadrature(X).values - derivative(g, 1).values
        assert np.max(np.abs(gap)) < 1e-8

    def test_quadrature_matches_spectral_derivative_generic(self, rng):
        X = random_smooth_curve(rng, n=256)
        direct = derivative(nonstiff_forcing(X), 1).values
        quad = forcing_derivative_quadrature(X).values
        rel = np.sqrt(np.mean((direct - quad) ** 2) / np.mean(direct**2))
        assert rel < 1e-6

    def test_tau_factor_branch_crossing(self):
        # series and direct evaluation agree where the branch switches
        for tau in (1e-2, 1.0000001e-2, -1e-2):
            series = tau / 12.0 + tau**3 / 240.0 + tau**5 / 6048.0
            direct = (tau**2 - 4 * np.sin(tau / 2) ** 2) / (4 * tau * np.sin(tau / 2) ** 2)
            assert abs(series - direct) < 1e-12
            assert abs(float(_tau_factor(np.array([tau]))[0]) - direct) < 1e-12
