"""Closest-equilibrium fit, energy sandwich, linearized operator and spectrum."""

import numpy as np
import pytest

from ibstring import (
    CurveState,
    GridField,
    PerturbationMode,
    closest_equilibrium,
    first_order_residual,
    h1_energy_equivalence,
    linearized_velocity,
    make_circle,
    make_perturbed_circle,
    measure_decay_rate,
    mode_block,
    on_curve_velocity,
    sobolev_seminorm,
)
from ibstring.equilibrium import deviation_in_unit_gauge, fit_distance

from conftest import grid, random_band_limited, random_smooth_curve


def theta_grid_search(X: CurveState, fit, count=100_000) -> float:
    """Brute-force minimizer of the discrete L2 objective over theta."""
    thetas = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
    s = X.s
    dev = X.x.values - fit.x_star[None, :]
    best_theta, best_val = 0.0, np.inf
    # chunked evaluation of sum_j |dev_j - R(cos(s+th), sin(s+th))|^2
    for chunk in np.array_split(thetas, 20):
        cos_t = np.cos(s[None, :] + chunk[:, None])
        sin_t = np.sin(s[None, :] + chunk[:, None])
        obj = np.sum(
            (dev[None, :, 0] - fit.radius * cos_t) ** 2
            + (dev[None, :, 1] - fit.radius * sin_t) ** 2,
            axis=1,
        )
        i = int(np.argmin(obj))
        if obj[i] < best_val:
            best_val, best_theta = float(obj[i]), float(chunk[i])
    return best_theta


def angle_gap(a: float, b: float) -> float:
    return abs((a - b + np.pi) % (2 * np.pi) - np.pi)


class TestClosestEquilibrium:
    def test_fixed_point_of_family(self):
        Y = make_circle(128, 2.0, 0.7, (1.0, -1.0))
        fit = closest_equilibrium(Y)
        assert angle_gap(fit.theta_star, 0.7) < 1e-12
        assert np.allclose(fit.x_star, [1.0, -1.0], atol=1e-13)
        assert abs(fit.radius - 2.0) < 1e-12
        assert fit_distance(Y, fit, 0.0) < 1e-12
        assert not fit.degenerate

    def test_mode_three_perturbation_leaves_fit(self):
        base = closest_equilibrium(make_circle(128, 1.0, 0.4, (0.2, 0.3)))
        pert = make_perturbed_circle(128, 1.0, [PerturbationMode(3, 0.03, 0.01)])
        shifted = CurveState(
            GridField(
                pert.x.values
                - make_circle(128).x.values
                + make_circle(128, 1.0, 0.4, (0.2, 0.3)).x.values
            )
        )
        fit = closest_equilibrium(shifted)
        assert angle_gap(fit.theta_star, base.theta_star) < 1e-10
        assert np.allclose(fit.x_star, base.x_star, atol=1e-12)

    def test_matches_grid_search(self, rng):
        for _ in range(3):
            Y = random_smooth_curve(rng, n=128)
            # extra mode-1 content moves the optimal phase off the base angle
            bump = 0.02 * np.stack([np.cos(grid(128) + 0.4), np.sin(grid(128) - 0.7)], axis=1)
            Y = CurveState(GridField(Y.x.values + bump))
            fit = closest_equilibrium(Y)
            assert angle_gap(fit.theta_star, theta_grid_search(Y, fit)) < 1e-4

    def test_degenerate_flag(self):
        # circle content removed: only k = 0, 2 modes remain
        s = grid(128)
        vals = np.stack([0.1 * np.cos(2 * s), 0.1 * np.sin(2 * s)], axis=1)
        vals += np.array([0.5, 0.5])
        fit = closest_equilibrium(CurveState(GridField(vals)))
        assert fit.degenerate
        assert fit.theta_star == 0.0

    def test_idempotent(self, rng):
        Y = random_smooth_curve(rng, n=128)
        fit = closest_equilibrium(Y)
        refit = closest_equilibrium(CurveState(fit.x_star_samples))
        assert angle_gap(refit.theta_star, fit.theta_star) < 1e-10
        assert np.allclose(refit.x_star, fit.x_star, atol=1e-12)
        assert abs(refit.radius - fit.radius) < 1e-12
        assert fit_distance(CurveState(fit.x_star_samples), refit, 0.0) < 1e-10

    def test_phase_optimal_in_every_order(self, rng):
        # the L2-optimal phase also minimizes each homogeneous seminorm
        Y = random_smooth_curve(rng, n=128)
        fit = closest_equilibrium(Y)
        for order in (0.0, 1.0, 2.5):
            d_star = fit_distance(Y, fit, order)
            for theta in np.linspace(0, 2 * np.pi, 37):
                other = make_circle(128, fit.radius, theta, fit.x_star)
                d = sobolev_seminorm(GridField(Y.x.values - other.x.values), order)
                assert d_star <= d + 1e-12


class TestFirstOrderResidual:
    def test_circle_zero(self):
        Y = make_circle(128)
        assert abs(first_order_residual(Y, closest_equilibrium(Y))) < 1e-14

    def test_fit_residual_small(self, rng):
        for _ in range(5):
            Y = random_smooth_curve(rng, n=128)
            assert abs(first_order_residual(Y, closest_equilibrium(Y))) < 1e-10

    def test_misfit_detected(self, rng):
        Y = random_smooth_curve(rng, n=128)
        fit = closest_equilibrium(Y)
        wrong = closest_equilibrium(make_circle(128, fit.radius, fit.theta_star + 0.1, fit.x_star))
        assert abs(first_order_residual(Y, wrong)) > 1e-4


class TestEnergySandwich:
    def test_circle_triple_is_zero(self):
        lhs, mid, rhs = h1_energy_equivalence(make_circle(128))
        assert max(abs(lhs), abs(mid), abs(rhs)) < 1e-12

    def test_mode_two_strict(self):
        Y = make_perturbed_circle(128, 1.0, [PerturbationMode(2, 1e-2, 0.0)])
        lhs, mid, rhs = h1_energy_equivalence(Y)
        assert lhs < mid < rhs
        assert lhs > 0

    def test_random_ensemble(self, rng):
        for _ in range(20):
            Y = random_smooth_curve(rng, n=128)
            lhs, mid, rhs = h1_energy_equivalence(Y)
            assert lhs <= mid + 1e-12
            assert mid <= rhs + 1e-12


class TestLinearizedVelocity:
    def test_constant_maps_to_zero(self):
        D = GridField(np.full((64, 2), 1.3))
        assert np.max(np.abs(linearized_velocity(D).values)) < 1e-14

    def test_neutral_modes_in_kernel(self):
        s = grid(64)
        # rotation generator of the circle family and the two translations
        generators = [
            np.stack([-np.sin(s), np.cos(s)], axis=1),
            np.stack([np.ones(64), np.zeros(64)], axis=1),
            np.stack([np.zeros(64), np.ones(64)], axis=1),
        ]
        for gen in generators:
            out = linearized_velocity(GridField(gen))
            assert np.max(np.abs(out.values)) < 1e-13

    def test_single_mode_matches_block(self, rng):
        n = 64
        s = grid(n)
        for k in (1, 2, 5):
            amps = rng.normal(size=2) + 1j * rng.normal(size=2)
            coeffs = np.zeros((n, 2), dtype=complex)
            coeffs[k] = amps
            coeffs[-k] = np.conj(amps)
            vals = np.real(np.fft.ifft(coeffs * n, axis=0))
            out = linearized_velocity(GridField(vals))
            out_hat = np.fft.fft(out.values, axis=0) / n
            expected = mode_block(k).block @ amps
            assert np.max(np.abs(out_hat[k] - expected)) < 1e-13

    def test_output_mean_zero(self, rng):
        D = random_band_limited(rng, 64, kmax=10)
        out = linearized_velocity(D)
        assert np.max(np.abs(out.values.mean(axis=0))) < 1e-14

    def test_richardson_against_nonlinear(self, rng):
        D = random_band_limited(rng, 256, kmax=6, scale=0.2)
        LD = linearized_velocity(D).values
        circle = make_circle(256)
        errs = []
        for eps in (1e-2, 5e-3, 2.5e-3):
            X = CurveState(GridField(circle.x.values + eps * D.values))
            u = on_curve_velocity(X).values
            errs.append(np.max(np.abs(u - eps * LD)))
        slope = np.log(errs[0] / errs[2]) / np.log(4.0)
        assert slope >= 1.9

    def test_unit_gauge_deviation(self):
        Y = make_circle(128, 2.0, 0.9, (3.0, -1.0))
        fit = closest_equilibrium(Y)
        dev = deviation_in_unit_gauge(Y, fit)
        assert np.max(np.abs(dev.values)) < 1e-12


class TestModeBlock:
    def test_zero_mode(self):
        blk = mode_block(0)
        assert np.max(np.abs(blk.block)) == 0.0
        assert blk.eigenvalues == (0.0, 0.0)

    def test_mode_one(self):
        assert mode_block(1).eigenvalues == (-0.5, 0.0)

    def test_mode_two(self):
        assert mode_block(2).eigenvalues == (-0.75, -0.25)

    def test_hermitian_and_eigen_consistency(self):
        for k in (-3, -1, 0, 1, 2, 7):
            blk = mode_block(k)
            assert np.allclose(blk.block, blk.block.conj().T)
            eig = np.sort(np.linalg.eigvalsh(blk.block))
            assert np.allclose(eig, blk.eigenvalues, atol=1e-14)


class TestDecayRate:
    def test_synthetic_exponential(self):
        t = np.linspace(0, 10, 101)
        v = 3.7 * np.exp(-0.25 * t)
        assert abs(measure_decay_rate(t, v, (2.0, 8.0)) - 0.25) < 1e-10

    def test_nonpositive_rejected(self):
        t = np.linspace(0, 1, 11)
        v = np.linspace(1, -0.1, 11)
        with pytest.raises(ValueError, match="positive"):
            measure_decay_rate(t, v, (0.0, 1.0))

    def test_window_too_small(self):
        with pytest.raises(ValueError, match="fewer than two"):
            measure_decay_rate([0.0, 1.0], [1.0, 0.5], (2.0, 3.0))
