"""Closest uniformly-parameterized circle and the linearized dynamics near it.

The closest equilibrium of a configuration Y is the circle with Y's enclosed
area, centered at Y's mean, with its rotation phase chosen to minimize the L2
distance. In Fourier variables only the k = 0, +-1 coefficients of Y enter
the fit, so the phase has the closed form arg(c) with c built from the k = +1
coefficient; the same phase is optimal in every homogeneous Sobolev norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .curve import CurveState, effective_radius, make_circle
from .spectral import GridField, sobolev_seminorm, to_spectral

__all__ = [
    "EquilibriumFit",
    "ModeBlock",
    "closest_equilibrium",
    "first_order_residual",
    "h1_energy_equivalence",
    "deviation_in_unit_gauge",
    "linearized_velocity",
    "mode_block",
    "measure_decay_rate",
    "fit_distance",
]


@dataclass(frozen=True)
class EquilibriumFit:
    """Best-fit circle parameters and its samples on the source grid.

    degenerate is set when the configuration has no k = +-1 content, in which
    case the rotation phase is conventionally 0.
    """

    theta_star: float
    x_star: np.ndarray
    radius: float
    x_star_samples: GridField
    degenerate: bool = False


def closest_equilibrium(Y: CurveState) -> EquilibriumFit:
    """Fit the closest equilibrium circle to a positively oriented curve."""
    radius = effective_radius(Y)
    coeffs = to_spectral(Y.x).coeffs
    x_star = np.real(coeffs[0])
    c = complex(coeffs[1, 0] + 1j * coeffs[1, 1])
    degenerate = abs(c) < 1e-12 * radius
    theta_star = 0.0 if degenerate else float(np.angle(c) % (2.0 * np.pi))
    if 2.0 * np.pi - theta_star < 1e-9:  # keep the wrap point stable at 0
        theta_star = 0.0
    samples = make_circle(Y.n, radius, theta_star, x_star).x
    return EquilibriumFit(
        theta_star=theta_star,
        x_star=x_star,
        radius=radius,
        x_star_samples=samples,
        degenerate=degenerate,
    )


def first_order_residual(Y: CurveState, fit: EquilibriumFit) -> float:
    """Stationarity of the fitted phase: trapezoid of (Y - Y*) . dY*/dtheta.

    Vanishes (to rounding) for fits produced by closest_equilibrium, which
    minimize the same discrete objective exactly.
    """
    s = Y.s
    tangent = fit.radius * np.stack(
        [-np.sin(s + fit.theta_star), np.cos(s + fit.theta_star)], axis=1
    )
    dev = Y.x.values - fit.x_star_samples.values
    return Y.h * math.fsum(np.einsum("ij,ij->i", dev, tangent).tolist())


def h1_energy_equivalence(Y: CurveState) -> tuple[float, float, float]:
    """The three quantities of the energy / H1-distance sandwich.

    Returns (half the excess energy-norm, squared H1 distance to the fit,
    four times the excess); the middle term is bounded by the outer two.
    """
    fit = closest_equilibrium(Y)
    excess = sobolev_seminorm(Y.x, 1.0) ** 2 - sobolev_seminorm(fit.x_star_samples, 1.0) ** 2
    dist_sq = sobolev_seminorm(GridField(Y.x.values - fit.x_star_samples.values), 1.0) ** 2
    return 0.5 * excess, dist_sq, 4.0 * excess


def fit_distance(Y: CurveState, fit: EquilibriumFit, order: float) -> float:
    """Homogeneous Sobolev distance between Y and its fitted equilibrium."""
    return sobolev_seminorm(GridField(Y.x.values - fit.x_star_samples.values), order)


def deviation_in_unit_gauge(Y: CurveState, fit: EquilibriumFit) -> GridField:
    """Deviation from the fitted circle mapped to the unit-circle gauge.

    Translates by -x*, rotates by -theta* and rescales by 1/R, so the
    linearized operator (which assumes the unit circle) applies; decay rates
    are invariant under this normalization.
    """
    ct, st = np.cos(fit.theta_star), np.sin(fit.theta_star)
    rot = np.array([[ct, st], [-st, ct]])
    shifted = (Y.x.values - fit.x_star[None, :]) @ rot.T / fit.radius
    s = Y.s
    unit_circle = np.stack([np.cos(s), np.sin(s)], axis=1)
    return GridField(shifted - unit_circle)


def linearized_velocity(D: GridField) -> GridField:
    """First variation of the string velocity about the unit circle.

    Acts per Fourier mode as the 2x2 block -(1/4)[[|k|, -i sgn k], [i sgn k, |k|]]
    (equivalently -(1/4) J HD - (1/4) H D' with J the quarter-turn matrix);
    the output always has zero mean.
    """
    n = D.n
    c = np.fft.fft(D.values, axis=0) / n
    k = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    absk = np.abs(k).astype(float)
    sigma = np.sign(k).astype(float)
    sigma[n // 2] = 0.0  # Hilbert part undefined at Nyquist; zeroed
    out = np.empty_like(c)
    out[:, 0] = -0.25 * (absk * c[:, 0] - 1j * sigma * c[:, 1])
    out[:, 1] = -0.25 * (1j * sigma * c[:, 0] + absk * c[:, 1])
    return GridField(np.real(np.fft.ifft(out * n, axis=0)))


@dataclass(frozen=True)
class ModeBlock:
    """Per-mode 2x2 block of the linearized dynamics with its eigenvalues.

    eigenvalues = (more negative, less negative); for |k| >= 1 they are
    -(|k|+1)/4 and -(|k|-1)/4, so k = +-1 carries the rotation/translation
    neutral directions and |k| = 2 sets the slowest decaying rate 1/4.
    """

    k: int
    block: np.ndarray
    eigenvalues: tuple[float, float]


def mode_block(k: int) -> ModeBlock:
    """Fourier block of the linearized velocity at integer wavenumber k."""
    sigma = float(np.sign(k))
    absk = float(abs(k))
    block = -0.25 * np.array([[absk, -1j * sigma], [1j * sigma, absk]], dtype=complex)
    block.flags.writeable = False
    # + 0.0 normalizes -0.0 away for the neutral eigenvalues
    eig = (-(absk + abs(sigma)) / 4.0 + 0.0, -(absk - abs(sigma)) / 4.0 + 0.0)
    return ModeBlock(k=int(k), block=block, eigenvalues=eig)


def measure_decay_rate(
    times: Sequence[float],
    values: Sequence[float],
    window: tuple[float, float],
) -> float:
    """Exponential decay rate of a positive diagnostic over a time window.

    Least-squares slope of log(values) against time; returns the positive
    rate alpha for values ~ c e^{-alpha t}.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    mask = (t >= window[0]) & (t <= window[1])
    if mask.sum() < 2:
        raise ValueError(f"window {window} selects fewer than two samples")
    v_win = v[mask]
    if np.any(v_win <= 0):
        raise ValueError("decay fit requires positive values on the window")
    slope = np.polyfit(t[mask], np.log(v_win), 1)[0]
    return float(-slope)
