"""Shared fixtures and independent quadrature oracles."""

from __future__ import annotations

import numpy as np
import pytest

from ibstring import CurveState, GridField, PerturbationMode, make_perturbed_circle, well_stretched_constant


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def grid(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def random_band_limited(rng, n: int, kmax: int = 6, scale: float = 1.0, mean_zero: bool = False) -> GridField:
    """Random real field with content only in modes |k| <= kmax."""
    s = grid(n)
    vals = np.zeros((n, 2))
    k0 = 1 if mean_zero else 0
    for k in range(k0, kmax + 1):
        a = rng.normal(size=4) * scale
        vals[:, 0] += a[0] * np.cos(k * s) + (a[1] * np.sin(k * s) if k else 0.0)
        vals[:, 1] += a[2] * np.cos(k * s) + (a[3] * np.sin(k * s) if k else 0.0)
    return GridField(vals)


def random_smooth_curve(rng, n: int = 256, amp: float = 0.05, min_lambda: float = 0.3) -> CurveState:
    """Random well-stretched perturbed circle (modes 2..6), randomly posed."""
    from ibstring import make_circle

    while True:
        modes = [
            PerturbationMode(
                k,
                amp_x=rng.uniform(-amp, amp),
                amp_y=rng.uniform(-amp, amp),
                phase_x=rng.uniform(0, 2 * np.pi),
                phase_y=rng.uniform(0, 2 * np.pi),
            )
            for k in range(2, 7)
        ]
        theta = rng.uniform(0, 2 * np.pi)
        center = rng.uniform(-0.5, 0.5, size=2)
        pert = make_perturbed_circle(n, 1.0, modes).x.values - make_circle(n).x.values
        base = make_circle(n, 1.0, theta, center).x.values
        X = CurveState(GridField(base + pert))
        if well_stretched_constant(X) > min_lambda:
            return X


# ---------------------------------------------------------------------------
# principal-value quadrature oracles (independent of the FFT implementation)
#
# Symmetric-exclusion trapezoid of the singular kernels has an error exactly
# linear in 1/M per Fourier mode, so evaluating at M and 2M and extrapolating
# 2*Q(2M) - Q(M) recovers the principal value to rounding for band-limited
# fields. These pin the sign conventions.
# ---------------------------------------------------------------------------

def _pv_sum(kernel_fn, field_fn, targets: np.ndarray, m: int) -> np.ndarray:
    h = 2.0 * np.pi / m
    offsets = h * np.arange(1, m)  # symmetric exclusion of the singular node
    out = np.empty((len(targets), 2))
    for i, s0 in enumerate(targets):
        sp = s0 + offsets
        out[i] = h * np.sum(kernel_fn(s0, sp)[:, None] * field_fn(sp), axis=0)
    return out


def pv_half_laplacian(field_fn, targets: np.ndarray, m: int = 4096) -> np.ndarray:
    """(-Lap)^{1/2} via its torus kernel -(1/pi) (Y(s') - Y(s)) / (4 sin^2((s'-s)/2))."""
    vals = np.empty((len(targets), 2))
    vals2 = np.empty((len(targets), 2))
    for arr, mm in ((vals, m), (vals2, 2 * m)):
        for i, s0 in enumerate(targets):
            h = 2.0 * np.pi / mm
            sp = s0 + h * np.arange(1, mm)
            kernel = -1.0 / (4.0 * np.pi * np.sin((sp - s0) / 2.0) ** 2)
            arr[i] = h * np.sum(kernel[:, None] * (field_fn(sp) - field_fn(np.array([s0]))), axis=0)
    return 2.0 * vals2 - vals


def pv_hilbert(field_fn, targets: np.ndarray, m: int = 4096) -> np.ndarray:
    """Hilbert transform via (1/2pi) p.v. integral of cot((s-s')/2) Y(s')."""

    def kernel(s0, sp):
        return np.cos((s0 - sp) / 2.0) / np.sin((s0 - sp) / 2.0) / (2.0 * np.pi)

    return 2.0 * _pv_sum(kernel, field_fn, targets, 2 * m) - _pv_sum(kernel, field_fn, targets, m)
