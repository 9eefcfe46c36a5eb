"""Boundary-integral evaluations for the immersed string.

Velocity Green's function of steady 2-D Stokes flow, the regularized on-curve
velocity integrand, off-curve velocity/pressure, the energy dissipation rate,
the nonstiff forcing of the contour dynamics and the two algebraically
equivalent forms of its s-derivative integrand.

All on-curve integrals use the periodic trapezoid rule with the analytic
removable-singularity limit substituted on the diagonal (no point exclusion).
Off-curve evaluations closer than five grid spacings to the curve refine the
quadrature on a band-limited upsampling of the same curve; see README for the
accuracy envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curve import CurveState, DegenerateCurveError, diff_quotients, _wrap
from .spectral import GridField, fractional_laplacian_half

__all__ = [
    "FlowSample",
    "OnCurvePointError",
    "stokeslet",
    "pressure_kernel",
    "velocity_integrand",
    "on_curve_velocity",
    "on_curve_velocity_zero_gauge",
    "off_curve_velocity",
    "pressure_at",
    "sample_flow",
    "dissipation_rate",
    "nonstiff_forcing",
    "forcing_derivative_integrand",
    "forcing_derivative_integrand_direct",
    "forcing_derivative_quadrature",
]

_FOUR_PI = 4.0 * np.pi


class OnCurvePointError(ValueError):
    """Evaluation point coincides with a curve sample; use on_curve_velocity."""


@dataclass(frozen=True)
class FlowSample:
    """Velocity and pressure of the reconstructed Stokes flow at one point."""

    u: np.ndarray
    p: float
    location: np.ndarray


def stokeslet(x: np.ndarray) -> np.ndarray:
    """Velocity Green's function (1/4pi)(-ln|x| Id + x (x) x / |x|^2)."""
    x = np.asarray(x, dtype=float)
    r2 = float(x @ x)
    if r2 == 0.0:
        raise ValueError("stokeslet is singular at the origin")
    return (-0.5 * np.log(r2) * np.eye(2) + np.outer(x, x) / r2) / _FOUR_PI


def pressure_kernel(x: np.ndarray) -> np.ndarray:
    """Pressure Green's function x / (2 pi |x|^2)."""
    x = np.asarray(x, dtype=float)
    r2 = float(x @ x)
    if r2 == 0.0:
        raise ValueError("pressure kernel is singular at the origin")
    return x / (2.0 * np.pi * r2)


# ---------------------------------------------------------------------------
# on-curve velocity
# ---------------------------------------------------------------------------

def velocity_integrand(X: CurveState, j: int, jp: int) -> np.ndarray:
    """Regularized on-curve velocity integrand at the sample pair (j, j').

    Off the diagonal this is the chord-slope form
    (1/4pi)[(L.a)/|L|^2 M - (L.M)/|L|^2 a - (a.M)/|L|^2 L + 2(L.a)(L.M)/|L|^4 L]
    with a = X'(s'); on the diagonal its removable-singularity limit X''(s)/4pi.
    """
    n = X.n
    j, jp = j % n, jp % n
    if j == jp:
        return X.xpp.values[j] / _FOUR_PI
    q = diff_quotients(X, j, jp)
    a = X.xp.values[jp]
    L2 = float(q.L @ q.L)
    if L2 == 0.0:
        raise DegenerateCurveError(f"coincident samples at pair ({j}, {jp})")
    La = float(q.L @ a)
    LM = float(q.L @ q.M)
    aM = float(a @ q.M)
    term = (La / L2) * q.M - (LM / L2) * a - (aM / L2) * q.L + (2.0 * La * LM / L2**2) * q.L
    return term / _FOUR_PI


_TAU_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _tau_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Pair offset matrix tau[j, j'] in [-pi, pi) and its safe reciprocal.

    Depends only on the grid size, so it is cached (diagonal of the
    reciprocal holds 1.0 as a placeholder; callers overwrite the diagonal).
    """
    cached = _TAU_CACHE.get(n)
    if cached is None:
        s = 2.0 * np.pi * np.arange(n) / n
        tau = _wrap(s[None, :] - s[:, None])
        np.fill_diagonal(tau, 0.0)
        inv = tau.copy()
        np.fill_diagonal(inv, 1.0)
        inv = 1.0 / inv
        tau.flags.writeable = False
        inv.flags.writeable = False
        cached = (tau, inv)
        _TAU_CACHE[n] = cached
    return cached


def _pair_components(X: CurveState):
    """Component (N,N) arrays of the chord and derivative slopes L and M.

    Diagonal entries carry the analytic limits L = X', M = X''. Components
    are kept as separate float matrices: the pairwise kernels below are
    memory-bound, and this layout roughly halves their cost versus (N,N,2)
    stacking.
    """
    v, vp, vpp = X.x.values, X.xp.values, X.xpp.values
    n = X.n
    inv_tau = _tau_arrays(n)[1]
    idx = np.arange(n)
    Lx = (v[None, :, 0] - v[:, None, 0]) * inv_tau
    Ly = (v[None, :, 1] - v[:, None, 1]) * inv_tau
    Mx = (vp[None, :, 0] - vp[:, None, 0]) * inv_tau
    My = (vp[None, :, 1] - vp[:, None, 1]) * inv_tau
    Lx[idx, idx] = vp[:, 0]
    Ly[idx, idx] = vp[:, 1]
    Mx[idx, idx] = vpp[:, 0]
    My[idx, idx] = vpp[:, 1]
    L2 = Lx * Lx + Ly * Ly
    if float(L2.min()) <= 0.0:
        raise DegenerateCurveError("coincident samples: curve degenerate at grid resolution")
    return Lx, Ly, Mx, My, L2


def on_curve_velocity(X: CurveState) -> GridField:
    """String velocity u(X(s_j)) by periodic trapezoid over all samples.

    The integrand is smooth across the diagonal, so the rule is spectrally
    accurate; this is the full right-hand side of the contour dynamics.
    """
    Lx, Ly, Mx, My, L2 = _pair_components(X)
    vp, vpp = X.xp.values, X.xpp.values
    ax = vp[:, 0][None, :]
    ay = vp[:, 1][None, :]
    inv = 1.0 / L2
    La = (Lx * ax + Ly * ay) * inv
    LM = (Lx * Mx + Ly * My) * inv
    aM = (ax * Mx + ay * My) * inv
    c4 = 2.0 * La * LM
    ux = La * Mx - LM * ax - aM * Lx + c4 * Lx
    uy = La * My - LM * ay - aM * Ly + c4 * Ly
    idx = np.arange(X.n)
    ux[idx, idx] = vpp[:, 0]  # removable-singularity limit (X''/4pi after scaling)
    uy[idx, idx] = vpp[:, 1]
    u = X.h * np.stack([ux.sum(axis=1), uy.sum(axis=1)], axis=1) / _FOUR_PI
    return GridField(u)


def on_curve_velocity_zero_gauge(X: CurveState) -> GridField:
    """On-curve velocity in the zero-constant gauge, diagonal excluded.

    Integrand (1/4pi)[-|X'(s')|^2/|w|^2 + 2(w.X'(s'))^2/|w|^4] w with
    w = X(s') - X(s). Symmetric exclusion of the principal value leaves an
    O(h) quadrature error; agreement with on_curve_velocity under refinement
    realizes the vanishing of the excluded principal-value kernel integral.
    """
    v, vp = X.x.values, X.xp.values
    n = X.n
    w = v[None, :, :] - v[:, None, :]
    r2 = np.einsum("ijk,ijk->ij", w, w)
    np.fill_diagonal(r2, 1.0)
    a2 = np.einsum("ij,ij->i", vp, vp)
    wa = np.einsum("ijk,jk->ij", w, vp)
    coeff = -a2[None, :] / r2 + 2.0 * wa**2 / r2**2
    np.fill_diagonal(coeff, 0.0)
    u = X.h * np.einsum("ij,ijk->ik", coeff, w) / _FOUR_PI
    return GridField(u)


# ---------------------------------------------------------------------------
# off-curve flow
# ---------------------------------------------------------------------------

def _nearest_sample(X: CurveState, x: np.ndarray) -> tuple[int, float]:
    d2 = np.einsum("ij,ij->i", X.x.values - x[None, :], X.x.values - x[None, :])
    jx = int(np.argmin(d2))  # ties resolve to the lowest index
    return jx, float(np.sqrt(d2[jx]))


def _quadrature_samples(X: CurveState, dist: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Curve samples to integrate against a point at the given distance.

    Within five grid spacings of the curve the trapezoid rule needs roughly
    M*dist >= 32 sample points to push the aliasing error of the near-peaked
    integrand to machine level, so the curve is refined by zero-padded FFT
    (factor capped at 64).
    """
    factor = 1
    if dist < 5.0 * X.h:
        while factor < 64 and factor * X.n * dist < 32.0:
            factor *= 2
    xs, xps = X.upsampled(factor)
    return xs, xps, 2.0 * np.pi / (X.n * factor)


def off_curve_velocity(X: CurveState, x: np.ndarray) -> np.ndarray:
    """Flow velocity at a point off the curve.

    Trapezoid of -d/ds'[G(x - X(s'))](X'(s') - X'(s_x)), with s_x the nearest
    curve sample; the constant X'(s_x) is analytically irrelevant and only
    conditions the quadrature.
    """
    x = np.asarray(x, dtype=float)
    jx, dist = _nearest_sample(X, x)
    if dist == 0.0:
        raise OnCurvePointError("point coincides with a curve sample; use on_curve_velocity")
    xs, xps, h = _quadrature_samples(X, dist)
    w = xs - x[None, :]
    r2 = np.einsum("ij,ij->i", w, w)
    a = xps
    d = a - X.xp.values[jx][None, :]
    wa = np.einsum("ij,ij->i", w, a)
    wd = np.einsum("ij,ij->i", w, d)
    ad = np.einsum("ij,ij->i", a, d)
    term = (wa / r2)[:, None] * d - (wd / r2)[:, None] * a - (ad / r2)[:, None] * w
    term += (2.0 * wa * wd / r2**2)[:, None] * w
    return h * term.sum(axis=0) / _FOUR_PI


def pressure_at(X: CurveState, x: np.ndarray) -> float:
    """Pressure at a point off the curve, in the zero-constant gauge.

    (1/2pi) * integral of |X'|^2/|X-x|^2 - 2((X-x).X')^2/|X-x|^4. Only
    pressure differences are physical; the additive constant is fixed to 0.
    """
    x = np.asarray(x, dtype=float)
    _, dist = _nearest_sample(X, x)
    if dist == 0.0:
        raise OnCurvePointError("pressure jumps across the membrane; evaluate off the curve")
    xs, xps, h = _quadrature_samples(X, dist)
    w = xs - x[None, :]
    r2 = np.einsum("ij,ij->i", w, w)
    a2 = np.einsum("ij,ij->i", xps, xps)
    wa = np.einsum("ij,ij->i", w, xps)
    return float(h * np.sum(a2 / r2 - 2.0 * wa**2 / r2**2) / (2.0 * np.pi))


def sample_flow(X: CurveState, x: np.ndarray) -> FlowSample:
    """Velocity and pressure at one off-curve point."""
    x = np.asarray(x, dtype=float)
    return FlowSample(u=off_curve_velocity(X, x), p=pressure_at(X, x), location=x.copy())


# ---------------------------------------------------------------------------
# dissipation and the nonstiff forcing
# ---------------------------------------------------------------------------

def dissipation_rate(X: CurveState, u: GridField | None = None) -> float:
    """Viscous dissipation of the reconstructed flow, as the boundary integral
    of u(X(s)) . X''(s).

    Equals the spatial integral of |grad u|^2, so it is nonnegative up to
    quadrature error. Pass u to reuse an already computed on-curve velocity.
    """
    if u is None:
        u = on_curve_velocity(X)
    products = np.einsum("ij,ij->i", u.values, X.xpp.values)
    return X.h * math.fsum(products.tolist())


def nonstiff_forcing(X: CurveState, u: GridField | None = None) -> GridField:
    """Nonstiff part of the string velocity: u + (1/4)(-Lap)^{1/2} X.

    The contour dynamics splits as X_t = -(1/4)(-Lap)^{1/2} X + this term;
    the identity u = -(1/4)(-Lap)^{1/2}X + nonstiff_forcing(X) holds by
    construction.
    """
    if u is None:
        u = on_curve_velocity(X)
    return GridField(u.values + 0.25 * fractional_laplacian_half(X.x).values)


# ---------------------------------------------------------------------------
# derivative of the nonstiff forcing: two forms of the integrand
# ---------------------------------------------------------------------------

def _tau_factor(tau: np.ndarray) -> np.ndarray:
    """(tau^2 - 4 sin^2(tau/2)) / (4 tau sin^2(tau/2)) with a series branch.

    Below |tau| = 1e-2 the direct form loses ~6 digits to cancellation; the
    Taylor series tau/12 + tau^3/240 + tau^5/6048 is exact to <1e-12 there.
    """
    tau = np.asarray(tau, dtype=float)
    out = np.empty_like(tau)
    small = np.abs(tau) < 1e-2
    ts = tau[small]
    out[small] = ts / 12.0 + ts**3 / 240.0 + ts**5 / 6048.0
    tl = tau[~small]
    sin2 = np.sin(tl / 2.0) ** 2
    out[~small] = (tl**2 - 4.0 * sin2) / (4.0 * tl * sin2)
    return out


def forcing_derivative_integrand(X: CurveState, j: int, jp: int) -> np.ndarray:
    """Simplified integrand of the s-derivative of the nonstiff forcing.

    Closed form in the difference quotients (L, M, N); its diagonal limit is
    zero, which is returned directly for j = j'.
    """
    n = X.n
    j, jp = j % n, jp % n
    if j == jp:
        return np.zeros(2)
    q = diff_quotients(X, j, jp)
    a = X.xp.values[jp]
    b = X.xp.values[j]
    L, M, N_ = q.L, q.M, q.N
    L2 = float(L @ L)
    if L2 == 0.0:
        raise DegenerateCurveError(f"coincident samples at pair ({j}, {jp})")
    LM = float(L @ M)
    LN = float(L @ N_)
    La = float(L @ a)
    Lb = float(L @ b)
    NM = float(N_ @ M)
    Na = float(N_ @ a)
    MM = float(M @ M)
    f = float(_tau_factor(np.array([q.tau]))[0])
    c_M = float((b - L) @ N_) / L2 - 2.0 * LN * Lb / L2**2 - f
    c_b = (MM - 2.0 * NM) / L2 + 2.0 * LN * LM / L2**2
    c_L = (
        2.0 * LM * (LM - LN) * Lb / L2**3
        + 2.0 * (NM - MM) * Lb / L2**2
        - 6.0 * LM * La * LN / L2**3
        + 2.0 * NM * La / L2**2
        + 2.0 * LM * Na / L2**2
    )
    c_N = 2.0 * LM * La / L2**2
    return (c_M * M + c_b * b + c_L * L + c_N * N_) / _FOUR_PI


def forcing_derivative_integrand_direct(X: CurveState, j: int, jp: int) -> np.ndarray:
    """Unsimplified form: chain-rule expansion of the mixed derivative of the
    log kernel, minus the flat-space counterterm Id/(16 pi sin^2(tau/2)),
    applied to X'(s') - X'(s).

    The removable singularity is not implemented here; the diagonal is
    rejected.
    """
    n = X.n
    j, jp = j % n, jp % n
    if j == jp:
        raise ValueError("diagonal pair: the direct form has no implemented limit")
    v, vp = X.x.values, X.xp.values
    w = v[jp] - v[j]
    a = vp[jp]
    b = vp[j]
    d = a - b
    r2 = float(w @ w)
    if r2 == 0.0:
        raise DegenerateCurveError(f"coincident samples at pair ({j}, {jp})")
    wa = float(w @ a)
    wb = float(w @ b)
    wd = float(w @ d)
    ab = float(a @ b)
    ad = float(a @ d)
    bd = float(b @ d)
    kernel_part = (
        -ab * d / r2
        + 2.0 * wa * wb * d / r2**2
        + bd * a / r2
        + ad * b / r2
        - 2.0 * wb * (wd * a + ad * w) / r2**2
        - 2.0 * ab * wd * w / r2**2
        - 2.0 * wa * (wd * b + bd * w) / r2**2
        + 8.0 * wa * wb * wd * w / r2**3
    ) / _FOUR_PI
    tau = float(_wrap((jp - j) * X.h))
    counterterm = d / (16.0 * np.pi * np.sin(tau / 2.0) ** 2)
    return kernel_part - counterterm


def forcing_derivative_quadrature(X: CurveState) -> GridField:
    """Trapezoid of the simplified integrand: the s-derivative of the forcing.

    The integrand is smooth on the whole torus (zero diagonal limit), so the
    rule is spectrally accurate; cross-checks the spectral derivative of
    nonstiff_forcing.
    """
    Lx, Ly, Mx, My, L2 = _pair_components(X)
    n = X.n
    vp = X.xp.values
    tau, inv_tau = _tau_arrays(n)
    ax = vp[:, 0][None, :]
    ay = vp[:, 1][None, :]
    bx = vp[:, 0][:, None]
    by = vp[:, 1][:, None]
    # N = (L - X'(s))/tau off the diagonal (diagonal is overwritten to zero)
    Nx = (Lx - bx) * inv_tau
    Ny = (Ly - by) * inv_tau
    inv = 1.0 / L2
    LM = Lx * Mx + Ly * My
    LN = Lx * Nx + Ly * Ny
    La = Lx * ax + Ly * ay
    Lb = Lx * bx + Ly * by
    NM = Nx * Mx + Ny * My
    Na = Nx * ax + Ny * ay
    MM = Mx * Mx + My * My
    bLN = (bx - Lx) * Nx + (by - Ly) * Ny
    f = _tau_factor(tau)
    c_M = bLN * inv - 2.0 * LN * Lb * inv**2 - f
    c_b = (MM - 2.0 * NM) * inv + 2.0 * LN * LM * inv**2
    c_L = (
        2.0 * LM * (LM - LN) * Lb * inv**3
        + 2.0 * (NM - MM) * Lb * inv**2
        - 6.0 * LM * La * LN * inv**3
        + 2.0 * NM * La * inv**2
        + 2.0 * LM * Na * inv**2
    )
    c_N = 2.0 * LM * La * inv**2
    gx = c_M * Mx + c_b * bx + c_L * Lx + c_N * Nx
    gy = c_M * My + c_b * by + c_L * Ly + c_N * Ny
    idx = np.arange(n)
    gx[idx, idx] = 0.0  # continuous limit of the integrand at the diagonal
    gy[idx, idx] = 0.0
    return GridField(X.h * np.stack([gx.sum(axis=1), gy.sum(axis=1)], axis=1) / _FOUR_PI)
