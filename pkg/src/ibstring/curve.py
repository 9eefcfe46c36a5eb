"""Closed-string configurations and their geometry.

A CurveState holds N uniform samples of a closed planar curve X on the torus
together with its first two spectral derivatives. Geometry helpers: chord /
derivative difference quotients, the well-stretched constant, enclosed area,
effective radius and the elastic (stretching) energy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .spectral import GridField, derivative, sobolev_seminorm

__all__ = [
    "CurveState",
    "DiffQuotients",
    "PerturbationMode",
    "OrientationError",
    "DegenerateCurveError",
    "diff_quotients",
    "well_stretched_constant",
    "enclosed_area",
    "effective_radius",
    "elastic_energy",
    "make_circle",
    "make_perturbed_circle",
    "make_reparam_circle",
]


class OrientationError(ValueError):
    """Enclosed area came out nonpositive: reversed or self-intersecting curve."""


class DegenerateCurveError(ValueError):
    """Two samples coincide (or a chord slope vanished) at grid resolution."""


@dataclass(frozen=True)
class CurveState:
    """Sampled string configuration with cached spectral derivatives."""

    x: GridField
    xp: GridField = field(init=False, repr=False)   # X'
    xpp: GridField = field(init=False, repr=False)  # X''

    def __post_init__(self) -> None:
        object.__setattr__(self, "xp", derivative(self.x, 1))
        object.__setattr__(self, "xpp", derivative(self.x, 2))
        # memo for band-limited upsamplings, keyed by factor (pure refinement)
        object.__setattr__(self, "_upsampled", {})

    @property
    def n(self) -> int:
        return self.x.n

    @property
    def h(self) -> float:
        return self.x.h

    @property
    def s(self) -> np.ndarray:
        return self.x.s

    def upsampled(self, factor: int) -> tuple[np.ndarray, np.ndarray]:
        """Samples (X, X') on a factor-times finer grid via zero-padded FFT.

        Exact for the band-limited curve the samples define; used by near-curve
        quadrature. Returns arrays of shape (factor*N, 2).
        """
        if factor == 1:
            return self.x.values, self.xp.values
        cached = self._upsampled.get(factor)
        if cached is None:
            cached = (_zero_pad(self.x.values, factor), _zero_pad(self.xp.values, factor))
            self._upsampled[factor] = cached
        return cached


def _zero_pad(values: np.ndarray, factor: int) -> np.ndarray:
    n = values.shape[0]
    m = n * factor
    c = np.fft.fft(values, axis=0) / n
    cm = np.zeros((m, 2), dtype=complex)
    half = n // 2
    cm[:half] = c[:half]
    cm[m - half:] = c[half:]
    out = np.real(np.fft.ifft(cm * m, axis=0))
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class DiffQuotients:
    """Chord and derivative slopes of a sample pair.

    For offset tau = s' - s in [-pi, pi), L = (X(s')-X(s))/tau,
    M = (X'(s')-X'(s))/tau, N = (L - X'(s))/tau; the diagonal values are
    L = X'(s), M = X''(s), N = X''(s)/2.
    """

    L: np.ndarray
    M: np.ndarray
    N: np.ndarray
    tau: float


def _wrap(offset: np.ndarray | float):
    """Wrap a torus offset into [-pi, pi)."""
    return (offset + np.pi) % (2.0 * np.pi) - np.pi


def diff_quotients(X: CurveState, j: int, jp: int) -> DiffQuotients:
    """Difference quotients (L, M, N) for the sample pair (j, j')."""
    n = X.n
    j, jp = j % n, jp % n
    if j == jp:
        return DiffQuotients(
            L=X.xp.values[j].copy(),
            M=X.xpp.values[j].copy(),
            N=0.5 * X.xpp.values[j],
            tau=0.0,
        )
    tau = float(_wrap((jp - j) * X.h))
    L = (X.x.values[jp] - X.x.values[j]) / tau
    M = (X.xp.values[jp] - X.xp.values[j]) / tau
    N = (L - X.xp.values[j]) / tau
    return DiffQuotients(L=L, M=M, N=N, tau=tau)


_TORUS_CACHE: dict[int, np.ndarray] = {}


def _inv_torus_sq(n: int) -> np.ndarray:
    """1/torus-distance^2 between sample pairs, 0 on the diagonal (cached)."""
    cached = _TORUS_CACHE.get(n)
    if cached is None:
        idx = np.arange(n)
        sep = np.abs(idx[None, :] - idx[:, None])
        torus = np.minimum(sep, n - sep) * (2.0 * np.pi / n)
        np.fill_diagonal(torus, np.inf)
        cached = 1.0 / torus**2
        cached.flags.writeable = False
        _TORUS_CACHE[n] = cached
    return cached


def well_stretched_constant(X: CurveState) -> float:
    """Smallest chord-to-torus-distance ratio over all distinct sample pairs.

    Positive for non-self-intersecting configurations; values near zero flag
    degeneracy at grid resolution.
    """
    v = X.x.values
    dx = v[None, :, 0] - v[:, None, 0]
    dy = v[None, :, 1] - v[:, None, 1]
    ratio_sq = (dx * dx + dy * dy) * _inv_torus_sq(X.n)
    np.fill_diagonal(ratio_sq, np.inf)
    return float(np.sqrt(ratio_sq.min()))


def enclosed_area(X: CurveState) -> float:
    """Signed enclosed area (1/2) * integral of X x X' via trapezoid rule.

    Raises OrientationError when nonpositive (curve must be positively
    oriented and embedded at grid resolution).
    """
    v, vp = X.x.values, X.xp.values
    cross = v[:, 0] * vp[:, 1] - v[:, 1] * vp[:, 0]
    area = 0.5 * X.h * float(np.sum(cross))
    if area <= 0:
        raise OrientationError(f"nonpositive enclosed area {area:g}")
    return area


def effective_radius(X: CurveState) -> float:
    """Radius of the disk with the same enclosed area."""
    return float(np.sqrt(enclosed_area(X) / np.pi))


def elastic_energy(X: CurveState) -> float:
    """Hookean stretching energy (1/2) * ||X'||_{L2}^2."""
    return 0.5 * sobolev_seminorm(X.x, 1.0) ** 2


def make_circle(
    n: int,
    radius: float = 1.0,
    theta: float = 0.0,
    center: Sequence[float] = (0.0, 0.0),
) -> CurveState:
    """Uniformly parameterized circle (R cos(s+theta), R sin(s+theta)) + center."""
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    s = 2.0 * np.pi * np.arange(n) / n
    x = np.stack(
        [radius * np.cos(s + theta) + center[0], radius * np.sin(s + theta) + center[1]],
        axis=1,
    )
    return CurveState(GridField(x))


@dataclass(frozen=True)
class PerturbationMode:
    """One cosine mode added to a circle: (a_x cos(ks + p_x), a_y cos(ks + p_y))."""

    k: int
    amp_x: float = 0.0
    amp_y: float = 0.0
    phase_x: float = 0.0
    phase_y: float = 0.0


def make_perturbed_circle(
    n: int,
    radius: float = 1.0,
    modes: Iterable[PerturbationMode] = (),
) -> CurveState:
    """Circle of the given radius plus a sum of cosine perturbation modes."""
    base = make_circle(n, radius).x.values.copy()
    s = 2.0 * np.pi * np.arange(n) / n
    for mode in modes:
        base[:, 0] += mode.amp_x * np.cos(mode.k * s + mode.phase_x)
        base[:, 1] += mode.amp_y * np.cos(mode.k * s + mode.phase_y)
    return CurveState(GridField(base))


def make_reparam_circle(n: int, radius: float = 1.0, beta: float = 0.0) -> CurveState:
    """Circle traversed at non-uniform speed: s -> s + beta sin(s), |beta| < 1.

    The image is the exact circle, but the parameterization is stretched
    unevenly, so the configuration is out of equilibrium.
    """
    if not abs(beta) < 1.0:
        raise ValueError(f"|beta| must be < 1 for a bijective reparameterization, got {beta}")
    s = 2.0 * np.pi * np.arange(n) / n
    phi = s + beta * np.sin(s)
    x = np.stack([radius * np.cos(phi), radius * np.sin(phi)], axis=1)
    return CurveState(GridField(x))
