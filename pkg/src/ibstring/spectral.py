"""Fourier toolkit on the 1-D torus [0, 2pi).

Real 2-vector fields are sampled at s_j = 2*pi*j/N. Coefficients follow the
analytic Fourier series convention f(s) = sum_k f_hat_k e^{iks} (i.e.
fft(values)/N in numpy's layout), with wavenumbers k in {-N/2, ..., N/2 - 1}.
All multiplier operators act mode by mode; the k = -N/2 (Nyquist) coefficient
is zeroed by operators whose multiplier would make it imaginary (Hilbert
transform, odd-order derivatives), so operator identities hold exactly on
fields band-limited below Nyquist.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridField",
    "SpectralField",
    "to_spectral",
    "from_spectral",
    "derivative",
    "fractional_laplacian_half",
    "hilbert_transform",
    "semigroup_apply",
    "sobolev_seminorm",
    "dealias",
    "mean",
]


@dataclass(frozen=True)
class GridField:
    """N uniform samples of a real 2-vector field on the torus.

    values has shape (N, 2); N must be even and at least 8, entries finite.
    Instances are immutable (the underlying array is locked).
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError(f"expected shape (N, 2), got {v.shape}")
        n = v.shape[0]
        if n < 8 or n % 2 != 0:
            raise ValueError(f"N must be even and >= 8, got {n}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite entries")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def h(self) -> float:
        """Grid spacing 2*pi/N."""
        return 2.0 * np.pi / self.n

    @property
    def s(self) -> np.ndarray:
        """Sample parameters s_j = 2*pi*j/N."""
        return 2.0 * np.pi * np.arange(self.n) / self.n


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a real 2-vector field.

    coeffs has shape (N, 2) complex in numpy fft order; coeffs[k] multiplies
    e^{iks} with the normalization coeffs = fft(values)/N, so a constant field
    c has coeffs[0] = c. Reality means coeff(-k) = conj(coeff(k)) and a real
    Nyquist coefficient.
    """

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[1] != 2:
            raise ValueError(f"expected shape (N, 2), got {c.shape}")
        n = c.shape[0]
        if n < 8 or n % 2 != 0:
            raise ValueError(f"N must be even and >= 8, got {n}")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers in fft order: 0, 1, ..., N/2-1, -N/2, ..., -1."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)

    def reality_defect(self) -> float:
        """Max |coeff(-k) - conj(coeff(k))|, including Im of the Nyquist mode."""
        c = self.coeffs
        n = self.n
        idx_neg = (-np.arange(n)) % n
        defect = np.max(np.abs(c[idx_neg] - np.conj(c)))
        return float(max(defect, np.max(np.abs(c[n // 2].imag))))


def to_spectral(f: GridField) -> SpectralField:
    """Forward transform; linear, exact inverse of from_spectral."""
    return SpectralField(np.fft.fft(f.values, axis=0) / f.n)


def from_spectral(fc: SpectralField) -> GridField:
    """Inverse transform back to samples (imaginary residue is discarded)."""
    return GridField(np.real(np.fft.ifft(fc.coeffs * fc.n, axis=0)))


def mean(f: GridField) -> np.ndarray:
    """Field mean (the k = 0 Fourier coefficient)."""
    return f.values.mean(axis=0)


def _wavenumbers(n: int) -> np.ndarray:
    return np.fft.fftfreq(n, d=1.0 / n).astype(int)


def _apply_multiplier(f: GridField, mult: np.ndarray) -> GridField:
    c = np.fft.fft(f.values, axis=0)
    c *= mult[:, None]
    return GridField(np.real(np.fft.ifft(c, axis=0)))


def derivative(f: GridField, m: int) -> GridField:
    """m-th spectral derivative, multiplier (ik)^m.

    Exact on trigonometric polynomials below Nyquist; for odd m the Nyquist
    coefficient is zeroed to keep the result real.
    """
    if m < 1:
        raise ValueError(f"derivative order must be >= 1, got {m}")
    k = _wavenumbers(f.n)
    mult = (1j * k.astype(float)) ** m
    if m % 2 == 1:
        mult[f.n // 2] = 0.0
    return _apply_multiplier(f, mult)


def fractional_laplacian_half(f: GridField) -> GridField:
    """Half Laplacian, multiplier |k|; annihilates the mean."""
    k = _wavenumbers(f.n)
    return _apply_multiplier(f, np.abs(k).astype(float))


def hilbert_transform(f: GridField) -> GridField:
    """Periodic Hilbert transform, multiplier -i*sgn(k).

    Annihilates the mean; composed with itself gives -(f - mean(f)) on fields
    band-limited below Nyquist (the Nyquist mode is zeroed).
    """
    k = _wavenumbers(f.n)
    mult = -1j * np.sign(k).astype(float)
    mult[f.n // 2] = 0.0
    return _apply_multiplier(f, mult)


def semigroup_apply(f: GridField, t: float) -> GridField:
    """Heat-type semigroup of the -|k|/4 multiplier: e^{-|k|t/4} per mode."""
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    k = _wavenumbers(f.n)
    return _apply_multiplier(f, np.exp(-np.abs(k) * t / 4.0))


def sobolev_seminorm(f: GridField, s: float) -> float:
    """Homogeneous Sobolev seminorm (2*pi * sum_k |k|^{2s} |f_hat_k|^2)^{1/2}.

    Normalized so s = 1 equals the L2 norm of the first derivative, and s = 0
    the L2 norm of the field itself (0^0 = 1 keeps the mean in at s = 0;
    for s > 0 the seminorm ignores the mean).
    """
    if s < 0:
        raise ValueError(f"order must be nonnegative, got {s}")
    c = np.fft.fft(f.values, axis=0) / f.n
    k = np.abs(_wavenumbers(f.n)).astype(float)
    weights = np.ones_like(k) if s == 0 else k**s
    total = np.sum(weights[:, None] ** 2 * np.abs(c) ** 2)
    return float(np.sqrt(2.0 * np.pi * total))


def dealias(
    f: GridField,
    cutoff_fraction: float = 2.0 / 3.0,
    krasny_floor: float = 1e-13,
) -> GridField:
    """Zero modes with |k| > cutoff_fraction*N/2 and coefficients below the floor.

    Idempotent; cutoff_fraction = 1 with floor 0 is the identity on fields
    representable on the grid.
    """
    if not 0.0 < cutoff_fraction <= 1.0:
        raise ValueError(f"cutoff_fraction must be in (0, 1], got {cutoff_fraction}")
    if krasny_floor < 0:
        raise ValueError(f"krasny_floor must be nonnegative, got {krasny_floor}")
    c = np.fft.fft(f.values, axis=0) / f.n
    k = np.abs(_wavenumbers(f.n))
    c[k > cutoff_fraction * f.n / 2.0] = 0.0
    c[np.abs(c) < krasny_floor] = 0.0
    return GridField(np.real(np.fft.ifft(c * f.n, axis=0)))
