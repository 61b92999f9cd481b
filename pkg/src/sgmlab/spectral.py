"""Fourier analysis on the torus ``[0, L)``.

Coefficients follow ``f(x) = sum_kappa c(kappa) exp(2 pi i kappa x / L)``, so the
line transform ``hat f(xi) = int f exp(-2 pi i x xi) dx`` restricted to the
frequencies ``xi = kappa / L`` equals ``L c(kappa)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DomainError, GridField, ShapeError, ball_weights, grid, periodic_offset


@dataclass(frozen=True)
class SpectralField:
    """Complex coefficients in ``numpy.fft`` order (``kappa = 0..N/2-1, -N/2..-1``)."""

    coeffs: np.ndarray
    L: float

    @property
    def N(self) -> int:
        return self.coeffs.size

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.fft.fftfreq(self.N, 1.0 / self.N)

    def is_real(self, tol: float = 1e-12) -> bool:
        c = self.coeffs
        mirrored = np.conj(c[(-np.arange(self.N)) % self.N])
        return bool(np.max(np.abs(c - mirrored)) <= tol * max(1.0, np.max(np.abs(c))))

    def to_grid(self) -> GridField:
        return GridField(np.fft.ifft(self.coeffs * self.N).real, self.L)


def to_spectral(f: GridField) -> SpectralField:
    return SpectralField(np.fft.fft(f.samples) / f.N, f.L)


def _apply(f: GridField, multiplier: np.ndarray) -> GridField:
    return GridField(np.fft.irfft(np.fft.rfft(f.samples) * multiplier, n=f.N), f.L)


def rfft_wavenumbers(N: int) -> np.ndarray:
    return np.arange(N // 2 + 1)


def derivative_multiplier(N: int, L: float, k: int) -> np.ndarray:
    m = (2j * np.pi * rfft_wavenumbers(N) / L) ** k
    if k % 2:
        m[-1] = 0.0
    return m


def derivative(f: GridField, k: int = 1) -> GridField:
    """``d^k f / dx^k`` via the multiplier ``(2 pi i kappa / L)^k``."""
    if k < 0:
        raise DomainError("derivative order must be non-negative")
    if k == 0:
        return f
    return _apply(f, derivative_multiplier(f.N, f.L, k))


def derivative_rows(data: np.ndarray, L: float, k: int) -> np.ndarray:
    """Row-wise spectral derivative of a ``(n_frames, N)`` array."""
    if k == 0:
        return np.array(data, float)
    N = data.shape[-1]
    return np.fft.irfft(np.fft.rfft(data, axis=-1) * derivative_multiplier(N, L, k),
                        n=N, axis=-1)


def fractional_multiplier(N: int, L: float, s: float) -> np.ndarray:
    if s == 0:
        return np.ones(N // 2 + 1)
    return (rfft_wavenumbers(N) / L) ** s


def fractional(f: GridField, s: float) -> GridField:
    """``Lambda^s f`` with symbol ``|kappa / L|^s``; the mean is removed for ``s > 0``."""
    if s < 0:
        raise DomainError("fractional order must be non-negative")
    return _apply(f, fractional_multiplier(f.N, f.L, s))


def l2_norm(f: GridField) -> float:
    return float(np.sqrt(f.dx * np.sum(f.samples ** 2)))


def plancherel_l2_norm(f: GridField) -> float:
    """``sqrt(L sum |c(kappa)|^2)``."""
    c = to_spectral(f).coeffs
    return float(np.sqrt(f.L * np.sum(np.abs(c) ** 2)))


def fractional_l2_norm(f: GridField, s: float) -> float:
    """``||Lambda^s f||_2`` evaluated in coefficient space."""
    sf = to_spectral(f)
    weight = np.abs(sf.wavenumbers / f.L) ** s if s > 0 else np.ones(f.N)
    return float(np.sqrt(f.L * np.sum(weight ** 2 * np.abs(sf.coeffs) ** 2)))


def sobolev_norm(f: GridField, s: float) -> float:
    """Fourier ``H^s`` norm ``sqrt(L sum (1 + |kappa/L|^{2s}) |c|^2)``."""
    sf = to_spectral(f)
    weight = 1.0 + np.abs(sf.wavenumbers / f.L) ** (2 * s)
    return float(np.sqrt(f.L * np.sum(weight * np.abs(sf.coeffs) ** 2)))


def slobodeckij_norm(f: GridField, s: float, window: Optional[tuple] = None,
                     seminorm: bool = False) -> float:
    """Double-integral ``W^{s,2}`` norm by a Riemann sum.

    ``window`` is ``(a, b)`` with ``0 < b - a <= L``; distances are measured
    along that interval.  ``None`` means the whole torus with the periodic
    distance.  Pairs closer than one grid spacing (the diagonal) are dropped.
    """
    if not 0 < s < 1:
        raise DomainError("Slobodeckij order must lie in (0, 1)")
    N, L = f.N, f.L
    if window is None:
        w = np.full(N, f.dx)
        pos = grid(N, L)
        diff = np.abs(pos[:, None] - pos[None, :])
        dist = np.minimum(diff, L - diff)
    else:
        a, b = window
        if not 0 < b - a <= L * (1 + 1e-12):
            raise DomainError("window must have positive length at most L")
        center, half = 0.5 * (a + b), 0.5 * (b - a)
        w = ball_weights(N, L, center, half)
        pos = periodic_offset(grid(N, L), center, L)
        dist = np.abs(pos[:, None] - pos[None, :])
    u = f.samples
    mass = float(w @ u ** 2)
    keep = dist >= f.dx * (1 - 1e-9)
    with np.errstate(divide="ignore", invalid="ignore"):
        kern = np.where(keep, 1.0 / np.where(keep, dist, 1.0) ** (1 + 2 * s), 0.0)
    semi = float(np.einsum("i,j,ij,ij->", w, w, (u[:, None] - u[None, :]) ** 2, kern))
    return float(np.sqrt(semi if seminorm else mass + semi))


def convolve(f: GridField, g: GridField) -> GridField:
    """Periodic convolution ``int_T f(y) g(x - y) dy``."""
    if f.N != g.N or f.L != g.L:
        raise ShapeError("convolution operands must share N and L")
    prod = np.fft.rfft(f.samples) * np.fft.rfft(g.samples)
    return GridField(np.fft.irfft(prod, n=f.N) * f.dx, f.L)


def dealias_mask(N: int) -> np.ndarray:
    """Two-thirds rule on the ``rfft`` wavenumbers."""
    return rfft_wavenumbers(N) <= N // 3


def random_bandlimited(rng: np.random.Generator, N: int, L: float,
                       kmax: Optional[int] = None, decay: float = 1.0) -> GridField:
    """Random real zero-mean field with modes ``1 <= kappa <= kmax``."""
    kmax = N // 3 if kmax is None else kmax
    c = np.zeros(N // 2 + 1, complex)
    kappa = np.arange(1, kmax + 1)
    c[1:kmax + 1] = (rng.standard_normal(kmax) + 1j * rng.standard_normal(kmax)) / kappa ** decay
    return GridField(np.fft.irfft(c, n=N) * N, L)
