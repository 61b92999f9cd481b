"""Biharmonic heat kernel on the line and on the torus.

    Phi(x, t) = c t^(-1/4) K(|x| t^(-1/4)),    K(r) = int_0^inf exp(-s^4) cos(r s) ds

with ``c = 1/pi`` so that ``int Phi(x, t) dx = 1``; the Fourier symbol is then
``exp(-(2 pi xi)^4 t)``.  The profile derivatives are

    K^(k)(r) = int_0^inf exp(-s^4) s^k trig_k(r s) ds,
    trig_k = cos, -sin, -cos, sin, cos  for k = 0..4.

The oscillatory integral is computed with composite Gauss-Legendre panels
whose width never exceeds a quarter period ``pi / (2 |r|)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .core import INF, AccuracyError, DomainError, GridField, grid

_GAUSS_ORDER = 16
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(_GAUSS_ORDER)


def _trig(k: int, z: np.ndarray) -> np.ndarray:
    k %= 4
    if k == 0:
        return np.cos(z)
    if k == 1:
        return -np.sin(z)
    if k == 2:
        return -np.cos(z)
    return np.sin(z)


@dataclass(frozen=True)
class KernelEval:
    """Evaluation context for the kernel and its profile.

    Attributes
    ----------
    s_max : float
        Truncation of the profile integral; ``exp(-s_max**4)`` is far below
        double precision.
    y_max : float
        Spatial cutoff in the similarity variable ``y = x / t**(1/4)`` used for
        whole-line norms; ``|K^(k)(y)| < 1e-17`` beyond it.
    r_budget : float
        Largest ``|r|`` the panel rule is allowed to resolve.
    """

    s_max: float = 2.6
    y_max: float = 60.0
    r_budget: float = 400.0
    max_order: int = 4
    c: float = field(default=1.0 / math.pi)

    def __post_init__(self):
        if not math.exp(-self.s_max ** 4) < 1e-16:
            raise DomainError("s_max too small for double-precision truncation")
        if not self.c > 0:
            raise DomainError("normalisation constant must be positive")

    # -- profile -----------------------------------------------------------

    def _panel_rule(self, n_panels: int):
        edges = np.linspace(0.0, self.s_max, n_panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        s = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
        w = (half[:, None] * _WEIGHTS[None, :]).ravel()
        return s, w * np.exp(-s ** 4)

    def _panels_for(self, r_abs: np.ndarray) -> np.ndarray:
        needed = np.maximum(self.s_max * 2.0 * r_abs / math.pi, 1.0)
        return np.maximum(8, 2 ** np.ceil(np.log2(needed))).astype(int)

    def profile(self, r, k: int = 0) -> np.ndarray:
        """``K^(k)(r)`` for scalar or array ``r``."""
        if not 0 <= k <= self.max_order:
            raise DomainError(f"profile derivative order must be in 0..{self.max_order}")
        r = np.asarray(r, float)
        flat = r.ravel()
        if flat.size and not np.all(np.isfinite(flat)):
            raise DomainError("profile argument must be finite")
        if flat.size and np.max(np.abs(flat)) > self.r_budget:
            raise AccuracyError(
                f"|r| = {np.max(np.abs(flat)):.4g} exceeds the oscillation budget "
                f"{self.r_budget} of the panel rule")
        out = np.empty(flat.size)
        panels = self._panels_for(np.abs(flat))
        for n in np.unique(panels):
            idx = np.flatnonzero(panels == n)
            s, w = self._panel_rule(int(n))
            ws = w * s ** k
            for chunk in np.array_split(idx, max(1, idx.size * s.size // 4_000_000 + 1)):
                out[chunk] = _trig(k, np.outer(flat[chunk], s)) @ ws
        return out.reshape(r.shape) if r.ndim else out[0]

    # -- whole-line kernel -------------------------------------------------

    def kernel(self, x, t: float, k: int = 0) -> np.ndarray:
        """``d^k/dx^k Phi(x, t)``."""
        if not t > 0:
            raise DomainError("kernel time must be positive")
        scale = t ** 0.25
        return self.c * scale ** (-(k + 1)) * self.profile(np.asarray(x, float) / scale, k)

    @cached_property
    def _zero_tables(self) -> dict:
        """Sign changes of ``K^(k)`` on ``[0, y_max]`` for piecewise quadrature."""
        y = np.linspace(0.0, self.y_max, 6001)
        tables = {}
        for k in range(self.max_order + 1):
            vals = self.profile(y, k)
            roots = []
            resolved = np.minimum(np.abs(vals[:-1]), np.abs(vals[1:])) > 1e-15
            for i in np.flatnonzero((vals[:-1] * vals[1:] < 0) & resolved):
                roots.append(brentq(lambda z: float(self.profile(z, k)), y[i], y[i + 1],
                                    xtol=1e-14))
            tables[k] = (np.array(roots), y, vals)
        return tables

    def _half_line_rule(self, k: int):
        """Nodes/weights on ``[0, y_max]`` split at the zeros of ``K^(k)``."""
        roots = self._zero_tables[k][0]
        edges = np.concatenate([[0.0], roots, [self.y_max]])
        # split long gaps so each panel stays well resolved
        pieces = []
        for a, b in zip(edges[:-1], edges[1:]):
            n = max(1, math.ceil((b - a) / 0.5))
            pieces.append(np.linspace(a, b, n + 1)[:-1])
        edges = np.concatenate(pieces + [[self.y_max]])
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        y = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
        w = (half[:, None] * _WEIGHTS[None, :]).ravel()
        return y, w

    def profile_sup(self, k: int) -> float:
        """``max_y |K^(k)(y)|``."""
        _, y, vals = self._zero_tables[k]
        i = int(np.argmax(np.abs(vals)))
        lo, hi = y[max(i - 1, 0)], y[min(i + 1, y.size - 1)]
        if hi - lo <= 0:
            return float(abs(vals[i]))
        res = minimize_scalar(lambda z: -abs(float(self.profile(z, k))), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        return float(max(abs(vals[i]), -res.fun))

    def kernel_lp_norm(self, t: float, p: float, k: int = 0) -> float:
        """``||d^k Phi(t)||_{L^p(R)}`` by quadrature over ``|x| <= y_max t^(1/4)``."""
        if not t > 0:
            raise DomainError("kernel time must be positive")
        if math.isinf(p):
            return self.c * t ** (-(k + 1) / 4) * self.profile_sup(k)
        y, w = self._half_line_rule(k)
        scale = t ** 0.25
        x = y * scale
        vals = np.abs(self.kernel(x, t, k)) ** p
        return float(2.0 * scale * (w @ vals)) ** (1.0 / p)

    def mass(self, t: float) -> float:
        """``int Phi(x, t) dx`` by quadrature."""
        y, w = self._half_line_rule(0)
        scale = t ** 0.25
        return float(2.0 * scale * (w @ self.kernel(y * scale, t, 0)))

    @cached_property
    def l1_norm(self) -> float:
        """``||Phi(t)||_1``; independent of ``t`` and strictly above 1."""
        return self.kernel_lp_norm(1.0, 1.0, 0)

    # -- torus ---------------------------------------------------------------

    def _tail_radius(self, t: float, k: int, tol: float) -> float:
        """Similarity radius beyond which the kernel stays below ``tol``."""
        _, y, vals = self._zero_tables[k]
        env = np.maximum.accumulate(np.abs(vals)[::-1])[::-1]
        amp = self.c * t ** (-(k + 1) / 4)
        ok = np.flatnonzero(amp * env < tol)
        # beyond the last resolved value only quadrature noise remains
        return float(y[ok[0]]) if ok.size else self.y_max

    def image_count(self, t: float, L: float, k: int = 0, tol: float = 1e-15) -> int:
        """Images per side needed for the periodised sum to reach ``tol``."""
        radius = self._tail_radius(t, k, tol) * t ** 0.25
        return int(math.ceil(radius / L)) + 1

    def periodized_kernel(self, t: float, N: int, L: float, k: int = 0,
                          max_images: int = 400) -> GridField:
        """``sum_n d^k Phi(x + n L, t)`` on the grid of ``N`` points."""
        if not t > 0:
            raise DomainError("kernel time must be positive")
        images = self.image_count(t, L, k)
        if images > max_images:
            raise AccuracyError(
                f"periodisation at t={t:g}, L={L:g} needs {images} images per side "
                f"(limit {max_images}); use spectral_periodized_kernel")
        x = grid(N, L)
        x = np.where(x > 0.5 * L, x - L, x)
        shifts = np.arange(-images, images + 1) * L
        pts = (x[:, None] + shifts[None, :]).ravel()
        cutoff = self.y_max * t ** 0.25
        vals = np.zeros(pts.size)
        near = np.abs(pts) <= cutoff
        vals[near] = self.kernel(pts[near], t, k)
        return GridField(vals.reshape(N, -1).sum(axis=1), L)

    # -- Fourier side ------------------------------------------------------

    @staticmethod
    def symbol(xi, t: float) -> np.ndarray:
        """Whole-line Fourier transform ``exp(-(2 pi xi)^4 t)``."""
        return np.exp(-(2 * np.pi * np.asarray(xi, float)) ** 4 * t)

    def symbol_decay_constant(self, s: float, t: float) -> float:
        """``t^(s/4) max_xi |xi|^s exp(-(2 pi xi)^4 t)`` found numerically."""
        xi = np.logspace(-6, 4, 4001) * t ** -0.25
        g = xi ** s * self.symbol(xi, t)
        i = int(np.argmax(g))
        lo, hi = math.log(xi[max(i - 1, 0)]), math.log(xi[min(i + 1, xi.size - 1)])
        res = minimize_scalar(lambda u: -math.exp(s * u) * float(self.symbol(math.exp(u), t)),
                              bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        return t ** (s / 4) * max(float(g[i]), -res.fun)

    def heat_residual(self, x, t: float, h: float = None) -> np.ndarray:
        """``d_t Phi + d_x^4 Phi`` with a centred difference in ``t``."""
        h = 1e-4 * t if h is None else h
        dt = (self.kernel(x, t + h) - self.kernel(x, t - h)) / (2 * h)
        return dt + self.kernel(x, t, 4)


def spectral_multiplier(N: int, L: float, k: int = 0) -> np.ndarray:
    """``(2 pi i kappa / L)^k`` on the ``rfft`` wavenumbers (Nyquist zeroed for odd k)."""
    kappa = np.arange(N // 2 + 1)
    m = (2j * np.pi * kappa / L) ** k
    if k % 2:
        m[-1] = 0.0
    return m


def semigroup_symbol(N: int, L: float, t: float) -> np.ndarray:
    """``exp(-(2 pi kappa / L)^4 t)`` on the ``rfft`` wavenumbers."""
    kappa = np.arange(N // 2 + 1)
    return np.exp(-(2 * np.pi * kappa / L) ** 4 * t)


def spectral_periodized_kernel(t: float, N: int, L: float, k: int = 0) -> GridField:
    """Band-limited periodic kernel built from its Fourier coefficients."""
    if not t > 0:
        raise DomainError("kernel time must be positive")
    coeff = spectral_multiplier(N, L, k) * semigroup_symbol(N, L, t)
    return GridField(np.fft.irfft(coeff, n=N) * N / L, L)


def decay_slope(p: float, k: int, times, ev: KernelEval = None) -> float:
    """Least-squares slope of ``log ||d^k Phi(t)||_p`` against ``log t``."""
    ev = DEFAULT if ev is None else ev
    times = np.asarray(times, float)
    norms = np.array([ev.kernel_lp_norm(t, p, k) for t in times])
    return float(np.polyfit(np.log(times), np.log(norms), 1)[0])


def decay_exponent(p: float, k: int) -> float:
    """Predicted power ``-(k + 1 - 1/p)/4``."""
    return -(k + 1 - (0.0 if math.isinf(p) else 1.0 / p)) / 4


DEFAULT = KernelEval()


def eval_profile(r, k: int = 0):
    return DEFAULT.profile(r, k)


def eval_kernel(x, t: float, k: int = 0):
    return DEFAULT.kernel(x, t, k)


def normalization() -> tuple:
    """``(c, ||Phi(t)||_1)`` for the mass-one normalisation."""
    return DEFAULT.c, DEFAULT.l1_norm


def kernel_lp_norm(t: float, p: float = INF, k: int = 0) -> float:
    return DEFAULT.kernel_lp_norm(t, p, k)


def periodized_kernel(t: float, N: int, L: float, k: int = 0, **kw) -> GridField:
    return DEFAULT.periodized_kernel(t, N, L, k, **kw)
