"""Smooth compactly supported bumps, plateaus and space-time cutoffs.

The base bump is ``b(s) = exp(-1/(1 - s^2))`` on ``|s| < 1``. Its derivatives
are ``b^(n) = P_n(s) / (1 - s^2)^(2n) * b(s)`` with polynomials generated by

    P_{n+1} = P_n' w^2 + (4 n s w - 2 s) P_n,    w = 1 - s^2,  P_0 = 1,

so every derivative used here is evaluated in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial

from .core import DomainError, grid, periodic_offset

_W = Polynomial([1.0, 0.0, -1.0])
_S = Polynomial([0.0, 1.0])
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(80)


@lru_cache(maxsize=None)
def _bump_poly(n: int) -> Polynomial:
    if n == 0:
        return Polynomial([1.0])
    p = _bump_poly(n - 1)
    m = n - 1
    return p.deriv() * _W ** 2 + (4 * m * _S * _W - 2 * _S) * p


def bump(s, order: int = 0) -> np.ndarray:
    """``d^order/ds^order exp(-1/(1-s^2))``, zero outside ``(-1, 1)``."""
    s = np.asarray(s, float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    si = s[inside]
    w = 1.0 - si ** 2
    base = np.exp(-1.0 / w)
    if order == 0:
        out[inside] = base
    else:
        out[inside] = _bump_poly(order)(si) / w ** (2 * order) * base
    return out


def _bump_integral(upper: np.ndarray) -> np.ndarray:
    """``int_{-1}^{u} b(s) ds`` by Gauss-Legendre on ``[-1, u]``."""
    u = np.clip(np.asarray(upper, float), -1.0, 1.0)
    half = 0.5 * (u + 1.0)
    nodes = -1.0 + half[..., None] * (_GL_NODES + 1.0)
    return half * (bump(nodes) @ _GL_WEIGHTS)


BUMP_MASS = float(_bump_integral(np.array(1.0)))


def smooth_step(y, order: int = 0) -> np.ndarray:
    """C-infinity step rising from 0 at ``y <= 0`` to 1 at ``y >= 1``."""
    y = np.asarray(y, float)
    if order == 0:
        return _bump_integral(2.0 * y - 1.0) / BUMP_MASS
    return 2.0 ** order * bump(2.0 * y - 1.0, order - 1) / BUMP_MASS


@dataclass(frozen=True)
class Plateau:
    """Equal to 1 on ``[lo, hi]``, 0 outside ``[lo - ramp, hi + ramp]``.

    With ``lo == hi`` it is a single smooth bump of half-width ``ramp``.
    """

    lo: float
    hi: float
    ramp: float

    def __post_init__(self):
        if self.hi < self.lo or not self.ramp > 0:
            raise DomainError("plateau needs lo <= hi and a positive ramp")

    @property
    def support(self) -> tuple:
        return self.lo - self.ramp, self.hi + self.ramp

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __call__(self, x, order: int = 0) -> np.ndarray:
        x = np.asarray(x, float)
        y1 = (x - self.lo + self.ramp) / self.ramp
        y2 = (self.hi + self.ramp - x) / self.ramp
        total = np.zeros_like(x)
        for j in range(order + 1):
            total += (math.comb(order, j) * (-1) ** (order - j) / self.ramp ** order
                      * smooth_step(y1, j) * smooth_step(y2, order - j))
        return total


@dataclass(frozen=True)
class CutoffFunction:
    """Tensor cutoff ``phi(x, t) = chi(x) theta(t)`` on the torus of period ``L``.

    ``space=None`` or ``time=None`` make the corresponding factor identically
    one, which gives the derivative-free variant used in sanity checks.
    """

    space: Optional[Plateau]
    time: Optional[Plateau]
    L: float

    def __post_init__(self):
        if self.space is not None:
            lo, hi = self.space.support
            if hi - lo >= self.L:
                raise DomainError("spatial support of the cutoff wraps the torus")

    @classmethod
    def box(cls, x_lo: float, x_hi: float, t_lo: float, t_hi: float,
            x_ramp: float, t_ramp: float, L: float) -> "CutoffFunction":
        """Equal to one on ``[x_lo, x_hi] x [t_lo, t_hi]``."""
        return cls(Plateau(x_lo, x_hi, x_ramp), Plateau(t_lo, t_hi, t_ramp), L)

    @classmethod
    def bump(cls, x_center: float, x_half: float, t_center: float, t_half: float,
             L: float) -> "CutoffFunction":
        """Plain tensor bump (no plateau) with the given half-widths."""
        return cls(Plateau(x_center, x_center, x_half),
                   Plateau(t_center, t_center, t_half), L)

    def support(self) -> tuple:
        """``((x_lo, x_hi), (t_lo, t_hi))``; infinite where a factor is one."""
        xs = self.space.support if self.space else (-math.inf, math.inf)
        ts = self.time.support if self.time else (-math.inf, math.inf)
        return xs, ts

    def _unwrap(self, x):
        c = self.space.center
        return c + periodic_offset(x, c, self.L)

    def spatial(self, x, order: int = 0) -> np.ndarray:
        x = np.asarray(x, float)
        if self.space is None:
            return np.full(x.shape, 1.0 if order == 0 else 0.0)
        return self.space(self._unwrap(x), order)

    def temporal(self, t, order: int = 0) -> np.ndarray:
        t = np.asarray(t, float)
        if self.time is None:
            return np.full(t.shape, 1.0 if order == 0 else 0.0)
        return self.time(t, order)

    def __call__(self, x, t, kx: int = 0, kt: int = 0) -> np.ndarray:
        return self.spatial(x, kx) * self.temporal(t, kt)

    def on_grid(self, N: int, times, kx: int = 0, kt: int = 0) -> np.ndarray:
        """Samples of ``d_x^kx d_t^kt phi`` with shape ``(len(times), N)``."""
        return np.outer(self.temporal(times, kt), self.spatial(grid(N, self.L), kx))
