"""Regularity diagnostics on trajectories.

Every space-time integral goes through the quadrature weights of
:func:`sgmlab.core.window`, so the quantities below obey the discrete versions
of the Hoelder and monotonicity inequalities exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (DomainError, MixedExponents, ParabolicCylinder, Regime, Trajectory,
                   criticality, mixed_norm, reciprocal, window)
from .spectral import derivative_rows

KINDS = ("u", "ux")


def slope_field(traj: Trajectory, kind: str = "u") -> Trajectory:
    """``u_x`` of a trajectory of ``u`` (``kind='u'``), or the data itself (``'ux'``)."""
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}")
    if kind == "ux":
        return traj
    return traj.with_data(derivative_rows(traj.data, traj.L, 1))


def _cube_Y(ux: Trajectory, Q: ParabolicCylinder) -> float:
    win = window(ux, Q)
    rows = np.flatnonzero(win.time)
    return float(win.time[rows] @ (np.abs(ux.data[rows]) ** 3 @ win.space)) / Q.r ** 2


def local_Y(traj: Trajectory, Q: ParabolicCylinder, kind: str = "u") -> float:
    """``Y(z, r) = r^-2 int_Q |u_x|^3``."""
    return _cube_Y(slope_field(traj, kind), Q)


def hoelder_chain_bound(traj: Trajectory, Q: ParabolicCylinder, exps: MixedExponents,
                        kind: str = "u") -> float:
    """Right side of ``Y <= 2^{1-3/q} ||u_x||^3_{L^{q',q}(Q)} r^{3(1 - 1/q - 4/q')}``.

    Hoelder on the ball of length ``2r`` and the interval of length ``r^4``;
    valid for ``q, q' >= 3``.
    """
    q, qp = exps.q, exps.q_prime
    if q < 3 or qp < 3:
        raise DomainError("the Hoelder chain needs q, q' >= 3")
    ux = slope_field(traj, kind)
    norm = mixed_norm(ux, exps, Q)
    iq, iqp = reciprocal(q), reciprocal(qp)
    return 2 ** (1 - 3 * iq) * norm ** 3 * Q.r ** (3 * (1 - iq - 4 * iqp))


@dataclass(frozen=True)
class PoincareResult:
    lhs: float
    Y: float
    rhs: float
    ratio: float


def poincare_residual(traj: Trajectory, Q: ParabolicCylinder, variant: str = "cubic",
                      p: float = 3.0, p_prime: Optional[float] = None,
                      eps: Optional[float] = None, kind: str = "u",
                      slope: Optional[Trajectory] = None) -> PoincareResult:
    """Oscillation of ``u`` on ``Q(z, r/2)`` against its parabolic Poincare bound.

    ``variant='cubic'``: ``lhs = r^-5 int |u - mean|^3`` and ``rhs = Y + Y^2``.
    ``variant='generalized'``: exponent ``p`` with ``rhs = (r^eps M)^p +
    (r^eps M)^{2p}``, ``M = ||u_x||_{L^{p',p}}`` over the whole trajectory and
    ``1/p + 4/p' = 1 - eps``.  ``ratio = lhs / rhs`` with ``0/0 = 0`` and
    ``x/0 = inf``.  ``kind='ux'`` is rejected since ``u`` itself is needed;
    ``slope`` may pass a precomputed ``u_x`` trajectory for repeated calls.
    """
    if kind != "u":
        raise DomainError("the Poincare residual needs u, not its slope")
    half = ParabolicCylinder(Q.x0, Q.t0, Q.r / 2)
    win = window(traj, half)
    ux = slope_field(traj) if slope is None else slope
    Y = _cube_Y(ux, Q)
    rows = np.flatnonzero(win.time)
    sub = traj.data[rows]
    mean = float(win.time[rows] @ (sub @ win.space)) / (win.time.sum() * win.space.sum())
    if variant == "cubic":
        p = 3.0
        rhs = Y + Y ** 2
    elif variant == "generalized":
        if p_prime is None or eps is None:
            raise DomainError("generalized variant needs p_prime and eps")
        if not (2 <= p < math.inf and 2 <= p_prime < math.inf):
            raise DomainError("need p, p' in [2, inf)")
        if abs(1 / p + 4 / p_prime - (1 - eps)) > 1e-12:
            raise DomainError("need 1/p + 4/p' = 1 - eps")
        M = mixed_norm(ux, MixedExponents(p, p_prime))
        s = Q.r ** eps * M
        rhs = s ** p + s ** (2 * p)
    else:
        raise DomainError("variant must be 'cubic' or 'generalized'")
    lhs = float(win.time[rows] @ (np.abs(sub - mean) ** p @ win.space)) / Q.r ** 5
    if rhs > 0:
        ratio = lhs / rhs
    else:
        ratio = 0.0 if lhs == 0 else math.inf
    return PoincareResult(lhs, Y, rhs, ratio)


@dataclass(frozen=True)
class SerrinReport:
    norm: float
    index: float
    regime: Regime
    exps: MixedExponents


def serrin_monitor(traj: Trajectory, exps: MixedExponents,
                   Q: Optional[ParabolicCylinder] = None, kind: str = "u") -> SerrinReport:
    """``||u_x||_{L^{q',q}}`` over ``Q`` (or everything) with its criticality class."""
    norm = mixed_norm(slope_field(traj, kind), exps, Q)
    index, regime = criticality(exps)
    return SerrinReport(norm, index, regime, exps)


# ---------------------------------------------------------------------------
# census
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CensusEntry:
    cylinder: ParabolicCylinder
    Y: float
    good: bool


@dataclass(frozen=True)
class CylinderCensus:
    """Cylinders of one radius flagged ``good`` when ``Y < eps0``."""

    entries: tuple
    r: float
    eps0: float

    @property
    def n_good(self) -> int:
        return sum(e.good for e in self.entries)

    @property
    def n_bad(self) -> int:
        return len(self.entries) - self.n_good

    def rows(self) -> list:
        return [dict(x0=e.cylinder.x0, t0=e.cylinder.t0, r=self.r, Y=e.Y, good=int(e.good))
                for e in self.entries]


def census_lattice(traj: Trajectory, r: float, stride: int = 1) -> list:
    """Cylinder centres spaced ``r/2`` in x and ``r^4/2`` in t (times ``stride``)."""
    t0, t1 = float(traj.times[0]), float(traj.times[-1])
    if not r ** 4 < t1 - t0:
        raise DomainError("need r^4 smaller than the time extent")
    if stride < 1:
        raise DomainError("stride must be >= 1")
    if 2 * r > traj.L:
        raise DomainError("cylinder diameter exceeds the period")
    hx, ht = stride * r / 2, stride * r ** 4 / 2
    nx = max(1, int(math.floor(traj.L / hx + 1e-9)))
    xs = np.arange(nx) * hx
    nt = int(math.floor((t1 - (t0 + r ** 4)) / ht + 1e-9)) + 1
    ts = t0 + r ** 4 + np.arange(nt) * ht
    return [ParabolicCylinder(float(x), float(t), r) for t in ts for x in xs]


def cylinder_census(traj: Trajectory, r: float, eps0: float = 0.1, stride: int = 1,
                    kind: str = "u") -> CylinderCensus:
    """Evaluate ``Y`` on the census lattice and flag cylinders with ``Y < eps0``.

    ``eps0`` defaults to 0.1, an arbitrary choice: the regularity threshold
    has no explicit value.
    """
    ux = slope_field(traj, kind)
    entries = []
    for Q in census_lattice(traj, r, stride):
        Y = _cube_Y(ux, Q)
        entries.append(CensusEntry(Q, Y, Y < eps0))
    return CylinderCensus(tuple(entries), r, eps0)


@dataclass(frozen=True)
class CensusSweep:
    radii: tuple
    censuses: tuple
    slope: Optional[float]

    @property
    def bad_counts(self) -> list:
        return [c.n_bad for c in self.censuses]


def census_sweep(traj: Trajectory, radii: Sequence[float], eps0: float = 0.1,
                 stride: int = 1, kind: str = "u") -> CensusSweep:
    """Censuses over several radii and the slope of ``log(bad)`` vs ``log(1/r)``.

    The slope is ``None`` when any radius has no bad cylinder.  It is a
    box-counting style exponent and is reported, never asserted.
    """
    cens = tuple(cylinder_census(traj, r, eps0, stride, kind) for r in radii)
    bad = np.array([c.n_bad for c in cens], float)
    slope = None
    if len(radii) >= 2 and np.all(bad > 0):
        slope = float(np.polyfit(np.log(1 / np.asarray(radii, float)), np.log(bad), 1)[0])
    return CensusSweep(tuple(radii), cens, slope)


def dyadic_cylinders(traj: Trajectory, count: int, rng: np.random.Generator,
                     r_max: float, levels: int = 4) -> list:
    """``count`` random cylinders inside the trajectory with radii ``r_max 2^-j``."""
    t0, t1 = float(traj.times[0]), float(traj.times[-1])
    out = []
    for i in range(count):
        r = r_max * 2.0 ** -(i % levels)
        x0 = rng.uniform(0, traj.L)
        tc = rng.uniform(t0 + r ** 4, t1)
        out.append(ParabolicCylinder(float(x0), float(tc), r))
    return out
