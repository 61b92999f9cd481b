"""Shared domain types: periodic fields, trajectories, parabolic cylinders,
mixed Lebesgue exponents and the discrete mixed space-time norms.

Discretisation of integrals
---------------------------
Space: each sample ``x_j`` owns the cell ``[x_j - dx/2, x_j + dx/2)``; a ball
``B(x0, r)`` weights every cell by the length of its overlap with the ball
(wrapping around the torus), so the weights sum to ``2r`` exactly.

Time: the integrand is sampled at the frames and replaced by its piecewise
linear interpolant, which is integrated exactly over ``(t0 - r**4, t0)``.
When both ends of the interval are frame times this is the trapezoid rule.

Both rules are positive linear functionals of the samples, so discrete
Hoelder and Minkowski inequalities hold exactly.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

INF = math.inf


class DomainError(ValueError):
    """Argument outside the region where the operation is defined."""


class ResolutionError(ValueError):
    """Not enough samples to resolve the requested quantity."""


class ShapeError(ValueError):
    """Incompatible grid sizes or periods."""


class AccuracyError(RuntimeError):
    """Requested accuracy cannot be delivered with the configured budget."""


class DivergenceError(ArithmeticError):
    """Non-finite or exploding field detected during time stepping."""

    def __init__(self, time: float, message: str = ""):
        self.time = float(time)
        super().__init__(message or f"field diverged at t={time:.6g}")


def reciprocal(p: float) -> float:
    """1/p with 1/inf = 0."""
    return 0.0 if math.isinf(p) else 1.0 / p


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

def _check_grid_size(N: int) -> None:
    if N < 8 or N % 2:
        raise ShapeError(f"grid size must be even and >= 8, got {N}")


@dataclass(frozen=True)
class GridField:
    """A real periodic field sampled at ``x_j = j L / N``."""

    samples: np.ndarray
    L: float
    zero_mean: bool = False

    def __post_init__(self):
        a = np.array(self.samples, dtype=float)
        if a.ndim != 1:
            raise ShapeError("samples must be one-dimensional")
        _check_grid_size(a.size)
        if not self.L > 0:
            raise DomainError("period must be positive")
        if self.zero_mean:
            scale = max(1.0, float(np.max(np.abs(a))))
            if abs(a.mean()) > 1e-12 * scale:
                raise DomainError(f"field flagged zero-mean has mean {a.mean():.3e}")
        a.setflags(write=False)
        object.__setattr__(self, "samples", a)

    @property
    def N(self) -> int:
        return self.samples.size

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return grid(self.N, self.L)

    @classmethod
    def from_function(cls, func, N: int, L: float, zero_mean: bool = False) -> "GridField":
        return cls(func(grid(N, L)), L, zero_mean)


def grid(N: int, L: float) -> np.ndarray:
    return np.arange(N) * (L / N)


@dataclass(frozen=True)
class Trajectory:
    """Frames of a periodic field on a uniform time grid.

    ``data`` has shape ``(n_frames, N)``. ``window`` optionally marks a
    spatial sub-interval ``(center, half_width)`` to which norms over the
    whole trajectory are confined (set by :func:`restrict`); the frames
    themselves always hold the full periodic field so that spectral
    derivatives stay available.
    """

    data: np.ndarray
    times: np.ndarray
    L: float
    window: Optional[tuple] = None

    def __post_init__(self):
        d = np.array(self.data, dtype=float)
        t = np.array(self.times, dtype=float)
        if d.ndim != 2 or d.shape[0] != t.size:
            raise ShapeError("data must be (n_frames, N) with one time per frame")
        _check_grid_size(d.shape[1])
        if t.size > 1:
            steps = np.diff(t)
            if np.any(steps <= 0):
                raise DomainError("times must be strictly increasing")
            dt = (t[-1] - t[0]) / (t.size - 1)
            scale = max(dt, float(np.max(np.abs(t))))
            if np.any(np.abs(steps - dt) > 1e-12 * scale):
                raise DomainError("times must be uniformly spaced")
        if self.window is not None:
            c, h = self.window
            object.__setattr__(self, "window", (float(c), float(h)))
        d.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "times", t)

    @classmethod
    def from_frames(cls, frames: Sequence[GridField], times) -> "Trajectory":
        if not frames:
            raise ResolutionError("empty trajectory")
        L = frames[0].L
        if any(f.L != L or f.N != frames[0].N for f in frames):
            raise ShapeError("frames must share N and L")
        return cls(np.stack([f.samples for f in frames]), np.asarray(times, float), L)

    @classmethod
    def from_function(cls, func, N: int, L: float, times) -> "Trajectory":
        """Sample ``func(x, t)`` (broadcasting) on the space-time grid."""
        times = np.asarray(times, float)
        x = grid(N, L)
        return cls(func(x[None, :], times[:, None]) * np.ones((times.size, N)), times, L)

    @property
    def N(self) -> int:
        return self.data.shape[1]

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def dt(self) -> float:
        if self.n_frames < 2:
            return 0.0
        return (self.times[-1] - self.times[0]) / (self.n_frames - 1)

    @property
    def x(self) -> np.ndarray:
        return grid(self.N, self.L)

    @property
    def frames(self) -> list:
        return [GridField(row, self.L) for row in self.data]

    def frame(self, i: int) -> GridField:
        return GridField(self.data[i], self.L)

    def with_data(self, data) -> "Trajectory":
        return Trajectory(data, self.times, self.L, self.window)


@dataclass(frozen=True)
class ParabolicCylinder:
    """``Q(z, r) = B(x0, r) x (t0 - r**4, t0)``."""

    x0: float
    t0: float
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError("cylinder radius must be positive")

    @property
    def t_bottom(self) -> float:
        return self.t0 - self.r ** 4

    @property
    def height(self) -> float:
        return self.r ** 4

    def shrink(self, factor: float = 0.5) -> "ParabolicCylinder":
        """Concentric cylinder with the same top time and radius ``factor*r``."""
        return ParabolicCylinder(self.x0, self.t0, factor * self.r)


class Regime(str, enum.Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"
    EXCLUDED_ENDPOINT = "excluded_endpoint"


@dataclass(frozen=True)
class MixedExponents:
    """Exponents of ``L^{q'}_t L^q_x``; either may be ``math.inf``."""

    q: float
    q_prime: float

    def __post_init__(self):
        if not self.q >= 1:
            raise DomainError(f"spatial exponent must be >= 1, got {self.q}")
        if not self.q_prime > 1:
            raise DomainError(f"temporal exponent must be > 1, got {self.q_prime}")

    @property
    def index(self) -> float:
        return reciprocal(self.q) + 4.0 * reciprocal(self.q_prime)

    def __str__(self):
        return f"L^({self.q_prime},{self.q})"


def criticality(exps: MixedExponents, tol: float = 1e-12) -> tuple:
    """Scaling index ``1/q + 4/q'`` and its regime."""
    index = exps.index
    if exps.q == 1 and math.isinf(exps.q_prime):
        return index, Regime.EXCLUDED_ENDPOINT
    if index < 1 - tol:
        return index, Regime.SUBCRITICAL
    # index == 1 with q' = inf forces q = 1, handled above
    if abs(index - 1) <= tol:
        return 1.0, Regime.CRITICAL
    return index, Regime.SUPERCRITICAL


# ---------------------------------------------------------------------------
# quadrature weights
# ---------------------------------------------------------------------------

def periodic_offset(x, center: float, L: float):
    """Signed distance from ``center`` folded into ``[-L/2, L/2)``."""
    return np.mod(np.asarray(x) - center + 0.5 * L, L) - 0.5 * L


def ball_weights(N: int, L: float, center: float, half_width: float) -> np.ndarray:
    """Overlap lengths of the grid cells with ``B(center, half_width)``."""
    dx = L / N
    if 2 * half_width >= L * (1 - 1e-12):
        return np.full(N, dx)
    d = periodic_offset(grid(N, L), center, L)
    w = np.zeros(N)
    for shift in (-L, 0.0, L):
        lo = np.maximum(d + shift - 0.5 * dx, -half_width)
        hi = np.minimum(d + shift + 0.5 * dx, half_width)
        w += np.clip(hi - lo, 0.0, None)
    return w


def interval_weights(times: np.ndarray, a: float, b: float) -> np.ndarray:
    """Weights integrating the piecewise-linear interpolant over ``[a, b]``."""
    t = np.asarray(times, float)
    w = np.zeros(t.size)
    if t.size == 1:
        return w
    lo = np.maximum(t[:-1], a)
    hi = np.minimum(t[1:], b)
    ok = hi > lo
    h = t[1:] - t[:-1]
    length = np.where(ok, hi - lo, 0.0)
    theta = np.where(ok, (0.5 * (lo + hi) - t[:-1]) / h, 0.0)
    np.add.at(w, np.arange(t.size - 1), length * (1 - theta))
    np.add.at(w, np.arange(1, t.size), length * theta)
    return w


@dataclass(frozen=True)
class Window:
    """Quadrature description of a space-time region of a trajectory."""

    space: np.ndarray
    time: np.ndarray
    t_lo: float
    t_hi: float
    frames: np.ndarray = field(repr=False)


def _snap(value: float, times: np.ndarray, tol: float) -> float:
    j = int(np.argmin(np.abs(times - value)))
    return float(times[j]) if abs(times[j] - value) <= tol else value


def check_within(traj: Trajectory, Q: ParabolicCylinder) -> None:
    """Raise :class:`DomainError` unless ``Q`` lies in the trajectory's extent."""
    t = traj.times
    tol = 1e-9 * max(traj.dt, 1e-300) if traj.n_frames > 1 else 0.0
    if Q.t_bottom < t[0] - tol or Q.t0 > t[-1] + tol:
        raise DomainError(
            f"cylinder time span ({Q.t_bottom:.6g}, {Q.t0:.6g}) outside "
            f"trajectory span [{t[0]:.6g}, {t[-1]:.6g}]")
    if traj.window is None:
        if 2 * Q.r > traj.L * (1 + 1e-12):
            raise DomainError(f"cylinder diameter {2 * Q.r} exceeds period {traj.L}")
    else:
        c, h = traj.window
        if abs(periodic_offset(Q.x0, c, traj.L)) + Q.r > h * (1 + 1e-12) + 1e-12 * traj.L:
            raise DomainError("cylinder leaves the trajectory's spatial window")


def window(traj: Trajectory, Q: Optional[ParabolicCylinder] = None) -> Window:
    """Space and time quadrature weights for ``Q`` (or the whole trajectory)."""
    if Q is None:
        if traj.window is None:
            space = np.full(traj.N, traj.dx)
        else:
            space = ball_weights(traj.N, traj.L, *traj.window)
        a, b = float(traj.times[0]), float(traj.times[-1])
    else:
        check_within(traj, Q)
        space = ball_weights(traj.N, traj.L, Q.x0, Q.r)
        tol = 1e-9 * traj.dt
        a = max(_snap(Q.t_bottom, traj.times, tol), float(traj.times[0]))
        b = min(_snap(Q.t0, traj.times, tol), float(traj.times[-1]))
    inside = np.flatnonzero((traj.times >= a) & (traj.times <= b))
    if inside.size < 2:
        raise ResolutionError(
            f"only {inside.size} frame(s) in time interval [{a:.6g}, {b:.6g}]")
    return Window(space, interval_weights(traj.times, a, b), a, b, inside)


# ---------------------------------------------------------------------------
# mixed norms
# ---------------------------------------------------------------------------

def _spatial_norms(data: np.ndarray, space: np.ndarray, q: float) -> np.ndarray:
    a = np.abs(data)
    if math.isinf(q):
        mask = space > 0
        return a[:, mask].max(axis=1) if mask.any() else np.zeros(a.shape[0])
    return (a ** q @ space) ** (1.0 / q)


def _temporal_norm(g: np.ndarray, win: Window, times: np.ndarray, qp: float) -> float:
    if math.isinf(qp):
        inner = win.frames[(times[win.frames] > win.t_lo) & (times[win.frames] < win.t_hi)]
        vals = [np.interp(win.t_lo, times, g), np.interp(win.t_hi, times, g)]
        if inner.size:
            vals.append(g[inner].max())
        return float(max(vals))
    return float((g ** qp @ win.time) ** (1.0 / qp))


def mixed_norm_of(data: np.ndarray, times: np.ndarray, win: Window,
                  exps: MixedExponents) -> float:
    """Discrete ``L^{q'}_t L^q_x`` norm of raw samples over a window."""
    g = _spatial_norms(data, win.space, exps.q)
    return _temporal_norm(g, win, times, exps.q_prime)


def mixed_norm(traj: Trajectory, exps: MixedExponents,
               Q: Optional[ParabolicCylinder] = None) -> float:
    """Discrete mixed norm ``||f||_{L^{q'}(I; L^q(B))}`` of a trajectory.

    ``Q=None`` means the whole trajectory (its spatial window if it has one).
    """
    win = window(traj, Q)
    return mixed_norm_of(traj.data, traj.times, win, exps)


def space_time_integral(data: np.ndarray, win: Window) -> float:
    """``int_I int_B data`` with the window's weights."""
    return float(win.time @ (data @ win.space))


def restrict(traj: Trajectory, Q: Optional[ParabolicCylinder]) -> Trajectory:
    """Sub-trajectory on the frames inside ``Q``'s time span, windowed to its ball.

    Restricting to ``None`` (the whole domain) returns ``traj`` unchanged.
    """
    if Q is None:
        return traj
    check_within(traj, Q)
    tol = 1e-9 * traj.dt
    keep = (traj.times >= Q.t_bottom - tol) & (traj.times <= Q.t0 + tol)
    if keep.sum() < 1:
        raise ResolutionError("no frames inside the cylinder")
    spatial = None if 2 * Q.r >= traj.L * (1 - 1e-12) else (Q.x0, Q.r)
    return Trajectory(traj.data[keep], traj.times[keep], traj.L, spatial)


def interpolation_bound(norm_a: float, exps_a: MixedExponents,
                        norm_b: float, exps_b: MixedExponents,
                        target: MixedExponents, time_length: float) -> float:
    """Upper bound for a target mixed norm by Lebesgue interpolation.

    The spatial exponent of ``target`` fixes the interpolation parameter
    ``theta`` via ``1/p = theta/p_a + (1-theta)/p_b``; the temporal exponent
    reached by the same ``theta`` is then lowered to the target's by
    Hoelder's inequality on an interval of length ``time_length``.
    Returns ``inf`` when the target temporal exponent is out of reach.
    """
    ia, ib, it = (reciprocal(e.q) for e in (exps_a, exps_b, target))
    if ia == ib:
        raise DomainError("interpolation endpoints share the spatial exponent")
    theta = (it - ib) / (ia - ib)
    if not -1e-12 <= theta <= 1 + 1e-12:
        raise DomainError("target spatial exponent not between the endpoints")
    theta = min(max(theta, 0.0), 1.0)
    reached = theta * reciprocal(exps_a.q_prime) + (1 - theta) * reciprocal(exps_b.q_prime)
    wanted = reciprocal(target.q_prime)
    if wanted < reached - 1e-12:
        return INF
    return time_length ** (wanted - reached) * norm_a ** theta * norm_b ** (1 - theta)
