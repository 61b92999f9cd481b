"""Pseudospectral integration of ``u_t + u_xxxx + (u_x^2)_xx = 0`` on the torus.

The stiff linear part is integrated exactly through ``exp(-(2 pi kappa/L)^4 dt)``;
the quadratic term goes through an exponential Runge-Kutta scheme (ETDRK4 of
Cox-Matthews with the contour-integral coefficients of Kassam-Trefethen, or
first-order exponential Euler).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import DivergenceError, DomainError, GridField, Trajectory, grid
from .cutoff import CutoffFunction
from .spectral import dealias_mask, derivative_rows, rfft_wavenumbers

SCHEMES = ("etdrk4", "etd1")


@dataclass(frozen=True)
class SolverConfig:
    N: int = 128
    L: float = 2 * math.pi
    dt: float = 1e-3
    T: float = 0.1
    dealias: bool = True
    scheme: str = "etdrk4"
    save_every: int = 1
    nonlinear: bool = True
    blowup: float = 1e8

    def __post_init__(self):
        if not (self.dt > 0 and self.T > 0 and self.dt <= self.T * (1 + 1e-12)):
            raise DomainError("need 0 < dt <= T")
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}")
        if self.save_every < 1:
            raise DomainError("save_every must be >= 1")
        if self.N < 8 or self.N % 2:
            raise DomainError("N must be even and >= 8")

    @property
    def n_steps(self) -> int:
        n = int(round(self.T / self.dt))
        if abs(n * self.dt - self.T) > 1e-9 * self.T:
            raise DomainError(f"T={self.T} is not an integer multiple of dt={self.dt}")
        return n


@dataclass(frozen=True)
class Divergence:
    """Metadata of a run that produced a non-finite or exploding field."""

    time: float
    last_finite_time: float
    max_abs_ux: float


@dataclass(frozen=True)
class SimulationResult:
    trajectory: Trajectory
    config: SolverConfig
    divergence: Optional[Divergence] = None
    stiffness: float = 0.0
    """``dt * max |nonlinear rate|`` observed over the run (documentation only)."""

    @property
    def diverged(self) -> bool:
        return self.divergence is not None


def _phi_coefficients(z: np.ndarray, dt: float, n_contour: int = 32) -> dict:
    """ETD weights from contour means around each ``z = lambda dt``."""
    roots = np.exp(1j * np.pi * (np.arange(n_contour) + 0.5) / n_contour)
    lr = z[:, None] + roots[None, :]
    e = np.exp(lr)
    eh = np.exp(lr / 2)
    mean = lambda a: a.mean(axis=1).real
    return {
        "e": np.exp(z),
        "eh": np.exp(z / 2),
        "q": dt * mean((eh - 1) / lr),
        "f1": dt * mean((-4 - lr + e * (4 - 3 * lr + lr ** 2)) / lr ** 3),
        "f2": dt * mean((2 + lr + e * (lr - 2)) / lr ** 3),
        "f3": dt * mean((-4 - 3 * lr - lr ** 2 + e * (4 - lr)) / lr ** 3),
        "phi1": dt * mean((e - 1) / lr),
    }


class SGMStepper:
    """Fourier-space time stepper for fixed ``(N, L, dt)``."""

    def __init__(self, N: int, L: float, dt: float, scheme: str = "etdrk4",
                 dealias: bool = True, nonlinear: bool = True):
        if scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}")
        self.N, self.L, self.dt = N, L, dt
        self.scheme, self.nonlinear = scheme, nonlinear
        kappa = rfft_wavenumbers(N)
        self.k = 2 * np.pi * kappa / L
        self.lam = -self.k ** 4
        self.mask = dealias_mask(N) if dealias else np.ones(kappa.size, bool)
        self.ik = 1j * self.k
        self.ik[-1] = 0.0
        self.coef = _phi_coefficients(self.lam * dt, dt)

    def nonlinear_hat(self, uh: np.ndarray) -> np.ndarray:
        """Fourier coefficients of ``-(u_x^2)_xx`` (quadratic term dealiased)."""
        if not self.nonlinear:
            return np.zeros_like(uh)
        ux = np.fft.irfft(self.ik * uh * self.mask, n=self.N)
        sq = np.fft.rfft(ux * ux) * self.mask
        return self.k ** 2 * sq

    def step_hat(self, uh: np.ndarray) -> np.ndarray:
        c = self.coef
        n0 = self.nonlinear_hat(uh)
        if self.scheme == "etd1":
            return c["e"] * uh + c["phi1"] * n0
        a = c["eh"] * uh + c["q"] * n0
        na = self.nonlinear_hat(a)
        b = c["eh"] * uh + c["q"] * na
        nb = self.nonlinear_hat(b)
        cc = c["eh"] * a + c["q"] * (2 * nb - n0)
        nc = self.nonlinear_hat(cc)
        return c["e"] * uh + c["f1"] * n0 + 2 * c["f2"] * (na + nb) + c["f3"] * nc

    def step(self, u: GridField) -> GridField:
        out = np.fft.irfft(self.step_hat(np.fft.rfft(u.samples)), n=self.N)
        if not np.all(np.isfinite(out)):
            raise DivergenceError(self.dt, "non-finite values after one step")
        return GridField(out, u.L)


def rhs_nonlinear(u: GridField, dealias: bool = True) -> GridField:
    """``-(u_x^2)_xx`` computed pseudospectrally."""
    st = SGMStepper(u.N, u.L, 1.0, dealias=dealias)
    return GridField(np.fft.irfft(st.nonlinear_hat(np.fft.rfft(u.samples)), n=u.N), u.L)


def rhs_linear(u: GridField) -> GridField:
    """``-u_xxxx``."""
    return GridField(-derivative_rows(u.samples[None, :], u.L, 4)[0], u.L)


def step(u: GridField, dt: float, scheme: str = "etdrk4", dealias: bool = True,
         nonlinear: bool = True) -> GridField:
    """Advance ``u`` by one exponential-integrator step."""
    return SGMStepper(u.N, u.L, dt, scheme, dealias, nonlinear).step(u)


def _check_zero_mean(u: GridField) -> None:
    scale = max(1.0, float(np.max(np.abs(u.samples))))
    if abs(u.samples.mean()) > 1e-12 * scale:
        raise DomainError("initial data must have zero mean")


def simulate(u0: GridField, config: SolverConfig) -> SimulationResult:
    """Integrate to ``config.T`` saving every ``save_every`` steps.

    A non-finite field or ``max|u| > config.blowup`` ends the run early; the
    result then carries the frames saved so far and a :class:`Divergence`.
    """
    if u0.N != config.N or abs(u0.L - config.L) > 1e-14 * config.L:
        raise DomainError("initial data grid does not match the configuration")
    _check_zero_mean(u0)
    n_steps = config.n_steps
    if n_steps % config.save_every:
        raise DomainError("number of steps must be a multiple of save_every")
    st = SGMStepper(config.N, config.L, config.dt, config.scheme, config.dealias,
                    config.nonlinear)
    uh = np.fft.rfft(u0.samples)
    frames, times = [np.array(u0.samples)], [0.0]
    divergence = None
    rate = 0.0
    for n in range(1, n_steps + 1):
        prev = uh
        uh = st.step_hat(uh)
        u = np.fft.irfft(uh, n=config.N)
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > config.blowup:
            ux = np.fft.irfft(st.ik * prev, n=config.N)
            divergence = Divergence(n * config.dt, (n - 1) * config.dt,
                                    float(np.max(np.abs(ux))))
            break
        if config.nonlinear and n % config.save_every == 0:
            nl = st.nonlinear_hat(uh)
            scale = np.max(np.abs(uh)) or 1.0
            rate = max(rate, config.dt * float(np.max(np.abs(nl))) / scale)
        if n % config.save_every == 0:
            frames.append(u)
            times.append(n * config.dt)
    traj = Trajectory(np.stack(frames), np.array(times), config.L)
    return SimulationResult(traj, config, divergence, rate)


# ---------------------------------------------------------------------------
# monitors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyReport:
    """Per-frame energy budget ``dE/dt + D + W = 0``.

    ``residual[i]`` is defined on frames with a full difference stencil and is
    ``nan`` elsewhere.
    """

    times: np.ndarray
    E: np.ndarray
    D: np.ndarray
    W: np.ndarray
    dEdt: np.ndarray
    residual: np.ndarray = field(repr=False)

    @property
    def max_residual(self) -> float:
        r = self.residual[np.isfinite(self.residual)]
        return float(np.max(np.abs(r))) if r.size else 0.0

    @property
    def relative_residual(self) -> float:
        scale = float(np.max(self.D))
        return self.max_residual / scale if scale > 0 else self.max_residual


def energy_terms(traj: Trajectory) -> tuple:
    """``E = 1/2 ||u||^2``, ``D = ||u_xx||^2`` and ``W = int u_xx u_x^2`` per frame."""
    u = traj.data
    ux = derivative_rows(u, traj.L, 1)
    uxx = derivative_rows(u, traj.L, 2)
    dx = traj.dx
    E = 0.5 * dx * np.sum(u ** 2, axis=1)
    D = dx * np.sum(uxx ** 2, axis=1)
    W = dx * np.sum(uxx * ux ** 2, axis=1)
    return E, D, W


def energy_report(traj: Trajectory) -> EnergyReport:
    """Energy identity residual using centred differences of ``E`` in time.

    Fourth-order differences are used where five frames are available,
    second-order ones otherwise.
    """
    if traj.n_frames < 3:
        raise DomainError("energy report needs at least three frames")
    E, D, W = energy_terms(traj)
    h = traj.dt
    dE = np.full(E.size, np.nan)
    if E.size >= 5:
        dE[2:-2] = (E[:-4] - 8 * E[1:-3] + 8 * E[3:-1] - E[4:]) / (12 * h)
    else:
        dE[1:-1] = (E[2:] - E[:-2]) / (2 * h)
    return EnergyReport(traj.times, E, D, W, dE, dE + D + W)


def weak_form_residual(traj: Trajectory, phi: CutoffFunction, nonlinear: bool = True) -> float:
    """``|int (u phi_t - u_xx phi_xx - u_x^2 phi_xx) dx dt|`` over the trajectory.

    ``nonlinear=False`` drops the quadratic term (the weak form of the linear
    biharmonic heat equation).
    """
    _, (tlo, thi) = phi.support()
    if not (traj.times[0] < tlo and thi < traj.times[-1]):
        raise DomainError("test function must be supported strictly inside the time span")
    u = traj.data
    uxx = derivative_rows(u, traj.L, 2)
    phi_t = phi.on_grid(traj.N, traj.times, 0, 1)
    phi_xx = phi.on_grid(traj.N, traj.times, 2, 0)
    integrand = u * phi_t - uxx * phi_xx
    if nonlinear:
        ux = derivative_rows(u, traj.L, 1)
        integrand -= ux ** 2 * phi_xx
    per_frame = traj.dx * integrand.sum(axis=1)
    w = np.full(traj.n_frames, traj.dt)
    w[[0, -1]] *= 0.5
    return float(abs(w @ per_frame))


def mode_initial(N: int, L: float, amplitude: float = 1.0, kappa: int = 1) -> GridField:
    """``amplitude * sin(2 pi kappa x / L)``."""
    return GridField(amplitude * np.sin(2 * np.pi * kappa * grid(N, L) / L), L)
