import math

import numpy as np
import pytest
import sympy as sp

from sgmlab.core import DivergenceError, DomainError, GridField, Trajectory, grid
from sgmlab.cutoff import CutoffFunction
from sgmlab.solver import (SGMStepper, SolverConfig, energy_report, energy_terms,
                           mode_initial, rhs_linear, rhs_nonlinear, simulate, step,
                           weak_form_residual)
from sgmlab.spectral import random_bandlimited

L2PI = 2 * math.pi


def test_rhs_single_mode_matches_symbolic_oracle():
    x, a, Ls = sp.symbols("x a L", positive=True)
    u = a * sp.sin(2 * sp.pi * x / Ls)
    expr = sp.simplify(-sp.diff(sp.diff(u, x) ** 2, x, 2))
    # oracle amplitude on cos(4 pi x / L)
    amp = sp.simplify(expr / sp.cos(4 * sp.pi * x / Ls))
    assert sp.simplify(amp - 32 * sp.pi ** 4 * a ** 2 / Ls ** 4) == 0
    for L, A in ((L2PI, 0.7), (3.0, 1.3)):
        N = 32
        out = rhs_nonlinear(mode_initial(N, L, A)).samples
        exact = np.array([float(expr.subs({x: xi, a: A, Ls: L})) for xi in grid(N, L)])
        assert np.max(np.abs(out - exact)) < 1e-12 * np.max(np.abs(exact))


def test_rhs_of_zero_is_zero():
    assert np.all(rhs_nonlinear(GridField(np.zeros(16), 1.0)).samples == 0)


def test_rhs_mean_vanishes_for_random_fields():
    rng = np.random.default_rng(0)
    for _ in range(50):
        f = random_bandlimited(rng, 64, 2.0)
        r = rhs_nonlinear(f).samples
        assert abs(r.mean()) < 1e-14 * np.max(np.abs(r))


def test_config_validation():
    with pytest.raises(DomainError):
        SolverConfig(dt=0.2, T=0.1)
    with pytest.raises(DomainError):
        SolverConfig(scheme="rk2")
    with pytest.raises(DomainError):
        SolverConfig(dt=0.03, T=0.1).n_steps


@pytest.mark.parametrize("scheme", ["etdrk4", "etd1"])
def test_linear_mode_decay_is_exact(scheme):
    N, L, T = 128, L2PI, 1e-3
    res = simulate(mode_initial(N, L), SolverConfig(N=N, L=L, dt=1e-4, T=T, scheme=scheme,
                                                    nonlinear=False))
    amp = res.trajectory.data[-1] @ np.sin(grid(N, L)) * 2 / N
    assert amp == pytest.approx(math.exp(-T), rel=1e-10)


def test_zero_stays_zero():
    u = GridField(np.zeros(32), 1.0)
    assert np.all(step(u, 0.01).samples == 0)


def test_small_data_one_step_matches_taylor_expansion():
    N, L, dt = 64, L2PI, 1e-6
    u = mode_initial(N, L, 1e-3)
    taylor = u.samples + dt * (rhs_linear(u).samples + rhs_nonlinear(u).samples)
    assert np.max(np.abs(step(u, dt).samples - taylor)) < 1e-10


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_step_signals_divergence():
    st = SGMStepper(16, 1.0, 1e-3)
    bad = GridField(np.r_[np.inf, np.zeros(15)], 1.0)
    with pytest.raises(DivergenceError) as info:
        st.step(bad)
    assert info.value.time == pytest.approx(1e-3)


def test_simulate_reports_divergence_with_partial_trajectory():
    res = simulate(mode_initial(32, 1.0, 50.0), SolverConfig(N=32, L=1.0, dt=1e-3, T=0.1,
                                                              blowup=1e3))
    assert res.diverged
    assert res.trajectory.times[-1] == pytest.approx(res.divergence.last_finite_time)
    assert res.divergence.max_abs_ux > 0


def test_simulate_requires_zero_mean():
    with pytest.raises(DomainError):
        simulate(GridField(np.ones(32), L2PI), SolverConfig(N=32))


def _smooth(N, L=L2PI, a=0.3):
    x = grid(N, L)
    return GridField(a * np.sin(x) + 0.2 * a * np.cos(3 * x), L)


def test_mean_conserved_and_grid_convergence():
    cfg = lambda N: SolverConfig(N=N, L=L2PI, dt=1e-3, T=0.1)
    coarse = simulate(_smooth(64), cfg(64)).trajectory
    fine = simulate(_smooth(128), cfg(128)).trajectory
    assert np.max(np.abs(coarse.data.mean(axis=1))) < 1e-12
    assert np.max(np.abs(coarse.data[-1] - fine.data[-1][::2])) < 1e-8


def test_fourth_order_in_time():
    def final(n):
        return simulate(_smooth(64), SolverConfig(N=64, L=L2PI, dt=0.2 / n, T=0.2)).trajectory.data[-1]
    ref = final(1280)
    errs = [np.max(np.abs(final(n) - ref)) for n in (20, 40, 80, 160)]
    assert all(errs[i] / errs[i + 1] >= 8 for i in range(3))


def test_semigroup_consistency():
    u0 = _smooth(64)
    whole = simulate(u0, SolverConfig(N=64, dt=1e-3, T=0.04, nonlinear=False)).trajectory
    half = simulate(u0, SolverConfig(N=64, dt=1e-3, T=0.02, nonlinear=False)).trajectory
    rest = simulate(GridField(half.data[-1], L2PI),
                    SolverConfig(N=64, dt=1e-3, T=0.02, nonlinear=False)).trajectory
    assert np.max(np.abs(whole.data[-1] - rest.data[-1])) < 1e-14
    full = simulate(u0, SolverConfig(N=64, dt=1e-3, T=0.04)).trajectory
    half = simulate(u0, SolverConfig(N=64, dt=1e-3, T=0.02)).trajectory
    rest = simulate(GridField(half.data[-1], L2PI), SolverConfig(N=64, dt=1e-3, T=0.02)).trajectory
    assert np.max(np.abs(full.data[-1] - rest.data[-1])) < 1e-13


def test_energy_report_zero_and_linear():
    zero = Trajectory(np.zeros((5, 16)), np.linspace(0, 1, 5), 1.0)
    er = energy_report(zero)
    assert er.max_residual == 0 and np.all(er.E == 0)
    lin = simulate(_smooth(64), SolverConfig(N=64, dt=1e-4, T=0.02, nonlinear=False)).trajectory
    er = energy_report(lin)
    assert np.all(er.W[np.isfinite(er.W)] == pytest.approx(0, abs=1e-16))
    assert er.max_residual < 1e-8


def test_energy_identity_small_data():
    traj = simulate(_smooth(64), SolverConfig(N=64, dt=1e-4, T=0.05)).trajectory
    er = energy_report(traj)
    assert er.relative_residual < 1e-6


def test_energy_terms_of_single_mode():
    L = 2.0
    traj = Trajectory.from_function(lambda x, t: np.sin(2 * np.pi * x / L) + 0 * t, 32, L,
                                    np.linspace(0, 1, 3))
    E, D, W = energy_terms(traj)
    assert E[0] == pytest.approx(L / 4, rel=1e-13)
    assert D[0] == pytest.approx((2 * np.pi / L) ** 4 * L / 2, rel=1e-13)
    assert abs(W[0]) < 1e-12


def test_weak_form_residual_zero_and_support_check():
    zero = Trajectory(np.zeros((11, 16)), np.linspace(0, 1, 11), 1.0)
    phi = CutoffFunction.bump(0.5, 0.2, 0.5, 0.2, 1.0)
    assert weak_form_residual(zero, phi) == 0
    with pytest.raises(DomainError):
        weak_form_residual(zero, CutoffFunction.bump(0.5, 0.2, 0.1, 0.2, 1.0))


def _weak(N, dt, nonlinear, a=1.0):
    u0 = _smooth(N, a=a)
    tr = simulate(u0, SolverConfig(N=N, dt=dt, T=0.4, nonlinear=nonlinear)).trajectory
    phi = CutoffFunction.bump(3.0, 2.0, 0.2, 0.15, L2PI)
    return weak_form_residual(tr, phi, nonlinear=nonlinear)


def test_weak_form_residual_linear_refinement():
    levels = [_weak(64, 0.01, False), _weak(128, 0.005, False), _weak(256, 0.0025, False)]
    assert levels[-1] < 1e-6
    assert all(levels[i] / levels[i + 1] >= 4 for i in range(2))


def test_weak_form_residual_nonlinear_decreases():
    levels = [_weak(64, 0.01, True), _weak(128, 0.005, True), _weak(256, 0.0025, True)]
    assert levels[0] > levels[1] > levels[2]
