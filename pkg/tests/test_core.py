import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgmlab.core import (INF, DivergenceError, DomainError, GridField, MixedExponents,
                         ParabolicCylinder, Regime, ResolutionError, ShapeError, Trajectory,
                         ball_weights, criticality, interpolation_bound, interval_weights,
                         mixed_norm, restrict, window)


def test_gridfield_rejects_odd_or_small_grids():
    with pytest.raises(ShapeError):
        GridField(np.zeros(7), 1.0)
    with pytest.raises(ShapeError):
        GridField(np.zeros(6), 1.0)


def test_gridfield_zero_mean_flag_is_checked():
    GridField(np.sin(2 * np.pi * np.arange(16) / 16), 1.0, zero_mean=True)
    with pytest.raises(DomainError):
        GridField(np.ones(16), 1.0, zero_mean=True)


def test_trajectory_requires_uniform_times():
    with pytest.raises(DomainError):
        Trajectory(np.zeros((3, 8)), [0.0, 0.1, 0.3], 1.0)
    with pytest.raises(ShapeError):
        Trajectory(np.zeros((3, 8)), [0.0, 0.1], 1.0)


def test_divergence_error_carries_time():
    err = DivergenceError(0.25)
    assert err.time == 0.25 and isinstance(err, ArithmeticError)


@given(st.floats(0, 1), st.floats(0.01, 0.49))
def test_ball_weights_sum_to_diameter(center, r):
    w = ball_weights(64, 1.0, center, r)
    assert w.sum() == pytest.approx(2 * r, abs=1e-13)
    assert np.all(w >= 0) and np.all(w <= 1 / 64 + 1e-15)


@given(st.floats(0.0, 0.9), st.floats(0.01, 1.0))
def test_interval_weights_integrate_linear_functions_exactly(a, length):
    times = np.linspace(0, 1, 11)
    b = min(1.0, a + length)
    w = interval_weights(times, a, b)
    assert w.sum() == pytest.approx(b - a, abs=1e-14)
    assert w @ (3 * times + 1) == pytest.approx(1.5 * (b * b - a * a) + (b - a), abs=1e-13)


def test_mixed_norm_of_constant_field():
    traj = Trajectory(np.full((21, 32), 2.0), np.linspace(0, 1, 21), 2.0)
    Q = ParabolicCylinder(0.4, 0.9, 0.6)
    expected = 2.0 * (2 * 0.6) ** (1 / 3) * (0.6 ** 4) ** (1 / 5)
    assert mixed_norm(traj, MixedExponents(3, 5), Q) == pytest.approx(expected, rel=1e-13)
    assert mixed_norm(traj, MixedExponents(INF, INF), Q) == 2.0


def test_mixed_norm_l2_of_sine_matches_closed_form():
    L = 2.0
    traj = Trajectory.from_function(lambda x, t: np.sin(2 * np.pi * x / L) + 0 * t, 64, L,
                                    np.linspace(0, 1, 5))
    assert mixed_norm(traj, MixedExponents(2, 2)) == pytest.approx(math.sqrt(L / 2), rel=1e-13)


def test_window_needs_two_frames():
    traj = Trajectory(np.zeros((11, 16)), np.linspace(0, 1, 11), 1.0)
    with pytest.raises(ResolutionError):
        window(traj, ParabolicCylinder(0.5, 0.55, 0.2))


def test_window_rejects_cylinder_outside_extent():
    traj = Trajectory(np.zeros((11, 16)), np.linspace(0, 1, 11), 1.0)
    with pytest.raises(DomainError):
        window(traj, ParabolicCylinder(0.5, 1.5, 0.5))
    with pytest.raises(DomainError):
        window(traj, ParabolicCylinder(0.5, 0.9, 0.6))


def test_restrict_keeps_frames_and_window():
    traj = Trajectory.from_function(lambda x, t: x + t, 32, 2.0, np.linspace(0, 1, 11))
    Q = ParabolicCylinder(0.5, 1.0, 0.3 ** 0.25 * 1.0000001)
    sub = restrict(traj, Q)
    assert sub.window == (0.5, Q.r)
    assert sub.times[0] >= Q.t_bottom - 1e-12
    assert mixed_norm(sub, MixedExponents(2, 2)) <= mixed_norm(traj, MixedExponents(2, 2))


@pytest.mark.parametrize("q, qp, regime", [
    (INF, 5, Regime.SUBCRITICAL),
    (2, 8, Regime.CRITICAL),
    (INF, 4, Regime.CRITICAL),
    (5, 5, Regime.CRITICAL),
    (1, INF, Regime.EXCLUDED_ENDPOINT),
    (3, 3, Regime.SUPERCRITICAL),
    (2, 2, Regime.SUPERCRITICAL),
])
def test_criticality_table(q, qp, regime):
    assert criticality(MixedExponents(q, qp))[1] is regime


@given(st.floats(1, 50), st.floats(1.01, 50))
def test_critical_class_never_has_infinite_time_exponent_except_endpoint(q, qp):
    index, regime = criticality(MixedExponents(q, qp))
    assert index == pytest.approx(1 / q + 4 / qp)
    assert regime is not Regime.EXCLUDED_ENDPOINT


def test_exponents_validate():
    with pytest.raises(DomainError):
        MixedExponents(0.5, 2)
    with pytest.raises(DomainError):
        MixedExponents(2, 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([10 / 7, 1.6, 1.9]))
def test_interpolation_bound_dominates_target_norm(seed, q):
    """Interpolating ``L^inf_t L^2_x`` with ``L^2_t L^1_x`` bounds ``L^{q'}_t L^q_x``."""
    rng = np.random.default_rng(seed)
    times = np.linspace(0, 1, 41)
    data = rng.standard_normal((41, 32)) * np.exp(rng.standard_normal((41, 1)))
    traj = Trajectory(data, times, 1.0)
    a, b = MixedExponents(2, INF), MixedExponents(1, 2)
    theta = (1 / q - 1) / (0.5 - 1)
    target_qp = 2 / (1 - theta)
    target = MixedExponents(q, target_qp * 0.999)
    bound = interpolation_bound(mixed_norm(traj, a), a, mixed_norm(traj, b), b, target, 1.0)
    assert mixed_norm(traj, target) <= bound * (1 + 1e-12)


def test_interpolation_bound_unreachable_temporal_exponent_is_infinite():
    a, b = MixedExponents(2, INF), MixedExponents(1, 2)
    assert interpolation_bound(1.0, a, 1.0, b, MixedExponents(1.2, 50), 1.0) == INF


@pytest.mark.parametrize("q, qp", [(2.0, 8.0), (10 / 7, 40 / 3), (1.6, 32 / 3)])
def test_l16_3_2_norm_below_interpolation_of_energy_class_and_critical_norm(q, qp):
    rng = np.random.default_rng(7)
    times = np.linspace(0, 0.5, 51)
    x = np.linspace(0, 1, 64, endpoint=False)
    data = (np.outer(1 + times, np.sin(2 * np.pi * x))
            + 0.3 * rng.standard_normal((51, 64)) * np.exp(-5 * times)[:, None])
    traj = Trajectory(data, times, 1.0)
    a, b = MixedExponents(10 / 3, 10 / 3), MixedExponents(q, qp)
    target = MixedExponents(2, 16 / 3)
    bound = interpolation_bound(mixed_norm(traj, a), a, mixed_norm(traj, b), b, target, 0.5)
    assert math.isfinite(bound)
    assert mixed_norm(traj, target) <= bound * 1.05


def test_interpolation_near_q_one_only_reaches_fourteen_thirds():
    a, b = MixedExponents(10 / 3, 10 / 3), MixedExponents(1.0, INF)
    assert interpolation_bound(1.0, a, 1.0, b, MixedExponents(2, 16 / 3), 1.0) == INF
    assert math.isfinite(interpolation_bound(1.0, a, 1.0, b, MixedExponents(2, 14 / 3), 1.0))
