import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlobsv.ode_core import IntegrationDiverged, Trajectory, grid_size, integrate, rk4_step


def harmonic(t, x):
    return np.array([x[1], -x[0]])


def test_rk4_single_step_matches_taylor_to_fifth_order():
    h = 0.1
    x = rk4_step(harmonic, 0.0, np.array([1.0, 0.0]), h)
    # RK4 reproduces the Taylor series of cos/sin through h^4
    assert x[0] == pytest.approx(1 - h**2 / 2 + h**4 / 24, abs=1e-12)
    assert x[1] == pytest.approx(-(h - h**3 / 6), abs=1e-12)


def test_rk4_is_exact_for_cubic_in_time():
    rhs = lambda t, x: np.array([3 * t**2])
    x = rk4_step(rhs, 1.0, np.array([0.0]), 0.5)
    assert x[0] == pytest.approx(1.5**3 - 1.0, abs=1e-14)


def test_rk4_rejects_nonpositive_step():
    with pytest.raises(ValueError):
        rk4_step(harmonic, 0.0, np.zeros(2), 0.0)


def test_divergence_reports_channel_and_time():
    rhs = lambda t, x: np.array([0.0, 1e15])
    with pytest.raises(IntegrationDiverged) as err:
        rk4_step(rhs, 2.0, np.zeros(2), 0.5, names=("a", "b"))
    assert err.value.channel == "b"
    assert err.value.t == 2.5


def test_nan_counts_as_divergence():
    with pytest.raises(IntegrationDiverged):
        rk4_step(lambda t, x: x * np.nan, 0.0, np.ones(1), 0.1)


def test_integrate_grid_and_channels():
    traj = integrate(harmonic, [1.0, 0.0], 0.0, 1.0, 0.01, {"x": 0, "energy": lambda t, Z: (Z**2).sum(1)})
    assert len(traj) == 101
    assert traj.times[0] == 0.0 and traj.times[-1] == pytest.approx(1.0)
    assert traj["x"][-1] == pytest.approx(math.cos(1.0), abs=1e-9)
    assert np.allclose(traj["energy"], 1.0, atol=1e-9)


def test_integrate_requires_record():
    with pytest.raises(ValueError):
        integrate(harmonic, [1.0, 0.0], 0.0, 1.0, 0.1, {})


def test_step_must_divide_span():
    with pytest.raises(ValueError):
        grid_size(0.0, 1.0, 0.3)
    assert grid_size(0.0, 40.0, 1e-3) == 40_000


def test_pre_step_sees_every_grid_point():
    seen = []
    integrate(harmonic, [1.0, 0.0], 0.0, 0.5, 0.1, {"x": 0}, pre_step=lambda t, x: seen.append(t))
    assert np.allclose(seen, [0.0, 0.1, 0.2, 0.3, 0.4])


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.0], {"a": [1, 2]})
    with pytest.raises(ValueError):
        Trajectory([0.0, 1.0], {"a": [1, 2, 3]})


@given(st.floats(-5, 5), st.floats(-5, 5), st.sampled_from([1e-2, 5e-3, 2e-3]))
def test_linear_decay_matches_exponential(x0, rate_scale, h):
    # x' = -k x has exact solution x0 exp(-k t); RK4 error is O(h^4)
    k = abs(rate_scale) + 0.1
    traj = integrate(lambda t, x: -k * x, [x0], 0.0, 1.0, h, {"x": 0})
    assert traj.final("x") == pytest.approx(x0 * math.exp(-k), abs=1e-7 * (1 + abs(x0)))


@given(st.integers(1, 400), st.floats(1e-3, 1.0))
def test_grid_size_roundtrip(n, h):
    assert grid_size(0.0, n * h, h) == n


@given(st.floats(0.0, 3.0))
def test_window_keeps_tail(t):
    traj = integrate(harmonic, [1.0, 0.0], 0.0, 3.0, 0.1, {"x": 0})
    tail = traj.window(t)
    assert tail.times[0] >= t and np.all(np.isin(tail.times, traj.times))


def test_zero_field_is_fixed():
    x = rk4_step(lambda t, x: np.zeros(2), 0.0, np.array([1.0, 2.0]), 0.1)
    assert x.tolist() == [1.0, 2.0]
    traj = integrate(lambda t, x: np.zeros(2), [1.0, 2.0], 0.0, 1.0, 0.5, {"a": 0, "b": 1})
    assert len(traj) == 3 and np.all(traj["a"] == 1.0) and np.all(traj["b"] == 2.0)


def test_chain_step_is_exact():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    x = rk4_step(lambda t, x: A @ x, 0.0, np.array([0.0, 1.0]), 0.5)
    assert x.tolist() == [0.5, 1.0]


def test_exponential_step():
    x = rk4_step(lambda t, x: -x, 0.0, np.array([1.0]), 0.1)
    assert x[0] == pytest.approx(math.exp(-0.1), abs=1e-7)


def test_oscillator_full_period():
    traj = integrate(harmonic, [1.0, 0.0], 0.0, 2 * math.pi, 2 * math.pi / 6283, {"x": 0, "v": 1})
    assert abs(traj.final("x") - 1.0) < 1e-8 and abs(traj.final("v")) < 1e-8
