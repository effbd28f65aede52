"""Acceptance suite. Each test is tagged with the criterion it belongs to; the
terminal summary prints one PASS/FAIL line per criterion."""

import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.spatial import cKDTree

from nlobsv.config import load_config
from nlobsv.csvio import read_columns
from nlobsv.identifiability import (MismatchFn, distance_to_E, eset_for, exp_filter, r1_integral,
                                    r1_series, upe_check)
from nlobsv.ode_core import Trajectory, integrate
from nlobsv.observers import ObserverState
from nlobsv.runner import run_envelope, run_upe, simulate_runs
from nlobsv.simulation import simulate_bearing, simulate_example
from nlobsv.systems import bearing_dphi_dlambda

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
EX1 = load_config(CONFIGS / "example1.json")
EX2 = load_config(CONFIGS / "example2.json")
BEAR = load_config(CONFIGS / "bearing-sample.json")

# level below which a fixed-step error channel counts as numerically zero
INTEGRATOR_TOL = 1e-8


def criterion(key, title):
    return pytest.mark.criterion(key, title)


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


# --- 1 --------------------------------------------------------------------------

C1 = criterion("1", "RK4 order: error ratio h vs h/2 in [14, 18], runtime < 1 s")


def _oscillator_error(h, T=10.0):
    traj = integrate(lambda t, x: np.array([x[1], -x[0]]), [1.0, 0.0], 0.0, T, h, {"x": 0, "v": 1})
    return math.hypot(traj.final("x") - math.cos(T), traj.final("v") + math.sin(T))


@C1
@pytest.mark.parametrize("h", [1e-2, 5e-3])
def test_c1_integrator_order(h):
    ratio = _oscillator_error(h) / _oscillator_error(h / 2)
    print(f"h={h:g}: ratio {ratio:.3f}")
    assert 14.0 <= ratio <= 18.0


@C1
def test_c1_runtime():
    _, dt = timed(lambda: [_oscillator_error(h) for h in (1e-2, 5e-3, 2.5e-3)])
    assert dt < 1.0


# --- 2 --------------------------------------------------------------------------

C2 = criterion("2", "Example 1 converges to lambda*theta = 3, |e| < 1e-4, lambda_hat in [0.5, 3], < 30 s")


@pytest.fixture(scope="session")
def ex1_runs():
    return timed(simulate_runs, EX1)


@C2
def test_c2_initial_conditions(ex1_runs):
    obs = EX1.initial.observers
    assert len(obs) >= 5
    assert all(0.5 <= o.lambda_hat <= 3.0 and 1.0 <= o.theta_hat <= 3.0 for o in obs)


@C2
def test_c2_converges_to_E(ex1_runs):
    runs, _ = ex1_runs
    for r in runs:
        tr = r.trajectory
        prod = tr.final("lambda_hat") * tr.final("theta_hat")
        tail = tr.window(tr.times[-1] - 5.0)
        print(f"lambda*theta = {prod:.9f}, trailing max |e| = {np.abs(tail['e']).max():.2e}")
        assert abs(prod - 3.0) < 0.05
        assert np.abs(tail["e"]).max() < 1e-4


@C2
def test_c2_lambda_hat_in_domain(ex1_runs):
    for r in ex1_runs[0]:
        lam = r.trajectory["lambda_hat"]
        assert np.all((lam >= 0.5) & (lam <= 3.0))


@C2
def test_c2_runtime(ex1_runs):
    assert ex1_runs[1] < 30.0


# --- 3 --------------------------------------------------------------------------

C3 = criterion("3", "Example 2 converges to theta + e^lambda, x2 estimate biased off E0")


@pytest.fixture(scope="session")
def ex2_runs():
    return simulate_runs(EX2)


@C3
def test_c3_converges_to_E(ex2_runs):
    target = EX2.theta_true + math.exp(EX2.lambda_true)
    for r in ex2_runs:
        tr = r.trajectory
        inv = tr.final("theta_hat") + math.exp(tr.final("lambda_hat"))
        assert abs(inv - target) < 0.05


@C3
def test_c3_x2_reconstructed_with_error(ex2_runs):
    # once e = 0 the first observer row forces xhat2 - x2 = theta - theta_hat
    biased = 0
    for r in ex2_runs:
        tr = r.trajectory
        tail = tr.window(tr.times[-1] - 5.0)
        steady = np.abs(tail["x2_error"]).mean()
        assert steady == pytest.approx(abs(tr.final("theta_hat") - EX2.theta_true), rel=1e-3, abs=1e-6)
        biased += steady > 10 * INTEGRATOR_TOL
    assert biased >= 1


# --- 4 --------------------------------------------------------------------------

C4 = criterion("4", "Envelope: monotone, 0 at d=0, lower bound, positive above first decile, "
                    "deterministic, < 60 s")


@pytest.fixture(scope="session")
def envelopes(tmp_path_factory):
    out = {}
    total = 0.0
    for name, cfg in (("example1", EX1), ("example2", EX2)):
        d = tmp_path_factory.mktemp(name)
        est, dt = timed(run_envelope, cfg, d)
        total += dt
        out[name] = (cfg, est, d)
    return out, total


def _gradient_bound(kind, lam_hi, th_abs):
    if kind == "example1":
        return math.hypot(lam_hi, th_abs)
    return math.hypot(1.0, math.exp(lam_hi))


@C4
def test_c4_sample_counts(envelopes):
    est = envelopes[0]
    assert est["example1"][1].samples.shape[0] == 10_000
    assert est["example2"][1].samples.shape[0] == 40_000


@C4
@pytest.mark.parametrize("name", ["example1", "example2"])
def test_c4_envelope_properties(envelopes, name):
    cfg, est, _ = envelopes[0][name]
    env = est.envelope
    d, m = est.distances, est.mismatches
    assert np.all(np.diff(env.values) >= 0)
    assert np.all(env(d) <= m)
    # the mismatch is Lipschitz, so the smallest-distance sample bounds env(0)
    k = int(np.argmin(d))
    r = d[k]
    (l0, l1), (t0, t1) = cfg.envelope.domain
    G = _gradient_bound(cfg.system, l1 + r, max(abs(t0), abs(t1)) + r)
    print(f"{name}: env(0) = {env(0.0):.3e}, resolution {G * r:.3e}")
    assert env(0.0) <= G * r
    dec = np.quantile(d, 0.1)
    assert np.all(env(d[d > dec]) > 0.0)


@C4
@pytest.mark.parametrize("name", ["example1", "example2"])
def test_c4_deterministic(envelopes, tmp_path, name):
    cfg, _, first = envelopes[0][name]
    run_envelope(cfg, tmp_path)
    for f in ("scatter.csv", "envelope.csv", "envelope_steps.csv"):
        assert (first / f).read_bytes() == (tmp_path / f).read_bytes()
    assert np.all(np.diff(read_columns(first / "envelope.csv")["beta_hat"]) >= 0)


@C4
def test_c4_runtime(envelopes):
    assert envelopes[1] < 60.0


# --- 5 --------------------------------------------------------------------------

C5 = criterion("5", "distance_to_E agrees with a 1e6-point brute-force oracle within 1e-3")


def _oracle_points(system):
    # dense curve samples, uniform in lambda' and in theta' so steep parts stay dense
    half = 500_000
    if system == "example1":
        c = 3.0
        lam = np.concatenate([np.linspace(-10, -0.01, half // 2), np.linspace(0.01, 10, half // 2)])
        th = np.concatenate([np.linspace(-40, -0.3, half // 2), np.linspace(0.3, 40, half // 2)])
        return np.vstack([np.column_stack([lam, c / lam]), np.column_stack([c / th, th])])
    c = 1.5 + math.exp(2.0)
    lam = np.linspace(-10, 10, half)
    th = np.linspace(-40.0, c - math.exp(-10.0), half)
    return np.vstack([np.column_stack([lam, c - np.exp(lam)]), np.column_stack([np.log(c - th), th])])


@C5
@pytest.mark.parametrize("name,cfg", [("example1", EX1), ("example2", EX2)])
def test_c5_distance_oracle(name, cfg):
    rng = np.random.default_rng(12345)
    (l0, l1), (t0, t1) = cfg.envelope.domain
    pts = np.column_stack([rng.uniform(l0, l1, 1000), rng.uniform(t0, t1, 1000)])
    fn = MismatchFn("product" if name == "example1" else "exp-additive", cfg.lambda_true, cfg.theta_true)
    grid = _oracle_points(name)
    assert grid.shape[0] == 1_000_000
    oracle, _ = cKDTree(grid).query(pts)
    ours = distance_to_E(pts, eset_for(fn))
    err = np.max(np.abs(ours - oracle))
    print(f"{name}: max |d - oracle| = {err:.2e}")
    assert err < 1e-3


# --- 6 --------------------------------------------------------------------------

C6 = criterion("6", "UPE machinery: (cos t, sin t) Gram min eig = pi within 1%; R1 linear in theta, "
                    "lambda'=lambda collapse at 1e-10")


def _smooth_bearing_traj(T=30.0, h=1e-3):
    t = np.arange(0.0, T + h / 2, h)
    return Trajectory(t, {"x1": 0.02 * np.sin(0.5 * t), "q1": 0.4 + 0.2 * np.cos(0.3 * t),
                          "q2": 0.5 + 0.2 * np.sin(0.9 * t)}, step=h)


@C6
def test_c6_synthetic_gram():
    traj = _smooth_bearing_traj()
    hook = lambda tr, lp, th: np.column_stack([np.cos(tr.times), np.sin(tr.times)])
    rep = upe_check(traj, [1.0], [1.0], 2 * math.pi, 0.0, BEAR.bearing_params(), regressor=hook)
    assert len(rep.rows) == 1
    assert rep.min_excitation == pytest.approx(math.pi, rel=0.01)


@C6
@pytest.mark.parametrize("lp", [0.8, 1.05, 1.2])
def test_c6_r1_linear_in_theta(lp):
    p = BEAR.bearing_params()
    traj = _smooth_bearing_traj()
    for t in (5.0, 17.3, 30.0):
        one = r1_integral(t, lp, 0.9, 1.0, traj, p)
        assert r1_integral(t, lp, 0.9, 2.5, traj, p) == pytest.approx(2.5 * one, abs=1e-10)
        assert r1_integral(t, lp, 0.9, 0.0, traj, p) == 0.0


@C6
@pytest.mark.parametrize("lam", [0.8, 0.9, 1.2])
def test_c6_r1_collapse(lam):
    p = BEAR.bearing_params()
    traj = _smooth_bearing_traj()
    r1 = r1_series(traj, lam, lam, 1.1, p)
    direct = exp_filter(traj.times, 1.1 * bearing_dphi_dlambda(traj.times, traj["x1"], lam,
                                                                traj["q1"], traj["q2"], p))
    assert np.max(np.abs(r1 - direct)) < 1e-10


# --- 7 --------------------------------------------------------------------------

C7 = criterion("7", "Bearing sample config: bounded |y|, UPE pass, theta/lambda within 2%, "
                    "lambda_hat in [0.8, 1.2], < 5 min")


@pytest.fixture(scope="session")
def bearing_runs():
    return timed(simulate_runs, BEAR)


@C7
def test_c7_y_bounded(bearing_runs):
    y0 = abs(BEAR.initial.x[0])
    for r in bearing_runs[0]:
        y = r.trajectory["x1"]
        tail = r.trajectory.window(50.0)["x1"]
        print(f"max |y| = {np.abs(y).max():.3e}, max |y| after 50 s = {np.abs(tail).max():.3e}")
        assert np.all(np.isfinite(y))
        assert np.abs(y).max() <= y0 * (1 + 1e-9)
        assert np.abs(tail).max() < 0.1 * y0


@C7
def test_c7_lambda_hat_in_range(bearing_runs):
    for r in bearing_runs[0]:
        lam = r.trajectory["lambda_hat"]
        assert np.all((lam >= 0.8) & (lam <= 1.2))


@C7
def test_c7_upe_passes(bearing_runs, tmp_path):
    rep = run_upe(BEAR, tmp_path, trajectory=bearing_runs[0][0].trajectory)
    print(f"min excitation {rep.min_excitation:.3e} vs delta {rep.delta:.1e}")
    assert rep.passed
    assert all(r.min_eig > 0 for r in rep.rows)


@C7
@pytest.mark.parametrize("k", range(len(BEAR.initial.observers)))
def test_c7_estimates_within_two_percent(bearing_runs, k):
    s = bearing_runs[0][k].summary
    print(f"theta_hat={s['theta_hat']:.4f} ({s['theta_rel_error']:.1%}), "
          f"lambda_hat={s['lambda_hat']:.4f} ({s['lambda_rel_error']:.1%})")
    assert s["theta_rel_error"] < 0.02
    assert s["lambda_rel_error"] < 0.02


@C7
def test_c7_runtime(bearing_runs):
    assert bearing_runs[1] < 300.0


# --- 8 --------------------------------------------------------------------------

C8 = criterion("8", "Frozen parameters: error channels below 1e-8 over 10 s in all systems")


@C8
@pytest.mark.parametrize("cfg", [EX1, EX2], ids=["example1", "example2"])
def test_c8_examples_frozen(cfg):
    spec = cfg.example_spec()
    x0 = cfg.initial.x
    obs = ObserverState(x0, spec.theta_true, spec.lambda_true)
    tr = simulate_example(spec, cfg.gains(), x0, obs, h=cfg.step, T=10.0).trajectory
    for ch in ("e", "x2_error"):
        assert np.abs(tr[ch]).max() < 1e-8
    assert np.abs(tr["lambda_hat"] - spec.lambda_true).max() < 1e-8
    assert np.abs(tr["theta_hat"] - spec.theta_true).max() < 1e-8


@C8
def test_c8_bearing_frozen():
    p = BEAR.bearing_params()
    x0 = BEAR.initial.x
    obs = ObserverState(x0, p.theta_true, p.lambda_true)
    tr = simulate_bearing(p, BEAR.gains(), x0, obs, q0=BEAR.initial.q, hgo0=BEAR.initial.hgo,
                          h=BEAR.step, T=10.0, controller=BEAR.controller,
                          linear_part=BEAR.observer_linear_part).trajectory
    for ch in ("e", "zeta2_error"):
        assert np.abs(tr[ch]).max() < 1e-8
    assert np.abs(tr["lambda_hat"] - p.lambda_true).max() < 1e-8
