"""Closed-loop runs: plant and observer stacked into one RK4 state."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ode_core import Trajectory, integrate
from .observers import (ObserverGains, ObserverState, bearing_observer_rhs,
                        convergence_time, example_observer_rhs, lambda_from_phase)
from .systems import (BearingParams, ControlWarnings, ExampleSpec, bearing_phi,
                      bearing_rhs, high_gain_observer_rhs, switching_control)

EXAMPLE_STATE = ("x1", "x2", "xhat1", "xhat2", "theta_hat", "sigma")
BEARING_STATE = ("x1", "x2", "q1", "q2", "hgo1", "hgo2", "zeta1", "zeta2",
                 "theta_hat", "m11", "m21", "sigma")


@dataclass
class RunResult:
    trajectory: Trajectory
    summary: dict = field(default_factory=dict)


def parameter_invariant(kind: str, lam, theta):
    """The combination of (lambda, theta) that the output determines."""
    if kind == "example1":
        return lam * theta
    return theta + np.exp(lam)


def simulate_example(spec: ExampleSpec, gains: ObserverGains, x0, obs0: ObserverState,
                     h: float = 1e-3, T: float = 40.0, t0: float = 0.0) -> RunResult:
    """Run an academic example with its adaptive observer."""
    z0 = np.concatenate([np.asarray(x0, dtype=float), obs0.example_array(spec.omega_lambda)])
    theta, lam = spec.theta_true, spec.lambda_true

    def rhs(t, z):
        dx = spec.rhs(z[:2], theta, lam)
        dobs = example_observer_rhs(z[2:], z[0], spec, gains)
        return np.concatenate([dx, dobs])

    lam_hat = lambda ts, Z: lambda_from_phase(Z[:, 5], spec.omega_lambda)
    record = {
        "x1": 0, "x2": 1, "xhat1": 2, "xhat2": 3, "theta_hat": 4,
        "lambda_hat": lam_hat,
        "e": lambda ts, Z: Z[:, 2] - Z[:, 0],
        "x2_error": lambda ts, Z: Z[:, 3] - Z[:, 1],
        "invariant": lambda ts, Z: parameter_invariant(spec.kind, lam_hat(ts, Z), Z[:, 4]),
    }
    traj = integrate(rhs, z0, t0, t0 + T, h, record, names=EXAMPLE_STATE)
    return RunResult(traj, summarize_example(traj, spec))


def summarize_example(traj: Trajectory, spec: ExampleSpec) -> dict:
    target = float(parameter_invariant(spec.kind, spec.lambda_true, spec.theta_true))
    tc = convergence_time(traj.times, traj["e"])
    lam = traj["lambda_hat"]
    lo, hi = spec.omega_lambda
    return {
        "system": spec.kind,
        "converged": tc is not None,
        "t_converged": tc,
        "lambda_hat": traj.final("lambda_hat"),
        "theta_hat": traj.final("theta_hat"),
        "invariant": traj.final("invariant"),
        "invariant_target": target,
        "invariant_error": abs(traj.final("invariant") - target),
        "final_abs_e": abs(traj.final("e")),
        "final_x2_error": traj.final("x2_error"),
        "max_abs_error": float(max(np.abs(traj["e"]).max(), np.abs(traj["x2_error"]).max())),
        "lambda_hat_in_domain": bool(np.all((lam >= lo) & (lam <= hi))),
    }


def simulate_bearing(p: BearingParams, gains: ObserverGains, x0, obs0: ObserverState, *,
                     q0=(0.0, 0.0), hgo0=None, h: float = 1e-3, T: float = 100.0,
                     t0: float = 0.0, controller: str = "sign-consistent",
                     linear_part: str = "chain") -> RunResult:
    """Run the bearing with controller, high-gain observer and adaptive observer.

    The controller is sampled at grid points and held over each step.
    ``controller="off"`` applies u1 = u2 = 0.
    """
    x0 = np.asarray(x0, dtype=float)
    hgo0 = x0 if hgo0 is None else np.asarray(hgo0, dtype=float)
    z0 = np.concatenate([x0, np.asarray(q0, dtype=float), hgo0, obs0.bearing_array()])
    theta, lam = p.theta_true, p.lambda_true
    warnings = ControlWarnings()
    held = [0.0, 0.0]
    u_log: list[tuple[float, float]] = []

    def control(z, count):
        if controller == "off":
            return 0.0, 0.0
        return switching_control(z[0], z[5], z[2], z[3], p, reading=controller,
                                 warnings=warnings if count else None)

    def pre_step(t, z):
        held[0], held[1] = control(z, True)
        u_log.append((held[0], held[1]))

    def rhs(t, z):
        y = z[0]
        plant = bearing_rhs(z[:4], t, held[0], held[1], theta, lam, p)
        phi_nom = bearing_phi(t, y, 1.0, z[2], z[3], p)
        hgo = high_gain_observer_rhs(z[4:6], y, phi_nom)
        obs = bearing_observer_rhs(z[6:], y, t, p, gains, z[2], z[3], linear_part=linear_part)
        return np.concatenate([plant, hgo, obs])

    def u_channel(k):
        def f(ts, Z):
            # the last grid point is never stepped from; evaluate its command without counting
            return np.array([u[k] for u in u_log] + [control(Z[-1], False)[k]])
        return f

    record = {
        "x1": 0, "x2": 1, "q1": 2, "q2": 3, "hgo1": 4, "hgo2": 5,
        "zeta1": 6, "zeta2": 7, "theta_hat": 8, "m21": 10,
        "lambda_hat": lambda ts, Z: lambda_from_phase(Z[:, 11], BearingParams.PARAM_RANGE),
        "e": lambda ts, Z: Z[:, 6] - Z[:, 0],
        "zeta2_error": lambda ts, Z: Z[:, 7] - (Z[:, 1] - Z[:, 10] * theta),
        "u1": u_channel(0), "u2": u_channel(1),
    }
    traj = integrate(rhs, z0, t0, t0 + T, h, record, names=BEARING_STATE, pre_step=pre_step)
    return RunResult(traj, summarize_bearing(traj, p, warnings))


def summarize_bearing(traj: Trajectory, p: BearingParams, warnings: ControlWarnings) -> dict:
    lo, hi = BearingParams.PARAM_RANGE
    lam = traj["lambda_hat"]
    tc = convergence_time(traj.times, traj["e"])
    th, lh = traj.final("theta_hat"), traj.final("lambda_hat")
    return {
        "system": "bearing",
        "converged": tc is not None,
        "t_converged": tc,
        "theta_hat": th,
        "lambda_hat": lh,
        "theta_rel_error": abs(th - p.theta_true) / p.theta_true,
        "lambda_rel_error": abs(lh - p.lambda_true) / p.lambda_true,
        "max_abs_y": float(np.abs(traj["x1"]).max()),
        "final_abs_e": abs(traj.final("e")),
        "max_abs_error": float(max(np.abs(traj["e"]).max(), np.abs(traj["zeta2_error"]).max())),
        "lambda_hat_in_domain": bool(np.all((lam >= lo) & (lam <= hi))),
        "warnings": warnings.as_dict(),
    }
