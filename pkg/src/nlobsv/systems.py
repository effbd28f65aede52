"""
Benchmark plants: the two academic examples and the magnetic bearing.

Examples 1 and 2 share the double-integrator core

    x' = A x + B * (parameter term) + g(y),   y = x1,
    A = [[0, 1], [0, 0]],  B = (1, 1),  g(y) = (-2, -1) y.

The bearing adds two flux states driven through a saturating amplifier,
a switching stabiliser and a high-gain velocity observer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

A_MATRIX = np.array([[0.0, 1.0], [0.0, 0.0]])
B_VECTOR = np.array([1.0, 1.0])
G_VECTOR = np.array([-2.0, -1.0])

POLE_TOLERANCE = 1e-12


class PoleProximityError(ArithmeticError):
    """A bearing force denominator vanished (rotor touching a magnet)."""


def _interval(value, name):
    lo, hi = (float(v) for v in value)
    if not lo <= hi:
        raise ValueError(f"{name} must satisfy lo <= hi, got {value!r}")
    return lo, hi


def _contains(interval, v):
    return interval[0] <= v <= interval[1]


def is_hurwitz(matrix) -> bool:
    return bool(np.all(np.linalg.eigvals(np.asarray(matrix, dtype=float)).real < 0))


@dataclass(frozen=True)
class ExampleSpec:
    """True parameters and admissible domains of an academic example."""

    lambda_true: float = 2.0
    theta_true: float = 1.5
    omega_lambda: tuple[float, float] = (0.5, 3.0)
    omega_theta: tuple[float, float] = (1.0, 3.0)

    kind = "example"

    def __post_init__(self):
        object.__setattr__(self, "omega_lambda", _interval(self.omega_lambda, "omega_lambda"))
        object.__setattr__(self, "omega_theta", _interval(self.omega_theta, "omega_theta"))
        if _contains(self.omega_lambda, 0.0):
            raise ValueError("omega_lambda must exclude 0")
        if not _contains(self.omega_lambda, self.lambda_true):
            raise ValueError(f"lambda_true={self.lambda_true} outside {self.omega_lambda}")
        if not _contains(self.omega_theta, self.theta_true):
            raise ValueError(f"theta_true={self.theta_true} outside {self.omega_theta}")

    def rhs(self, x, theta=None, lam=None):
        theta = self.theta_true if theta is None else theta
        lam = self.lambda_true if lam is None else lam
        return _EXAMPLE_RHS[self.kind](x, theta, lam)


@dataclass(frozen=True)
class Example1Spec(ExampleSpec):
    kind = "example1"


@dataclass(frozen=True)
class Example2Spec(ExampleSpec):
    kind = "example2"


def example1_rhs(x, theta: float, lam: float) -> np.ndarray:
    """x' = A x + B theta lam + g(y)."""
    x1, x2 = x[0], x[1]
    p = theta * lam
    return np.array([x2 + p - 2.0 * x1, p - x1])


def example2_rhs(x, theta: float, lam: float) -> np.ndarray:
    """x' = A x + B theta + (0, exp(lam)) + (-2, -1) y."""
    x1, x2 = x[0], x[1]
    return np.array([x2 + theta - 2.0 * x1, theta + math.exp(lam) - x1])


_EXAMPLE_RHS = {"example1": example1_rhs, "example2": example2_rhs}


@dataclass(frozen=True)
class BearingParams:
    """Physical constants of the magnetic bearing plus the true deviations.

    The constants of the original benchmark are not published alongside the
    model, so every value here is a configuration input. The values shipped
    in ``configs/bearing-sample.json`` are placeholders, not real hardware.
    """

    a: float
    b: float
    c: float
    R: float
    N: float
    L: float
    J: float
    V_s: float
    g_air: float
    h_flux: float = 1e5
    theta_true: float = 1.0
    lambda_true: float = 1.0

    PARAM_RANGE = (0.8, 1.2)

    def __post_init__(self):
        for name in ("a", "b", "c", "R", "N", "L", "J", "V_s", "g_air", "h_flux"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive, got {v!r}")
        for name in ("theta_true", "lambda_true"):
            if not _contains(self.PARAM_RANGE, getattr(self, name)):
                raise ValueError(f"{name} must lie in {list(self.PARAM_RANGE)}")

    @property
    def force_gain(self) -> float:
        return self.c * self.L / self.J

    @property
    def flux_rate(self) -> float:
        return self.R / self.N * self.h_flux


def saturate(u, V_s: float):
    """sign(u) * min(V_s, |u|)."""
    return np.sign(u) * np.minimum(V_s, np.abs(u))


def _denominators(y, lam, p: BearingParams):
    d2 = p.a * (y * p.L + p.g_air) + lam * p.b
    d1 = p.a * (-y * p.L + p.g_air) + lam * p.b
    if np.any(np.abs(d1) < POLE_TOLERANCE) or np.any(np.abs(d2) < POLE_TOLERANCE):
        raise PoleProximityError(f"force denominator below {POLE_TOLERANCE} at y={y!r}, lambda={lam!r}")
    return d1, d2


def bearing_phi(t, y, lam, q1, q2, p: BearingParams):
    """Normalised magnetic torque; broadcasts over array arguments.

    ``t`` is accepted for signature symmetry with the time-varying model
    and does not enter the formula.
    """
    d1, d2 = _denominators(y, lam, p)
    return p.force_gain * (q2 * q2 / (d2 * d2) - q1 * q1 / (d1 * d1))


def bearing_dphi_dlambda(t, y, lam, q1, q2, p: BearingParams):
    """Closed-form partial derivative of :func:`bearing_phi` in ``lam``."""
    d1, d2 = _denominators(y, lam, p)
    return -2.0 * p.b * p.force_gain * (q2 * q2 / d2 ** 3 - q1 * q1 / d1 ** 3)


def bearing_rhs(state, t: float, u1: float, u2: float, theta: float, lam: float,
                p: BearingParams) -> np.ndarray:
    """Derivative of (x1, x2, q1, q2)."""
    x1, x2, q1, q2 = state[0], state[1], state[2], state[3]
    phi = bearing_phi(t, x1, lam, q1, q2, p)
    rate = p.flux_rate
    return np.array([
        x2,
        phi * theta + math.sin(0.5 * t) / 1000.0,
        -rate * q1 + float(saturate(u1, p.V_s)) / p.N,
        -rate * q2 + float(saturate(u2, p.V_s)) / p.N,
    ])


@dataclass
class ControlWarnings:
    """Per-run counters of controller events that bend the control law."""

    negative_radicand: int = 0

    def as_dict(self) -> dict:
        return {"negative_radicand": self.negative_radicand}


CONTROLLER_READINGS = ("printed", "sign-consistent")


def _flux_command(q_active, target_sq, p: BearingParams, warnings):
    if target_sq < 0.0:
        if warnings is not None:
            warnings.negative_radicand += 1
        target_sq = 0.0
    return p.N * (p.R * q_active / p.N - 100.0 * (q_active - math.sqrt(target_sq)))


def switching_control(x1: float, x2_hat: float, q1: float, q2: float, p: BearingParams, *,
                      reading: str = "printed",
                      warnings: ControlWarnings | None = None) -> tuple[float, float]:
    """Switching flux controller, returns ``(u1, u2)``.

    ``reading="printed"`` follows the published law literally: for
    ``s = 2 x1 + 2 x2_hat > 0`` coil 2 is driven towards
    ``sqrt(s J / (c L) + q1**2)``, otherwise coil 1 towards
    ``sqrt(s J / (c L) + q2**2)``. That assignment makes the torque
    ``+|s|`` in both half planes, which pushes the rotor away for ``s > 0``,
    and the second radicand is negative whenever ``q2`` is small.

    ``reading="sign-consistent"`` drives the coil whose torque opposes
    ``s``; the commanded flux difference then gives
    ``phi ~= -s`` for the nominal air gap. Negative radicands cannot occur.

    A negative radicand is clamped to zero and counted in ``warnings``.
    """
    s = 2.0 * x1 + 2.0 * x2_hat
    k = p.J / (p.c * p.L)
    if reading == "printed":
        if s > 0.0:
            return 0.0, _flux_command(q2, s * k + q1 * q1, p, warnings)
        return _flux_command(q1, s * k + q2 * q2, p, warnings), 0.0
    if reading == "sign-consistent":
        if s > 0.0:
            return _flux_command(q1, s * k + q2 * q2, p, warnings), 0.0
        return 0.0, _flux_command(q2, -s * k + q1 * q1, p, warnings)
    raise ValueError(f"unknown controller reading {reading!r}; expected one of {CONTROLLER_READINGS}")


def high_gain_observer_rhs(xhat, x1: float, phi_nominal: float) -> np.ndarray:
    """Velocity observer with gains (20, 100) driven by the nominal torque."""
    err = xhat[0] - x1
    return np.array([-20.0 * err + xhat[1], -100.0 * err + phi_nominal])


def injected_matrix(l) -> np.ndarray:
    """A + l C^T for the output y = x1."""
    return A_MATRIX + np.outer(np.asarray(l, dtype=float), [1.0, 0.0])
