"""
Adaptive observers estimating the state together with (theta, lambda).

theta enters linearly and is adapted by a gradient law on the output
error. lambda enters nonlinearly; its estimate is confined to the
admissible interval by writing it as a cosine of a phase sigma, and the
phase advances only while the output error is nonzero.

State layouts
-------------
Examples 1-2 observer:  [xhat1, xhat2, theta_hat, sigma]
Bearing observer:       [zeta1, zeta2, theta_hat, m11, m21, sigma]
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .systems import (ExampleSpec, BearingParams, bearing_phi, injected_matrix,
                      is_hurwitz)

CONVERGENCE_THRESHOLD = 1e-4
CONVERGENCE_WINDOW = 5.0


@dataclass(frozen=True)
class ObserverGains:
    gamma_theta: float
    gamma: float
    l: tuple[float, float] = (-2.0, -1.0)

    def __post_init__(self):
        if not self.gamma_theta > 0:
            raise ValueError(f"gamma_theta must be positive, got {self.gamma_theta!r}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma!r}")
        l = tuple(float(v) for v in self.l)
        if len(l) != 2:
            raise ValueError("l must have two entries")
        object.__setattr__(self, "l", l)
        if not is_hurwitz(injected_matrix(l)):
            raise ValueError(f"A + l C^T is not Hurwitz for l={l}")


@dataclass(frozen=True)
class ObserverState:
    """Initial observer state; ``lambda_hat`` is converted to a phase."""

    xhat: tuple[float, float]
    theta_hat: float
    lambda_hat: float
    m: tuple[float, float] = (0.0, 0.0)

    def example_array(self, interval) -> np.ndarray:
        return np.array([*self.xhat, self.theta_hat, phase_from_lambda(self.lambda_hat, interval)])

    def bearing_array(self, interval=BearingParams.PARAM_RANGE) -> np.ndarray:
        return np.array([*self.xhat, self.theta_hat, *self.m,
                         phase_from_lambda(self.lambda_hat, interval)])


def lambda_from_phase(sigma, omega_lambda):
    """lo + (hi - lo) (cos(sigma) + 1) / 2; the image is exactly [lo, hi]."""
    lo, hi = omega_lambda
    # clip guards the last ulp, keeping the estimate inside the interval
    return np.clip(lo + (hi - lo) * (np.cos(sigma) + 1.0) / 2.0, lo, hi)


def phase_from_lambda(lam: float, omega_lambda) -> float:
    """Phase in [0, pi] whose image under :func:`lambda_from_phase` is ``lam``."""
    lo, hi = omega_lambda
    if not lo <= lam <= hi:
        raise ValueError(f"lambda={lam!r} outside {list(omega_lambda)}")
    if hi == lo:
        return 0.0
    c = 2.0 * (lam - lo) / (hi - lo) - 1.0
    return math.acos(min(1.0, max(-1.0, c)))


def search_phase_rhs(e, gamma: float):
    """sigma' = gamma e^2."""
    return gamma * e * e


def example_observer_rhs(obs, y: float, spec: ExampleSpec, gains: ObserverGains) -> np.ndarray:
    """Derivative of [xhat1, xhat2, theta_hat, sigma] for Example 1 or 2."""
    xh1, xh2, th, sigma = obs[0], obs[1], obs[2], obs[3]
    lam = float(lambda_from_phase(sigma, spec.omega_lambda))
    e = xh1 - y
    l1, l2 = gains.l
    if spec.kind == "example1":
        drive = th * lam
        d1 = xh2 + drive - 2.0 * y + l1 * e
        d2 = drive - y + l2 * e
        dth = -gains.gamma_theta * e * lam
    elif spec.kind == "example2":
        d1 = xh2 + th - 2.0 * y + l1 * e
        d2 = th + math.exp(lam) - y + l2 * e
        dth = -gains.gamma_theta * e
    else:
        raise ValueError(f"unsupported example kind {spec.kind!r}")
    return np.array([d1, d2, dth, search_phase_rhs(e, gains.gamma)])


def bearing_filter_rhs(m, phi_at_lambda_hat: float) -> np.ndarray:
    """m11' = 0, m21' = -m21 + phi."""
    return np.array([0.0, -m[1] + phi_at_lambda_hat])


OBSERVER_LINEAR_PARTS = ("chain", "printed")


def bearing_observer_rhs(obs, y: float, t: float, p: BearingParams, gains: ObserverGains,
                         q1: float, q2: float, *, linear_part: str = "chain") -> np.ndarray:
    """Derivative of [zeta1, zeta2, theta_hat, m11, m21, sigma].

    With ``linear_part="chain"`` the zeta copy uses A = [[0, 1], [0, 0]],
    for which (y, x2 - m21 theta) solves the noise-free copy exactly.
    ``"printed"`` uses diag(0, 1) literally; its zeta2 mode grows like e^t.
    """
    z1, z2, th, m21, sigma = obs[0], obs[1], obs[2], obs[4], obs[5]
    lam = float(lambda_from_phase(sigma, BearingParams.PARAM_RANGE))
    e = z1 - y
    l1, l2 = gains.l
    drive = m21 * th
    if linear_part == "chain":
        lin1, lin2 = z2, 0.0
    elif linear_part == "printed":
        lin1, lin2 = 0.0, z2
    else:
        raise ValueError(f"unknown linear part {linear_part!r}; expected one of {OBSERVER_LINEAR_PARTS}")
    phi = float(bearing_phi(t, y, lam, q1, q2, p))
    dm = bearing_filter_rhs((obs[3], m21), phi)
    return np.array([
        lin1 + l1 * e + drive,
        lin2 + l2 * e + drive + math.sin(0.5 * t) / 1000.0,
        -gains.gamma_theta * e * m21,
        dm[0],
        dm[1],
        search_phase_rhs(e, gains.gamma),
    ])


def convergence_time(times, e, threshold: float = CONVERGENCE_THRESHOLD,
                     window: float = CONVERGENCE_WINDOW) -> float | None:
    """Start of the final stretch with |e| < threshold, if it spans ``window``.

    Returns None when the trailing stretch is shorter than ``window``.
    """
    times = np.asarray(times)
    bad = np.nonzero(~(np.abs(e) < threshold))[0]
    start = times[0] if bad.size == 0 else (times[bad[-1] + 1] if bad[-1] + 1 < times.size else None)
    if start is None or times[-1] - start < window:
        return None
    return float(start)
