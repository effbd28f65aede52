"""
Identifiability tools.

* parametrisation mismatch and the indistinguishability curve where it vanishes,
* point-to-curve distances (dense grid plus golden-section refinement),
* Monte Carlo scatter of (distance, mismatch) and its lower envelope,
* the filtered sensitivity integral R1 and a windowed-Gram excitation check.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError, TrajectoryGapError
from .ode_core import Trajectory
from .systems import BearingParams, bearing_dphi_dlambda, bearing_phi

MISMATCH_KINDS = ("product", "exp-additive", "custom")
INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class MismatchFn:
    """|p(lambda, theta) - p(lambda_e, theta_e)| for the parametrisation p."""

    kind: str
    true_lambda: float
    true_theta: float
    func: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in MISMATCH_KINDS:
            raise ConfigError(f"unknown mismatch kind {self.kind!r}")
        if self.kind == "custom" and self.func is None:
            raise ConfigError("custom mismatch needs func(lam, theta)")

    def parametrization(self, lam, theta):
        if self.kind == "product":
            return lam * theta
        if self.kind == "exp-additive":
            return theta + np.exp(lam)
        return self.func(lam, theta)

    def __call__(self, lambda_e, theta_e):
        ref = self.parametrization(self.true_lambda, self.true_theta)
        return np.abs(ref - self.parametrization(lambda_e, theta_e))


def mismatch(fn: MismatchFn, lambda_e, theta_e):
    return fn(lambda_e, theta_e)


@dataclass(frozen=True)
class Branch:
    """One smooth piece theta' = psi(lambda') of the indistinguishability set."""

    psi: Callable[[np.ndarray], np.ndarray]
    lo: float
    hi: float

    def points(self, n: int) -> np.ndarray:
        lam = np.linspace(self.lo, self.hi, n)
        return np.column_stack([lam, self.psi(lam)])


@dataclass(frozen=True)
class ESetSpec:
    branches: tuple[Branch, ...]

    def __post_init__(self):
        if not self.branches:
            raise ConfigError("indistinguishability set has no branches")
        for b in self.branches:
            if not b.hi > b.lo:
                raise ConfigError(f"empty branch domain [{b.lo}, {b.hi}]")


def eset_for(fn: MismatchFn, span: float = 10.0, cut: float = 0.01) -> ESetSpec:
    """Explicit branches of {mismatch = 0} for the built-in parametrisations."""
    lam, theta = fn.true_lambda, fn.true_theta
    if fn.kind == "product":
        c = lam * theta
        psi = lambda s: c / s
        # the hyperbola has a pole at lambda' = 0: two isolated branches
        return ESetSpec((Branch(psi, -span, -cut), Branch(psi, cut, span)))
    if fn.kind == "exp-additive":
        c = theta + math.exp(lam)
        return ESetSpec((Branch(lambda s: c - np.exp(s), -span, span),))
    raise ConfigError("custom mismatch functions need an explicit ESetSpec")


def _branch_distance_sq(pts: np.ndarray, branch: Branch, n_grid: int, tol: float) -> np.ndarray:
    grid = np.linspace(branch.lo, branch.hi, n_grid)
    gpsi = branch.psi(grid)
    lam_e, th_e = pts[:, :1], pts[:, 1:]
    d2 = (lam_e - grid) ** 2 + (th_e - gpsi) ** 2
    idx = np.argmin(d2, axis=1)
    best = d2[np.arange(pts.shape[0]), idx]

    a = grid[np.maximum(idx - 1, 0)]
    b = grid[np.minimum(idx + 1, n_grid - 1)]
    lam_e, th_e = pts[:, 0], pts[:, 1]
    f = lambda s: (lam_e - s) ** 2 + (th_e - branch.psi(s)) ** 2
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    # stop on the chord length of the bracket so steep branches are refined as far as flat ones
    chord = lambda a, b: np.hypot(b - a, branch.psi(b) - branch.psi(a))
    active = chord(a, b) > tol
    while active.any():
        # freeze converged points so each result is independent of its chunk
        left = (fc < fd) & active
        right = ~(fc < fd) & active
        a, b = np.where(right, c, a), np.where(left, d, b)
        new = np.where(left, b - INVPHI * (b - a), a + INVPHI * (b - a))
        fnew = f(new)
        c, d, fc, fd = (np.where(left, new, np.where(right, d, c)),
                        np.where(left, c, np.where(right, new, d)),
                        np.where(left, fnew, np.where(right, fd, fc)),
                        np.where(left, fc, np.where(right, fnew, fd)))
        active &= chord(a, b) > tol
    mid = 0.5 * (a + b)
    return np.minimum(best, f(mid))


def distance_to_E(point, eset: ESetSpec, *, n_grid: int = 10_000, tol: float = 1e-6,
                  chunk: int = 256):
    """Euclidean distance from point(s) ``(lambda_e, theta_e)`` to the set.

    Accepts a single pair or an ``(n, 2)`` array; returns a float or an array.
    """
    pts = np.asarray(point, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    out = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], chunk):
        block = pts[start:start + chunk]
        d2 = np.full(block.shape[0], np.inf)
        for br in eset.branches:
            d2 = np.minimum(d2, _branch_distance_sq(block, br, n_grid, tol))
        out[start:start + chunk] = np.sqrt(d2)
    return float(out[0]) if single else out


@dataclass(frozen=True)
class LowerEnvelope:
    """Suffix-minimum step function: env(d) = min{m_i : d_i >= d}.

    Undefined (``inf``) beyond the largest sampled distance.
    """

    d: np.ndarray
    values: np.ndarray

    def __call__(self, d):
        idx = np.searchsorted(self.d, np.asarray(d, dtype=float), side="left")
        padded = np.append(self.values, np.inf)
        out = padded[idx]
        return float(out) if np.ndim(out) == 0 else out

    def graph(self) -> np.ndarray:
        return np.column_stack([self.d, self.values])

    def decimate(self, bins: int = 100) -> tuple[np.ndarray, np.ndarray]:
        """Values at ``bins`` left bin edges over [0, max d]; still a lower bound."""
        edges = np.linspace(0.0, self.d[-1], bins + 1)[:-1]
        return edges, self(edges)


def extract_lower_envelope(samples) -> LowerEnvelope:
    arr = np.asarray(samples, dtype=float).reshape(-1, 2)
    if arr.shape[0] == 0:
        raise ValueError("need at least one sample")
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    d, m = arr[order, 0], arr[order, 1]
    suffix = np.minimum.accumulate(m[::-1])[::-1]
    return LowerEnvelope(d, suffix)


@dataclass
class EnvelopeEstimate:
    samples: np.ndarray  # columns: d_e, m_e, lambda_e, theta_e
    envelope: LowerEnvelope
    seed: int
    domain: tuple[tuple[float, float], tuple[float, float]]

    @property
    def distances(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def mismatches(self) -> np.ndarray:
        return self.samples[:, 1]


def sample_envelope(fn: MismatchFn, eset: ESetSpec, domain, n: int, seed: int, *,
                    threads: int = 1, n_grid: int = 10_000) -> EnvelopeEstimate:
    """Uniform Monte Carlo over ``domain = ((lam_lo, lam_hi), (th_lo, th_hi))``.

    All samples are drawn up front from one PCG64 stream, lambda then theta,
    so the result depends on ``seed`` only, not on ``threads``.
    """
    if n < 1:
        raise ConfigError(f"sample count must be >= 1, got {n}")
    (l0, l1), (t0, t1) = domain
    if not (l1 >= l0 and t1 >= t0):
        raise ConfigError(f"empty sampling domain {domain!r}")
    rng = np.random.default_rng(seed)
    lam = rng.uniform(l0, l1, n)
    th = rng.uniform(t0, t1, n)
    pts = np.column_stack([lam, th])

    pieces = np.array_split(np.arange(n), max(1, min(threads, n)))
    work = lambda ix: distance_to_E(pts[ix], eset, n_grid=n_grid)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, pieces))
    else:
        parts = [work(ix) for ix in pieces]
    d = np.concatenate(parts)
    m = fn(lam, th)
    samples = np.column_stack([d, m, lam, th])
    return EnvelopeEstimate(samples, extract_lower_envelope(samples[:, :2]), seed,
                            ((float(l0), float(l1)), (float(t0), float(t1))))


# --- excitation -----------------------------------------------------------

def uniform_step(times) -> float:
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise TrajectoryGapError("need at least two samples")
    steps = np.diff(times)
    h = float(np.mean(steps))
    if np.max(np.abs(steps - h)) > 1e-6 * h:
        raise TrajectoryGapError("trajectory is not uniformly sampled")
    return h


def exp_filter(times, f) -> np.ndarray:
    """Trapezoid rule for int_{t0}^{t} exp(-(t - tau)) f(tau) dtau at every grid time.

    Uses the exact recursion I_{k+1} = r I_k + h/2 (r f_k + f_{k+1}), r = e^{-h}.
    """
    h = uniform_step(times)
    f = np.asarray(f, dtype=float)
    r = math.exp(-h)
    b = [0.5 * h, 0.5 * h * r]
    out, _ = lfilter(b, [1.0, -r], f, zi=[-b[0] * f[0]])
    return out


def _signals(traj: Trajectory):
    y = traj["x1"] if "x1" in traj else traj["y"]
    return traj.times, y, traj["q1"], traj["q2"]


def m21_series(traj: Trajectory, lambda_prime: float, p: BearingParams) -> np.ndarray:
    """m21(t, [lambda', y]): unit low-pass of phi(t, y(t), lambda') from zero."""
    times, y, q1, q2 = _signals(traj)
    return exp_filter(times, bearing_phi(times, y, lambda_prime, q1, q2, p))


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre_01(n: int):
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = ((x + 1.0) / 2.0, w / 2.0)
    return _GL_CACHE[n]


def _dphi(times, y, s, q1, q2, p, derivative: str, fd_step: float):
    if derivative == "analytic":
        return bearing_dphi_dlambda(times, y, s, q1, q2, p)
    if derivative == "fd":
        return (bearing_phi(times, y, s + fd_step, q1, q2, p)
                - bearing_phi(times, y, s - fd_step, q1, q2, p)) / (2.0 * fd_step)
    raise ValueError(f"unknown derivative mode {derivative!r}")


def r1_series(traj: Trajectory, lambda_prime: float, lam: float, theta: float,
              p: BearingParams, *, derivative: str = "analytic", nodes: int = 16,
              fd_step: float = 1e-6) -> np.ndarray:
    """R1(t, lambda', lambda, theta) at every trajectory time.

    The xi-integral over s = lambda' xi + (1 - xi) lambda uses Gauss-Legendre
    nodes; the tau-integral uses :func:`exp_filter`.
    """
    times, y, q1, q2 = _signals(traj)
    xi, w = _gauss_legendre_01(nodes)
    acc = np.zeros_like(times)
    for xk, wk in zip(xi, w):
        s = lambda_prime * xk + (1.0 - xk) * lam
        acc += wk * _dphi(times, y, s, q1, q2, p, derivative, fd_step)
    return exp_filter(times, theta * acc)


def r1_integral(t: float, lambda_prime: float, lam: float, theta: float, y_traj: Trajectory,
                p: BearingParams, **kwargs) -> float:
    times = y_traj.times
    if not times[0] <= t <= times[-1]:
        raise TrajectoryGapError(f"t={t} outside trajectory span [{times[0]}, {times[-1]}]")
    series = r1_series(y_traj, lambda_prime, lam, theta, p, **kwargs)
    return float(np.interp(t, times, series))


def window_grams(times, v, window_T: float):
    """Gram matrices int_{t}^{t+T} v v^T over all grid window starts.

    Returns ``(starts, grams)`` with ``grams`` of shape (k, 2, 2).
    """
    h = uniform_step(times)
    v = np.asarray(v, dtype=float)
    steps = int(round(window_T / h))
    if steps < 1 or steps > v.shape[0] - 1:
        raise ConfigError(f"window {window_T} s does not fit in trajectory of {times[-1] - times[0]} s")
    prods = v[:, :, None] * v[:, None, :]
    cum = np.concatenate([np.zeros((1, 2, 2)),
                          np.cumsum(0.5 * h * (prods[1:] + prods[:-1]), axis=0)])
    grams = cum[steps:] - cum[:-steps]
    return np.asarray(times)[: grams.shape[0]], grams


def sym2_min_eig(grams) -> np.ndarray:
    a, b, c = grams[..., 0, 0], grams[..., 0, 1], grams[..., 1, 1]
    return 0.5 * (a + c) - np.sqrt(0.25 * (a - c) ** 2 + b * b)


def sym2_max_eig(grams) -> np.ndarray:
    a, b, c = grams[..., 0, 0], grams[..., 0, 1], grams[..., 1, 1]
    return 0.5 * (a + c) + np.sqrt(0.25 * (a - c) ** 2 + b * b)


def min_window_excitation(times, v, window_T: float) -> float:
    """Smallest eigenvalue of the windowed Gram, minimised over window starts."""
    _, grams = window_grams(times, v, window_T)
    return float(np.min(sym2_min_eig(grams)))


@dataclass
class UPERow:
    lambda_prime: float
    theta: float
    min_eig: float
    max_eig: float


@dataclass
class UPEReport:
    rows: list[UPERow]
    delta: float
    window_T: float
    t_skip: float

    @property
    def passed(self) -> bool:
        return all(r.min_eig >= self.delta for r in self.rows)

    @property
    def min_excitation(self) -> float:
        return min(r.min_eig for r in self.rows)


def upe_check(traj: Trajectory, lambda_grid: Sequence[float], theta_grid: Sequence[float],
              window_T: float, delta: float, p: BearingParams, *, t_skip: float = 0.0,
              regressor: Callable | None = None) -> UPEReport:
    """Windowed-Gram persistent-excitation test of (m21(lambda'), R1).

    Filters start from zero at the first sample; windows starting before
    ``t_skip`` are ignored. ``regressor(traj, lambda', theta) -> (n, 2)``
    replaces the bearing regressor (used to inject synthetic signals).
    """
    if window_T <= 0:
        raise ConfigError("window_T must be positive")
    if traj.times[-1] - max(traj.times[0], t_skip) < window_T:
        raise ConfigError(
            f"window {window_T} s is longer than the usable trajectory "
            f"[{max(traj.times[0], t_skip)}, {traj.times[-1]}]")
    rows = []
    for lp in lambda_grid:
        m21 = None if regressor is not None else m21_series(traj, lp, p)
        for th in theta_grid:
            if regressor is not None:
                v = np.asarray(regressor(traj, lp, th), dtype=float)
            else:
                v = np.column_stack([m21, r1_series(traj, lp, p.lambda_true, th, p)])
            starts, grams = window_grams(traj.times, v, window_T)
            keep = starts >= t_skip - 1e-12
            rows.append(UPERow(float(lp), float(th), float(np.min(sym2_min_eig(grams[keep]))),
                               float(np.max(sym2_max_eig(grams[keep])))))
    return UPEReport(rows, float(delta), float(window_T), float(t_skip))
