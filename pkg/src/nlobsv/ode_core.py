"""
Fixed-step RK4 integration and trajectory recording.

The integrator stores every grid-point state; named channels are evaluated
afterwards on the stacked state array, so recording costs one vectorised
call per channel instead of one Python call per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np

Rhs = Callable[[float, np.ndarray], np.ndarray]
# int -> state index; callable -> f(times, states) with states of shape (n, dim)
ChannelSpec = Union[int, Callable[[np.ndarray, np.ndarray], np.ndarray]]

DIVERGENCE_BOUND = 1e12


class IntegrationDiverged(RuntimeError):
    """A state entry became non-finite or exceeded the divergence bound."""

    def __init__(self, channel: str, t: float, value: float):
        self.channel = channel
        self.t = t
        self.value = value
        super().__init__(
            f"integration diverged: channel {channel!r} = {value!r} at t = {t:.9g} s"
        )


def _check_finite(x: np.ndarray, t: float, names: Sequence[str] | None,
                  bound: float) -> None:
    # NaN fails the comparison, so one test covers both cases
    ok = np.abs(x) <= bound
    if ok.all():
        return
    k = int(np.argmin(ok))
    name = names[k] if names is not None else f"x[{k}]"
    raise IntegrationDiverged(name, t, float(x[k]))


def rk4_step(rhs: Rhs, t: float, x: np.ndarray, h: float, *,
             names: Sequence[str] | None = None,
             bound: float = DIVERGENCE_BOUND) -> np.ndarray:
    """Advance ``x`` from ``t`` to ``t + h`` with the classical RK4 scheme.

    Raises
    ------
    IntegrationDiverged
        If any entry of the result is non-finite or larger than ``bound``
        in magnitude. The reported time is ``t + h``.
    """
    if not h > 0:
        raise ValueError(f"step must be positive, got {h!r}")
    x = np.asarray(x, dtype=float)
    half = 0.5 * h
    k1 = rhs(t, x)
    k2 = rhs(t + half, x + half * k1)
    k3 = rhs(t + half, x + half * k2)
    k4 = rhs(t + h, x + h * k3)
    out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _check_finite(out, t + h, names, bound)
    return out


@dataclass
class Trajectory:
    """Time-indexed record of named signals from one simulation run."""

    times: np.ndarray
    channels: dict[str, np.ndarray]
    states: np.ndarray | None = field(default=None, repr=False)
    step: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or self.times.size == 0:
            raise ValueError("times must be a non-empty 1-D sequence")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        chans = {}
        for name, values in self.channels.items():
            values = np.asarray(values, dtype=float)
            if values.shape != self.times.shape:
                raise ValueError(
                    f"channel {name!r} has {values.size} samples, expected {self.times.size}")
            chans[name] = values
        self.channels = chans

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    def __contains__(self, name: str) -> bool:
        return name in self.channels

    def __len__(self) -> int:
        return self.times.size

    @property
    def names(self) -> list[str]:
        return list(self.channels)

    def final(self, name: str) -> float:
        return float(self.channels[name][-1])

    def window(self, t_start: float) -> "Trajectory":
        """Sub-trajectory with ``times >= t_start``."""
        keep = self.times >= t_start
        return Trajectory(self.times[keep], {k: v[keep] for k, v in self.channels.items()},
                          None if self.states is None else self.states[keep], self.step)

    def equals(self, other: "Trajectory") -> bool:
        """Bitwise equality of times and channels."""
        if self.names != other.names:
            return False
        if not np.array_equal(self.times, other.times):
            return False
        return all(np.array_equal(self[k], other[k]) for k in self.names)


def grid_size(t0: float, tf: float, h: float) -> int:
    """Number of steps of size ``h`` spanning ``[t0, tf]``.

    Raises ValueError unless ``h`` divides the span up to rounding.
    """
    if not h > 0:
        raise ValueError(f"step must be positive, got {h!r}")
    if not tf > t0:
        raise ValueError(f"need tf > t0, got t0={t0!r}, tf={tf!r}")
    span = tf - t0
    n = int(round(span / h))
    if n < 1 or abs(n * h - span) > 1e-9 * max(span, 1.0):
        raise ValueError(f"step {h!r} does not divide the interval length {span!r}")
    return n


def integrate(rhs: Rhs, x0, t0: float, tf: float, h: float,
              record: Mapping[str, ChannelSpec], *,
              names: Sequence[str] | None = None,
              pre_step: Callable[[float, np.ndarray], None] | None = None,
              bound: float = DIVERGENCE_BOUND) -> Trajectory:
    """Integrate ``rhs`` on the uniform grid ``t0 + k h`` and record channels.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, x) -> dx/dt``.
    x0 : array_like
        Initial state.
    record : mapping
        Channel name to either a state index or a vectorised function
        ``f(times, states)`` evaluated once on the stacked states.
    names : sequence of str, optional
        State component names, used in divergence diagnostics.
    pre_step : callable, optional
        Called as ``pre_step(t, x)`` at every grid point before the step is
        taken; used to sample-and-hold discontinuous feedback.
    """
    if not record:
        raise ValueError("record must name at least one channel")
    n = grid_size(t0, tf, h)
    x = np.array(x0, dtype=float)
    if names is not None and len(names) != x.size:
        raise ValueError("names must match the state dimension")
    _check_finite(x, t0, names, bound)
    times = t0 + h * np.arange(n + 1)
    states = np.empty((n + 1, x.size))
    states[0] = x
    for k in range(n):
        t = times[k]
        if pre_step is not None:
            pre_step(t, x)
        x = rk4_step(rhs, t, x, h, names=names, bound=bound)
        states[k + 1] = x
    channels = {}
    for cname, spec in record.items():
        if isinstance(spec, (int, np.integer)):
            channels[cname] = states[:, int(spec)].copy()
        else:
            channels[cname] = np.asarray(spec(times, states), dtype=float)
    return Trajectory(times, channels, states, h)
