"""CSV with a header row, 17 significant digits, ',' separators and '\\n' line ends."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ConfigError
from .ode_core import Trajectory


def write_columns(path, columns: dict[str, np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for row in data:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")
    return path


def read_columns(path) -> dict[str, np.ndarray]:
    path = Path(path)
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if data.size == 0:
        data = np.zeros((0, len(header)))
    return {name: data[:, k] for k, name in enumerate(header)}


def write_trajectory(path, traj: Trajectory) -> Path:
    return write_columns(path, {"t": traj.times, **traj.channels})


def read_trajectory(path) -> Trajectory:
    cols = read_columns(path)
    if "t" not in cols:
        raise ConfigError(f"{path} has no 't' column")
    times = cols.pop("t")
    return Trajectory(times, cols, step=float(np.mean(np.diff(times))) if times.size > 1 else None)
