"""Experiment runs driven by an :class:`ExperimentConfig`; all file output lives here."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from . import svg
from .config import ExperimentConfig
from .csvio import read_columns, read_trajectory, write_columns, write_trajectory
from .errors import ConfigError
from .identifiability import (EnvelopeEstimate, MismatchFn, UPEReport, eset_for,
                              sample_envelope, upe_check)
from .ode_core import Trajectory
from .simulation import RunResult, simulate_bearing, simulate_example

log = logging.getLogger("nlobsv")

MISMATCH_KIND = {"example1": "product", "example2": "exp-additive"}


def _out(cfg: ExperimentConfig, out_dir) -> Path:
    path = Path(out_dir if out_dir is not None else cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _log_start(cfg: ExperimentConfig, what: str) -> None:
    log.info("%s: system=%s seed=%d config=%s", what, cfg.system, cfg.seed, cfg.digest())


def simulate_runs(cfg: ExperimentConfig) -> list[RunResult]:
    """One closed-loop run per configured initial estimate."""
    gains = cfg.gains()
    results = []
    for obs in cfg.initial.observers:
        state = cfg.observer_state(obs)
        if cfg.system == "bearing":
            r = simulate_bearing(cfg.bearing_params(), gains, cfg.initial.x, state,
                                 q0=cfg.initial.q, hgo0=cfg.initial.hgo, h=cfg.step,
                                 T=cfg.horizon, controller=cfg.controller,
                                 linear_part=cfg.observer_linear_part)
        else:
            r = simulate_example(cfg.example_spec(), gains, cfg.initial.x, state,
                                 h=cfg.step, T=cfg.horizon)
        r.summary["initial"] = {"theta_hat": obs.theta_hat, "lambda_hat": obs.lambda_hat}
        log.info("run %d: %s", len(results),
                 {k: r.summary[k] for k in ("converged", "theta_hat", "lambda_hat")})
        if "warnings" in r.summary:
            log.info("run %d warning counters: %s", len(results), r.summary["warnings"])
        results.append(r)
    return results


def run_simulate(cfg: ExperimentConfig, out_dir=None) -> list[dict]:
    _log_start(cfg, "simulate")
    out = _out(cfg, out_dir)
    results = simulate_runs(cfg)
    for k, r in enumerate(results):
        write_trajectory(out / f"trajectory_{k}.csv", r.trajectory)
    summaries = [r.summary for r in results]
    _write_json(out / "summary.json", {"system": cfg.system, "seed": cfg.seed,
                                        "config_digest": cfg.digest(), "runs": summaries})
    plot_simulation(cfg, [r.trajectory for r in results], out)
    return summaries


def run_envelope(cfg: ExperimentConfig, out_dir=None, threads: int = 1) -> EnvelopeEstimate:
    if cfg.system not in MISMATCH_KIND:
        raise ConfigError(f"envelope estimation is defined for example1/example2, not {cfg.system}")
    if cfg.envelope is None:
        raise ConfigError("config has no 'envelope' block")
    _log_start(cfg, "envelope")
    out = _out(cfg, out_dir)
    fn = MismatchFn(MISMATCH_KIND[cfg.system], cfg.lambda_true, cfg.theta_true)
    est = sample_envelope(fn, eset_for(fn), cfg.envelope.domain, cfg.envelope.n, cfg.seed,
                          threads=threads)
    write_columns(out / "scatter.csv", {"d_e": est.distances, "m_e": est.mismatches,
                                        "lambda_e": est.samples[:, 2], "theta_e": est.samples[:, 3]})
    d, beta = est.envelope.decimate(cfg.envelope.bins)
    write_columns(out / "envelope.csv", {"d": d, "beta_hat": beta})
    write_columns(out / "envelope_steps.csv", {"d": est.envelope.d, "beta_hat": est.envelope.values})
    _write_json(out / "envelope_summary.json", {
        "system": cfg.system, "seed": est.seed, "n": int(est.samples.shape[0]),
        "domain": {"lambda": list(est.domain[0]), "theta": list(est.domain[1])},
        "envelope_at_zero": est.envelope(0.0), "max_distance": float(est.envelope.d[-1]),
        "config_digest": cfg.digest(),
    })
    plot_envelope(out)
    return est


def run_upe(cfg: ExperimentConfig, out_dir=None, trajectory: Trajectory | None = None,
            regressor=None) -> UPEReport:
    """Excitation check on a bearing trajectory.

    Uses ``trajectory`` if given, else ``<out>/trajectory_0.csv`` if present,
    else simulates the first configured initial condition.
    """
    if cfg.upe is None:
        raise ConfigError("config has no 'upe' block")
    if cfg.system != "bearing" and regressor is None:
        raise ConfigError("the excitation check needs the bearing system")
    _log_start(cfg, "upe-check")
    out = _out(cfg, out_dir)
    if trajectory is None:
        saved = out / "trajectory_0.csv"
        if saved.exists():
            trajectory = read_trajectory(saved)
        else:
            trajectory = simulate_runs(cfg)[0].trajectory
    p = cfg.bearing_params() if cfg.bearing is not None else None
    u = cfg.upe
    report = upe_check(trajectory, u.lambda_grid, u.theta_grid, u.window, u.delta, p,
                       t_skip=u.t_skip, regressor=regressor)
    rows = report.rows
    write_columns(out / "upe.csv", {
        "lambda_prime": [r.lambda_prime for r in rows], "theta": [r.theta for r in rows],
        "min_eig": [r.min_eig for r in rows], "max_eig": [r.max_eig for r in rows],
        "pass": [float(r.min_eig >= report.delta) for r in rows],
    })
    _write_json(out / "upe_summary.json", {
        "passed": report.passed, "delta": report.delta, "window": report.window_T,
        "t_skip": report.t_skip, "min_excitation": report.min_excitation, "rows": len(rows),
        "config_digest": cfg.digest(),
    })
    log.info("upe-check: passed=%s min excitation=%.6g", report.passed, report.min_excitation)
    return report


# --- figures -------------------------------------------------------------

COLORS = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"]


def plot_simulation(cfg: ExperimentConfig, trajs: list[Trajectory], out: Path) -> None:
    if cfg.system == "bearing":
        p = cfg.bearing_params()
        th = svg.Panel(title="theta estimate", xlabel="t [s]", ylabel="theta_hat")
        lam = svg.Panel(title="lambda estimate", xlabel="t [s]", ylabel="lambda_hat")
        for k, tr in enumerate(trajs):
            th.line(tr.times, tr["theta_hat"], color=COLORS[k % len(COLORS)])
            lam.line(tr.times, tr["lambda_hat"], color=COLORS[k % len(COLORS)])
        th.hline(p.theta_true, label="true theta")
        lam.hline(p.lambda_true, label="true lambda")
        y = svg.Panel(title="rotor position", xlabel="t [s]", ylabel="x1")
        for k, tr in enumerate(trajs):
            y.line(tr.times, tr["x1"], color=COLORS[k % len(COLORS)])
        svg.save([th, lam, y], out / "estimates.svg")
        return
    spec = cfg.example_spec()
    lo, hi = spec.omega_lambda
    est = svg.Panel(title="parameter estimates", xlabel="lambda", ylabel="theta")
    grid = np.linspace(lo, hi, 400)
    if spec.kind == "example1":
        branch = spec.lambda_true * spec.theta_true / grid
    else:
        branch = spec.theta_true + np.exp(spec.lambda_true) - np.exp(grid)
    est.line(grid, branch, label="indistinguishable set", color="#1f77b4")
    est.scatter([tr["lambda_hat"][0] for tr in trajs], [tr["theta_hat"][0] for tr in trajs],
                label="initial estimate", color="#2ca02c", radius=4, hollow=True)
    est.scatter([tr.final("lambda_hat") for tr in trajs], [tr.final("theta_hat") for tr in trajs],
                label="final estimate", color="#d62728", radius=4, hollow=True)
    for tr in trajs:
        est.line(tr["lambda_hat"], tr["theta_hat"], color="#999999", width=0.8)
    x2 = svg.Panel(title="x2 and its estimate", xlabel="t [s]", ylabel="x2")
    for k, tr in enumerate(trajs):
        x2.line(tr.times, tr["x2"], color="#1f77b4", label="x2" if k == 0 else "")
        x2.line(tr.times, tr["xhat2"], color="#d62728", dash="4 3",
                label="x2 estimate" if k == 0 else "")
    svg.save([est, x2], out / "estimates.svg")


def plot_envelope(out: Path) -> None:
    sc = read_columns(out / "scatter.csv")
    env = read_columns(out / "envelope.csv")
    panel = svg.Panel(title="mismatch against distance to the indistinguishable set",
                      xlabel="d_e", ylabel="mismatch")
    panel.scatter(sc["d_e"], sc["m_e"], color="#1f77b4", radius=0.8)
    panel.line(env["d"], env["beta_hat"], label="lower envelope", color="#d62728", width=2)
    svg.save([panel], out / "envelope.svg")


def render_plots(cfg: ExperimentConfig, out_dir=None) -> list[Path]:
    """Re-render SVG figures from CSV files already present in the output directory."""
    out = _out(cfg, out_dir)
    made = []
    trajs = [read_trajectory(p) for p in sorted(out.glob("trajectory_*.csv"),
                                                 key=lambda p: int(p.stem.split("_")[1]))]
    if trajs:
        plot_simulation(cfg, trajs, out)
        made.append(out / "estimates.svg")
    if (out / "scatter.csv").exists() and (out / "envelope.csv").exists():
        plot_envelope(out)
        made.append(out / "envelope.svg")
    if not made:
        raise ConfigError(f"no CSV output to plot in {out}")
    return made
