"""JSON experiment configuration: parsing, validation, serialisation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigError
from .ode_core import grid_size
from .observers import OBSERVER_LINEAR_PARTS, ObserverGains, ObserverState
from .systems import CONTROLLER_READINGS, BearingParams, Example1Spec, Example2Spec

SYSTEMS = ("example1", "example2", "bearing")
BEARING_KEYS = ("a", "b", "c", "R", "N", "L", "J", "V_s", "g_air", "h_flux")


def _pair(v, name):
    try:
        lo, hi = (float(x) for x in v)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a pair of numbers, got {v!r}") from None
    return lo, hi


def _interval(v, name):
    lo, hi = _pair(v, name)
    if not lo <= hi:
        raise ConfigError(f"{name} is empty: {v!r}")
    return lo, hi


@dataclass
class EnvelopeSettings:
    n: int = 10_000
    domain: tuple = ((0.5, 3.0), (-10.0, 10.0))
    bins: int = 100

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise ConfigError(f"envelope.n must be a positive integer, got {self.n!r}")
        if not isinstance(self.bins, int) or self.bins < 1:
            raise ConfigError(f"envelope.bins must be a positive integer, got {self.bins!r}")
        self.domain = (_interval(self.domain[0], "envelope.domain.lambda"),
                       _interval(self.domain[1], "envelope.domain.theta"))


@dataclass
class UPESettings:
    lambda_grid: tuple
    theta_grid: tuple
    window: float
    delta: float
    t_skip: float = 0.0

    def __post_init__(self):
        self.lambda_grid = tuple(float(v) for v in self.lambda_grid)
        self.theta_grid = tuple(float(v) for v in self.theta_grid)
        if not self.lambda_grid or not self.theta_grid:
            raise ConfigError("upe grids must be non-empty")
        lo, hi = BearingParams.PARAM_RANGE
        for v in self.lambda_grid + self.theta_grid:
            if not lo <= v <= hi:
                raise ConfigError(f"upe grid value {v} outside [{lo}, {hi}]")
        if not self.window > 0:
            raise ConfigError("upe.window must be positive")
        if not self.delta >= 0:
            raise ConfigError("upe.delta must be non-negative")


@dataclass
class ObserverInit:
    theta_hat: float
    lambda_hat: float


@dataclass
class InitialConditions:
    x: tuple
    xhat: tuple
    observers: tuple
    q: tuple = (0.0, 0.0)
    hgo: tuple | None = None

    def __post_init__(self):
        self.x = _pair(self.x, "initial.x")
        self.xhat = _pair(self.xhat, "initial.xhat")
        self.q = _pair(self.q, "initial.q")
        if self.hgo is not None:
            self.hgo = _pair(self.hgo, "initial.hgo")
        self.observers = tuple(o if isinstance(o, ObserverInit) else ObserverInit(**o)
                               for o in self.observers)
        if not self.observers:
            raise ConfigError("initial.observers must list at least one initial estimate")


@dataclass
class ExperimentConfig:
    system: str
    lambda_true: float
    theta_true: float
    gamma_theta: float
    gamma: float
    initial: InitialConditions
    step: float
    horizon: float
    l: tuple = (-2.0, -1.0)
    seed: int = 0
    omega_lambda: tuple = (0.5, 3.0)
    omega_theta: tuple = (1.0, 3.0)
    envelope: EnvelopeSettings | None = None
    upe: UPESettings | None = None
    bearing: dict | None = None
    controller: str = "sign-consistent"
    observer_linear_part: str = "chain"
    output_dir: str = "out"

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ConfigError(f"system must be one of {SYSTEMS}, got {self.system!r}")
        self.l = _pair(self.l, "gains.l")
        self.omega_lambda = _interval(self.omega_lambda, "domains.omega_lambda")
        self.omega_theta = _interval(self.omega_theta, "domains.omega_theta")
        if not (self.step > 0 and self.horizon > 0):
            raise ConfigError("integration step and horizon must be positive")
        try:
            grid_size(0.0, self.horizon, self.step)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.controller not in CONTROLLER_READINGS + ("off",):
            raise ConfigError(f"controller must be one of {CONTROLLER_READINGS + ('off',)}")
        if self.observer_linear_part not in OBSERVER_LINEAR_PARTS:
            raise ConfigError(f"observer_linear_part must be one of {OBSERVER_LINEAR_PARTS}")
        if self.system == "bearing":
            if self.bearing is None:
                raise ConfigError("bearing system needs a 'bearing' parameter block")
            missing = [k for k in BEARING_KEYS[:-1] if k not in self.bearing]
            if missing:
                raise ConfigError(f"bearing block is missing {missing}")
            unknown = set(self.bearing) - set(BEARING_KEYS)
            if unknown:
                raise ConfigError(f"bearing block has unknown keys {sorted(unknown)}")
            self.bearing = {k: float(v) for k, v in self.bearing.items()}
            self.omega_lambda = self.omega_theta = BearingParams.PARAM_RANGE
        # build the typed objects once so every constraint is checked up front
        try:
            self.gains()
            if self.system == "bearing":
                self.bearing_params()
            else:
                self.example_spec()
            for o in self.initial.observers:
                self.observer_state(o)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    # typed views ---------------------------------------------------------

    def gains(self) -> ObserverGains:
        return ObserverGains(self.gamma_theta, self.gamma, self.l)

    def example_spec(self):
        cls = Example1Spec if self.system == "example1" else Example2Spec
        return cls(self.lambda_true, self.theta_true, self.omega_lambda, self.omega_theta)

    def bearing_params(self) -> BearingParams:
        return BearingParams(**self.bearing, theta_true=self.theta_true,
                             lambda_true=self.lambda_true)

    def observer_state(self, o: ObserverInit) -> ObserverState:
        lo, hi = self.omega_lambda
        if not lo <= o.lambda_hat <= hi:
            raise ConfigError(f"initial lambda_hat={o.lambda_hat} outside [{lo}, {hi}]")
        return ObserverState(self.initial.xhat, o.theta_hat, o.lambda_hat)

    def with_seed(self, seed: int | None) -> "ExperimentConfig":
        return self if seed is None else replace(self, seed=int(seed))

    # serialisation -------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "system": self.system,
            "truth": {"lambda": self.lambda_true, "theta": self.theta_true},
            "domains": {"omega_lambda": list(self.omega_lambda),
                        "omega_theta": list(self.omega_theta)},
            "gains": {"gamma_theta": self.gamma_theta, "gamma": self.gamma, "l": list(self.l)},
            "initial": {
                "x": list(self.initial.x),
                "xhat": list(self.initial.xhat),
                "q": list(self.initial.q),
                "hgo": None if self.initial.hgo is None else list(self.initial.hgo),
                "observers": [{"theta_hat": o.theta_hat, "lambda_hat": o.lambda_hat}
                              for o in self.initial.observers],
            },
            "integration": {"step": self.step, "horizon": self.horizon},
            "seed": self.seed,
            "controller": self.controller,
            "observer_linear_part": self.observer_linear_part,
            "output_dir": self.output_dir,
        }
        if self.envelope is not None:
            e = self.envelope
            d["envelope"] = {"n": e.n, "bins": e.bins,
                             "domain": {"lambda": list(e.domain[0]), "theta": list(e.domain[1])}}
        if self.upe is not None:
            u = self.upe
            d["upe"] = {"lambda_grid": list(u.lambda_grid), "theta_grid": list(u.theta_grid),
                        "window": u.window, "delta": u.delta, "t_skip": u.t_skip}
        if self.bearing is not None:
            d["bearing"] = dict(self.bearing)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            env = d.get("envelope")
            if env is not None:
                env = EnvelopeSettings(n=env["n"], bins=env.get("bins", 100),
                                       domain=(env["domain"]["lambda"], env["domain"]["theta"]))
            upe = d.get("upe")
            if upe is not None:
                upe = UPESettings(**upe)
            dom = d.get("domains", {})
            ini = d["initial"]
            return cls(
                system=d["system"],
                lambda_true=float(d["truth"]["lambda"]),
                theta_true=float(d["truth"]["theta"]),
                gamma_theta=float(d["gains"]["gamma_theta"]),
                gamma=float(d["gains"]["gamma"]),
                l=d["gains"].get("l", (-2.0, -1.0)),
                initial=InitialConditions(x=ini["x"], xhat=ini["xhat"],
                                          observers=ini["observers"],
                                          q=ini.get("q", (0.0, 0.0)), hgo=ini.get("hgo")),
                step=float(d["integration"]["step"]),
                horizon=float(d["integration"]["horizon"]),
                seed=int(d.get("seed", 0)),
                omega_lambda=dom.get("omega_lambda", (0.5, 3.0)),
                omega_theta=dom.get("omega_theta", (1.0, 3.0)),
                envelope=env,
                upe=upe,
                bearing=d.get("bearing"),
                controller=d.get("controller", "sign-consistent"),
                observer_linear_part=d.get("observer_linear_part", "chain"),
                output_dir=d.get("output_dir", "out"),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed config: {exc!r}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return ExperimentConfig.from_json(text)
