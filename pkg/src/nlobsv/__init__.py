"""Adaptive observers and identifiability checks for systems nonlinear in the parameters."""

from .errors import ConfigError, TrajectoryGapError
from .ode_core import IntegrationDiverged, Trajectory, integrate, rk4_step
from .systems import (BearingParams, Example1Spec, Example2Spec, PoleProximityError)
from .observers import ObserverGains, ObserverState

__all__ = [
    "BearingParams", "ConfigError", "Example1Spec", "Example2Spec", "IntegrationDiverged",
    "ObserverGains", "ObserverState", "PoleProximityError", "Trajectory", "TrajectoryGapError",
    "integrate", "rk4_step",
]
