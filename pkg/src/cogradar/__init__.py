"""Cognitive MIMO radar: SARSA-driven transmit beamforming in 2D AR clutter."""

from .agent import AgentConfig, QTable
from .array import AngleGrid, ArrayGeometry, SpatialFrequency, make_grid
from .beamform import BeamWeights, max_power_weights, omni_weights
from .clutter import DisturbanceModel, paper_model
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateEstimatorError,
    DomainError,
    ValidationError,
)
from .numerics import RngStream, chi2_threshold, marcum_q1
from .sim import Scenario, Target, paper_scenario, run_episode, run_monte_carlo, run_omni_baseline, run_paired

__version__ = "0.1.0"

__all__ = [
    "AgentConfig",
    "QTable",
    "AngleGrid",
    "ArrayGeometry",
    "SpatialFrequency",
    "make_grid",
    "BeamWeights",
    "max_power_weights",
    "omni_weights",
    "DisturbanceModel",
    "paper_model",
    "ConfigError",
    "ConvergenceError",
    "DegenerateEstimatorError",
    "DomainError",
    "ValidationError",
    "RngStream",
    "chi2_threshold",
    "marcum_q1",
    "Scenario",
    "Target",
    "paper_scenario",
    "run_episode",
    "run_monte_carlo",
    "run_omni_baseline",
    "run_paired",
]
