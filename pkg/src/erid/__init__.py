"""Experience-replay innovative dynamics (ERID) for two-player matrix games."""

from .agents import (CrossLearningAgent, EridAgent, HedgeAgent, ProtocolKind, StepBoundError,
                     cross_learning_step, erid_delta, erid_step, hedge_step, max_stable_alpha)
from .dynamics import (BoxBounds, Dynamics, DynamicsKind, IntegrationError, OdeConfig, integrate,
                       replicator_invariant, revision_delta, vector_field)
from .games import (Game2P, GameSchedule, Matchup, PayoffRange, ScheduleKind, biased_rps,
                    expected_payoffs, load_game, matching_pennies, payoff_at, payoff_range,
                    scaled_rps, scaled_rps_equilibrium, symmetric_game)
from .harness import (AgentKind, AgentSpec, DriftReport, ExperimentConfig, compare_to_ode,
                      cross_learning_drift_validate, drift_validate, run_learning, run_replicas,
                      running_average_policy)
from .output import read_trajectory_csv, write_manifest, write_trajectory_csv
from .metrics import MetricSample, best_response_value, nash_conv, relative_nash_conv
from .replay import AverageRewards, ReplayBuffer, average_rewards
from .simplex import (DegenerateInputError, PolicyProfile, SimplexVector, project_to_simplex,
                      simplex_distance)
from .svg import render_svg, ternary_xy, write_svg
from .trajectory import Trajectory

__all__ = [
    "AgentKind", "AgentSpec", "average_rewards", "AverageRewards", "best_response_value",
    "biased_rps", "BoxBounds", "compare_to_ode", "cross_learning_drift_validate",
    "cross_learning_step", "CrossLearningAgent", "DegenerateInputError", "drift_validate",
    "DriftReport", "Dynamics", "DynamicsKind", "erid_delta", "erid_step", "EridAgent",
    "expected_payoffs", "ExperimentConfig", "Game2P", "GameSchedule", "hedge_step", "HedgeAgent",
    "integrate", "IntegrationError", "load_game", "matching_pennies", "Matchup", "max_stable_alpha",
    "MetricSample", "nash_conv", "OdeConfig", "payoff_at", "payoff_range", "PayoffRange",
    "PolicyProfile", "project_to_simplex", "ProtocolKind", "read_trajectory_csv",
    "relative_nash_conv", "render_svg", "ReplayBuffer", "replicator_invariant", "revision_delta",
    "run_learning", "run_replicas", "running_average_policy", "scaled_rps",
    "scaled_rps_equilibrium", "ScheduleKind", "simplex_distance", "SimplexVector", "StepBoundError",
    "symmetric_game", "ternary_xy", "Trajectory", "vector_field", "write_manifest", "write_svg",
    "write_trajectory_csv",
]

__version__ = "0.1.0"
