"""Linear-quadratic control with stale measurements.

The library couples a finite-horizon regulator with a queue that decides how
old the controller's information is allowed to be.  It provides the backward
value recursion, the age-indexed state estimator, one-step and exact queuing
policies, a Monte Carlo simulator with reproducible per-trajectory noise
streams, and the machinery to trace the average-age versus control-cost
trade-off curve.
"""

from .controller import control_input
from .estimator import ControllerInfo, estimate, estimation_error
from .model import (
    CostWeights,
    DimensionError,
    PlantModel,
    admissible_ages,
    controllability_rank,
    validate_model,
)
from .queuing import (
    DpOraclePolicy,
    GreedyPolicy,
    NoiseGrid,
    QueueState,
    QueuingPolicy,
    StateSpaceError,
    ZeroWaitPolicy,
    dp_oracle_build,
    greedy_bounded,
    greedy_choose,
    policy_from_spec,
    zero_wait,
)
from .riccati import RiccatiSolution, gamma_at, riccati_residual, solve_riccati
from .simulator import (
    EmpiricalMetrics,
    PolicyContractError,
    RngStream,
    TrajectoryRecord,
    dynamics_defect,
    empirical_metrics,
    lemma1_identity_check,
    run_many,
    run_trajectory,
)
from .tradeoff import TradeoffPoint, default_lambda_grid, emit_curve, sweep

__version__ = "0.1.0"

__all__ = [
    "CostWeights",
    "ControllerInfo",
    "DimensionError",
    "DpOraclePolicy",
    "EmpiricalMetrics",
    "GreedyPolicy",
    "NoiseGrid",
    "PlantModel",
    "PolicyContractError",
    "QueueState",
    "QueuingPolicy",
    "RiccatiSolution",
    "RngStream",
    "StateSpaceError",
    "TradeoffPoint",
    "TrajectoryRecord",
    "ZeroWaitPolicy",
    "admissible_ages",
    "dp_oracle_build",
    "control_input",
    "controllability_rank",
    "default_lambda_grid",
    "dynamics_defect",
    "emit_curve",
    "empirical_metrics",
    "estimate",
    "estimation_error",
    "gamma_at",
    "greedy_bounded",
    "greedy_choose",
    "lemma1_identity_check",
    "policy_from_spec",
    "riccati_residual",
    "run_many",
    "run_trajectory",
    "solve_riccati",
    "sweep",
    "validate_model",
    "zero_wait",
]
