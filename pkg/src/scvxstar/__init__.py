"""Successive convexification with augmented-Lagrangian multiplier updates."""
from .driver import (
    Algorithm,
    AlgorithmConfig,
    IterationRecord,
    SolveResult,
    Status,
    acceptance_ratio,
    multiplier_update_criterion,
    solve,
    step_metrics,
    update_delta,
    update_multipliers,
    update_trust_region,
)
from .penalty import (
    PenaltyMode,
    PenaltyState,
    augmented_objective,
    infeasibility,
    penalty_al,
    penalty_l1,
)
from .problem import (
    ConvexBlock,
    DimensionError,
    EvaluationError,
    ProblemDefinition,
    SOCConstraint,
    check_jacobians,
    evaluate,
)
from .subproblem import ConvexSubproblem, LinearModel, build_subproblem, linearize, solve_subproblem

__version__ = "0.1.0"
