"""
Quantum random walk search on the hypercube with a generalized Householder coin.

This package provides:
- A fast simulator of the search (standard and alternating oracle schedules)
- Neighbor-measurement aggregates and measurement budgets
- Phase sweeps along dependence laws and robustness metrics
- Hill-function fits, secondary fits and large-m extrapolation
"""

from .config import ExperimentConfig
from .coins import (
    CoinSpec,
    DependenceLaw,
    LawKind,
    apply_householder_block,
    coin_matrix,
    zeta_of_phi,
)
from .walk import (
    RunConfig,
    SimulationResult,
    WalkState,
    apply_conditional_coin,
    apply_shift,
    iteration_count,
    run,
    run_alternating,
    run_standard,
    uniform_initial_state,
)
from .neighbors import (
    NeighborAggregate,
    aggregate,
    hamming_neighbors,
    measurement_budget,
    neighbor_count,
)
from .robustness import (
    ProbabilityCurve,
    capital_lambda,
    lambda_curves,
    phi_grid,
    robustness_epsilon,
    sweep_heatmap,
    sweep_phi,
)
from .hill import (
    HillFit,
    SecondaryFit,
    epsilon_tilde,
    extrapolate,
    hill_eval,
    hill_fit,
    robustness_ratio,
    secondary_fit,
)

__version__ = "1.0.0"

__all__ = [
    # Config
    "ExperimentConfig",
    # Coin
    "CoinSpec",
    "DependenceLaw",
    "LawKind",
    "apply_householder_block",
    "coin_matrix",
    "zeta_of_phi",
    # Walk
    "RunConfig",
    "SimulationResult",
    "WalkState",
    "apply_conditional_coin",
    "apply_shift",
    "iteration_count",
    "run",
    "run_alternating",
    "run_standard",
    "uniform_initial_state",
    # Neighborhood
    "NeighborAggregate",
    "aggregate",
    "hamming_neighbors",
    "measurement_budget",
    "neighbor_count",
    # Robustness
    "ProbabilityCurve",
    "capital_lambda",
    "lambda_curves",
    "phi_grid",
    "robustness_epsilon",
    "sweep_heatmap",
    "sweep_phi",
    # Hill regression
    "HillFit",
    "SecondaryFit",
    "epsilon_tilde",
    "extrapolate",
    "hill_eval",
    "hill_fit",
    "robustness_ratio",
    "secondary_fit",
]
