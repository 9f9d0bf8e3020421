from .bellman import (
    DpSolution,
    MonteCarloEstimate,
    chebyshev_bound,
    exact_cost_to_go,
    exact_dp,
    mc_estimate,
    second_stage_value,
)
from .model import (
    CooperativeTwoStage,
    TabularTwoStage,
    TwoStageModel,
    coordinate_search,
    grid_search,
    sum_exponential_sf,
)
from .outcomes import Outcome, OutcomeSpace, enumerate_outcomes, first_stage_dist, snr_threshold

__all__ = [
    "CooperativeTwoStage",
    "DpSolution",
    "MonteCarloEstimate",
    "Outcome",
    "OutcomeSpace",
    "TabularTwoStage",
    "TwoStageModel",
    "chebyshev_bound",
    "coordinate_search",
    "enumerate_outcomes",
    "exact_cost_to_go",
    "exact_dp",
    "first_stage_dist",
    "grid_search",
    "mc_estimate",
    "second_stage_value",
    "snr_threshold",
    "sum_exponential_sf",
]
