from .drift_plus_penalty import (
    ControllerParams,
    DriftPlusPenaltyController,
    PerformanceBound,
    VirtualQueues,
    decide,
    performance_bound,
    power_by_node,
    solver_input,
    update_queues,
)

__all__ = [
    "ControllerParams",
    "DriftPlusPenaltyController",
    "PerformanceBound",
    "VirtualQueues",
    "decide",
    "performance_bound",
    "power_by_node",
    "solver_input",
    "update_queues",
]
