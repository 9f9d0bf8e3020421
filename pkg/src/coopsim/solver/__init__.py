from .allocation import (
    af_source_grid,
    best_action,
    bisect_level,
    cost_af,
    cost_cooperative,
    cost_direct,
    cost_idle,
    cost_multihop,
    cost_nonregdf,
    cost_regdf,
    cost_regdf_sum_power,
    min_decode_power,
    order_relays,
    solve_af_inner,
    solve_nonregdf_subproblem,
    solve_regdf_subproblem,
)
from .problem import ControlAction, ModeCost, SolverInput

__all__ = [
    "ControlAction",
    "ModeCost",
    "SolverInput",
    "af_source_grid",
    "best_action",
    "bisect_level",
    "cost_af",
    "cost_cooperative",
    "cost_direct",
    "cost_idle",
    "cost_multihop",
    "cost_nonregdf",
    "cost_regdf",
    "cost_regdf_sum_power",
    "min_decode_power",
    "order_relays",
    "solve_af_inner",
    "solve_nonregdf_subproblem",
    "solve_regdf_subproblem",
]
