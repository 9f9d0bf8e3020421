from .brute_force import GridSpec, grid_best_action, grid_mode_costs, grid_second_stage

__all__ = ["GridSpec", "grid_best_action", "grid_mode_costs", "grid_second_stage"]
