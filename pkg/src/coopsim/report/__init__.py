from .console import (
    print_dp,
    print_feasibility,
    print_identities,
    print_metrics,
    print_mode_table,
    print_sweep,
)
from .csv_writer import (
    dp_frame,
    feasibility_frame,
    metrics_frame,
    sweep_frame,
    trace_frame,
    write_frame,
)

__all__ = [
    "dp_frame",
    "feasibility_frame",
    "metrics_frame",
    "print_dp",
    "print_feasibility",
    "print_identities",
    "print_metrics",
    "print_mode_table",
    "print_sweep",
    "sweep_frame",
    "trace_frame",
    "write_frame",
]
