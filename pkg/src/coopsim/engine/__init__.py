from .experiments import (
    FeasibilityCell,
    IdentityCheck,
    QueueGrowthFit,
    Verdict,
    check_feasibility,
    feasibility_table,
    fit_queue_growth,
    sweep_v,
    verify_identities,
)
from .simulation import (
    Access,
    Metrics,
    RelaySpec,
    SimConfig,
    Simulation,
    SlotTrace,
    SourceSpec,
    Strategy,
    TdmaSchedule,
    run,
)

__all__ = [
    "Access",
    "FeasibilityCell",
    "IdentityCheck",
    "Metrics",
    "QueueGrowthFit",
    "RelaySpec",
    "SimConfig",
    "Simulation",
    "SlotTrace",
    "SourceSpec",
    "Strategy",
    "TdmaSchedule",
    "Verdict",
    "check_feasibility",
    "feasibility_table",
    "fit_queue_growth",
    "run",
    "sweep_v",
    "verify_identities",
]
