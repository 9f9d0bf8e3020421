"""
Per-slot problem description and results
"""

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

from ..channel import ChannelState
from ..phy import LinkBudget, Mode, PowerAllocation, Scheme


@dataclass(frozen=True)
class ControlAction:
    """Mode choice plus power allocation for one slot"""
    mode: Mode
    alloc: PowerAllocation = field(default_factory=PowerAllocation)
    scheme: Optional[Scheme] = None
    # ordered relay prefix U_k the source power was sized for (DF schemes)
    decode_target: tuple[int, ...] = ()

    @classmethod
    def idle(cls) -> "ControlAction":
        return cls(mode=Mode.IDLE)

    @property
    def transmits(self) -> bool:
        return self.mode is not Mode.IDLE


@dataclass(frozen=True)
class ModeCost:
    """Drift-plus-penalty value of the best action of a mode; inf when infeasible"""
    cost: float
    action: Optional[ControlAction] = None

    @classmethod
    def infeasible(cls) -> "ModeCost":
        return cls(cost=math.inf)

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.cost)


@dataclass(frozen=True)
class SolverInput:
    """
    Everything the per-slot problem needs

    The metric weights are precomputed: source_weight = X_s + V*beta_s,
    relay_weights[i] = X_i + V*beta_i, reward = Z_s + V*alpha_s.
    """
    state: ChannelState
    budget: LinkBudget
    scheme: Scheme
    reward: float
    source_weight: float
    relay_weights: Mapping[int, float]
    source_max: float
    relay_max: Mapping[int, float]
    af_grid_points: int = 100
    af_refine: bool = False

    def __post_init__(self):
        if self.reward < 0 or self.source_weight < 0 or any(w < 0 for w in self.relay_weights.values()):
            raise ValueError("metric weights must be nonnegative")
        if self.source_max <= 0 or any(p <= 0 for p in self.relay_max.values()):
            raise ValueError("peak power limits must be positive")
        missing = self.state.available_relays - (set(self.relay_weights) & set(self.relay_max))
        if missing:
            raise ValueError(f"no weight or peak limit for relays {sorted(missing)}")
        if self.af_grid_points < 1:
            raise ValueError("af_grid_points must be at least 1")

    @classmethod
    def from_queues(
        cls,
        state: ChannelState,
        budget: LinkBudget,
        scheme: Scheme,
        *,
        z: float,
        alpha: float,
        x: Mapping[int, float],
        beta: Mapping[int, float],
        v: float,
        p_max: Mapping[int, float],
        af_grid_points: int = 100,
        af_refine: bool = False,
    ) -> "SolverInput":
        """Build the weights from raw queue values, V and the objective weights"""
        if v < 0:
            raise ValueError(f"V must be nonnegative, got {v}")
        source = state.source
        relays = state.relays
        return cls(
            state=state,
            budget=budget,
            scheme=scheme,
            reward=z + v * alpha,
            source_weight=x.get(source, 0.0) + v * beta.get(source, 0.0),
            relay_weights={i: x.get(i, 0.0) + v * beta.get(i, 0.0) for i in relays},
            source_max=p_max[source],
            relay_max={i: p_max[i] for i in relays},
            af_grid_points=af_grid_points,
            af_refine=af_refine,
        )

    def power_cost(self, alloc: PowerAllocation) -> float:
        return self.source_weight * alloc.source_power + sum(
            self.relay_weights[i] * p for i, p in alloc.relay_powers.items()
        )
