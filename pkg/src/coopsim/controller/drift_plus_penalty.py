"""
Virtual queues and the per-slot drift-plus-penalty decision rule
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

from ..channel import ChannelState
from ..phy import LinkBudget, Mode, PowerAllocation, Scheme
from ..solver import ControlAction, ModeCost, SolverInput, best_action

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VirtualQueues:
    """Reliability queues Z_s per source and power queues X_i per node"""
    z: Mapping[int, float] = field(default_factory=dict)
    x: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if any(v < 0 for v in self.z.values()) or any(v < 0 for v in self.x.values()):
            raise ValueError("virtual queues must be nonnegative")

    @classmethod
    def zeros(cls, sources: Iterable[int], nodes: Iterable[int]) -> "VirtualQueues":
        return cls(z={s: 0.0 for s in sources}, x={i: 0.0 for i in nodes})


@dataclass(frozen=True)
class ControllerParams:
    """
    Control parameter V and the per-node constraint data

    rho, lam and alpha are keyed by source; p_avg, p_max and beta by every
    node that may transmit (sources and relays).
    """
    v: float
    rho: Mapping[int, float]
    lam: Mapping[int, float]
    alpha: Mapping[int, float]
    p_avg: Mapping[int, float]
    p_max: Mapping[int, float]
    beta: Mapping[int, float]

    def __post_init__(self):
        if self.v < 0:
            raise ValueError(f"V must be nonnegative, got {self.v}")
        for name, table in (("rho", self.rho), ("lam", self.lam)):
            if any(not 0.0 <= value <= 1.0 for value in table.values()):
                raise ValueError(f"{name} values must lie in [0, 1]")
        if any(a < 0 for a in self.alpha.values()) or any(b < 0 for b in self.beta.values()):
            raise ValueError("alpha and beta must be nonnegative")
        if set(self.p_avg) != set(self.p_max):
            raise ValueError("p_avg and p_max must cover the same nodes")
        for node, p_avg in self.p_avg.items():
            if p_avg <= 0 or self.p_max[node] <= 0:
                raise ValueError(f"power limits of node {node} must be positive")
            if p_avg > self.p_max[node]:
                raise ValueError(f"node {node}: p_avg {p_avg} exceeds p_max {self.p_max[node]}")

    @property
    def sources(self) -> list[int]:
        return sorted(self.rho)

    @property
    def nodes(self) -> list[int]:
        return sorted(self.p_max)

    def with_v(self, v: float) -> "ControllerParams":
        return replace(self, v=v)


@dataclass(frozen=True)
class PerformanceBound:
    """Performance-bound constants reported beside measured averages"""
    source: int
    b: float
    v: float
    bound_utility_gap: float
    # divide by the slackness epsilon to get the average-queue bound
    queue_bound_scale: float


def update_queues(
    q: VirtualQueues,
    outcomes: Mapping[int, int],
    arrivals: Mapping[int, int],
    powers: Mapping[int, float],
    params: ControllerParams,
) -> VirtualQueues:
    """
    End-of-slot queue update

    Z_s <- max(Z_s - Phi_s, 0) + rho_s A_s and X_i <- max(X_i - P_avg_i, 0) + P_i,
    with Phi_s = 0 for sources that did not transmit and P_i = 0 for silent nodes.
    """
    z = {
        s: max(value - outcomes.get(s, 0), 0.0) + params.rho[s] * arrivals.get(s, 0)
        for s, value in q.z.items()
    }
    x = {
        i: max(value - params.p_avg[i], 0.0) + powers.get(i, 0.0)
        for i, value in q.x.items()
    }
    return VirtualQueues(z=z, x=x)


def solver_input(
    q: VirtualQueues,
    state: ChannelState,
    params: ControllerParams,
    budget: LinkBudget,
    scheme: Scheme,
    *,
    af_grid_points: int = 100,
    af_refine: bool = False,
) -> SolverInput:
    """Per-slot problem weighted by the current queues"""
    source = state.source
    return SolverInput.from_queues(
        state,
        budget.for_state(state),
        scheme,
        z=q.z.get(source, 0.0),
        alpha=params.alpha.get(source, 0.0),
        x=q.x,
        beta=params.beta,
        v=params.v,
        p_max=params.p_max,
        af_grid_points=af_grid_points,
        af_refine=af_refine,
    )


def decide(
    q: VirtualQueues,
    state: ChannelState,
    params: ControllerParams,
    budget: LinkBudget,
    scheme: Scheme,
    *,
    arrived: bool = True,
    modes: Optional[Iterable[Mode]] = None,
    af_grid_points: int = 100,
    af_refine: bool = False,
) -> tuple[ControlAction, dict[Mode, ModeCost]]:
    """
    Drift-plus-penalty action for the scheduled source

    Args:
        q: Queues at the start of the slot
        state: Channel state of the scheduled source
        params: Controller parameters
        budget: Link budget; its relay count is normalized to the slot
        scheme: Cooperative scheme
        arrived: Whether the source has a packet this slot
        modes: Allowed transmission modes (idle is always allowed)

    Returns:
        The chosen action and the per-mode cost table (empty when idle by
        lack of a packet)
    """
    if not arrived:
        return ControlAction.idle(), {}
    inp = solver_input(q, state, params, budget, scheme, af_grid_points=af_grid_points, af_refine=af_refine)
    best, table = best_action(inp, modes)
    return best.action, table


def performance_bound(params: ControllerParams, source: int) -> PerformanceBound:
    """
    B = [1 + lam^2 rho^2 + sum_i (P_avg_i^2 + P_max_i^2)] / 2 for one source

    The power sum runs over every node with a power constraint.
    """
    lam, rho = params.lam[source], params.rho[source]
    power_terms = sum(params.p_avg[i] ** 2 + params.p_max[i] ** 2 for i in params.nodes)
    b = 0.5 * (1.0 + (lam * rho) ** 2 + power_terms)
    v = params.v
    scale = b + v * (
        params.alpha.get(source, 0.0)
        + sum(params.beta.get(i, 0.0) * params.p_max[i] for i in params.nodes)
    )
    return PerformanceBound(
        source=source,
        b=b,
        v=v,
        bound_utility_gap=b / v if v > 0 else math.inf,
        queue_bound_scale=scale,
    )


class DriftPlusPenaltyController:
    """Owns the virtual queues and applies the decision rule slot by slot"""

    def __init__(
        self,
        params: ControllerParams,
        budget: LinkBudget,
        scheme: Scheme,
        modes: Optional[Iterable[Mode]] = None,
        af_grid_points: int = 100,
        af_refine: bool = False,
    ):
        self.params = params
        self.budget = budget
        self.scheme = scheme
        self.modes = None if modes is None else frozenset(modes)
        self.af_grid_points = af_grid_points
        self.af_refine = af_refine
        self.queues = VirtualQueues.zeros(params.sources, params.nodes)

    def decide(self, state: ChannelState, arrived: bool = True) -> tuple[ControlAction, dict[Mode, ModeCost]]:
        return decide(
            self.queues, state, self.params, self.budget, self.scheme,
            arrived=arrived, modes=self.modes,
            af_grid_points=self.af_grid_points, af_refine=self.af_refine,
        )

    def update(
        self,
        outcomes: Mapping[int, int],
        arrivals: Mapping[int, int],
        powers: Mapping[int, float],
    ) -> VirtualQueues:
        self.queues = update_queues(self.queues, outcomes, arrivals, powers, self.params)
        return self.queues

    def constants(self) -> list[PerformanceBound]:
        return [performance_bound(self.params, s) for s in self.params.sources]


def power_by_node(alloc: PowerAllocation, source: int) -> dict[int, float]:
    """Flatten an allocation to a node -> power map"""
    powers = {source: alloc.source_power} if alloc.source_power > 0 else {}
    powers.update({i: p for i, p in alloc.relay_powers.items() if p > 0})
    return powers
