"""
Exhaustive grid references for the slot solver and the second-stage problem

Only the phy formulas are shared with the code under test.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..dp import CooperativeTwoStage
from ..phy import (
    MODE_PRIORITY,
    Mode,
    PowerAllocation,
    amplified_mi,
    combined_mi,
    decodes,
    direct_mi,
    kappa,
    meets_rate,
    parallel_mi,
)
from ..solver import ControlAction, ModeCost, SolverInput

logger = logging.getLogger(__name__)

MAX_COMBINATIONS = 200_000_000
MAX_RELAYS = 3
# points evaluated per block of source powers
CHUNK_POINTS = 1 << 20

# grid intervals per variable, keyed by the number of free variables
DEFAULT_STEPS = {1: 1000, 2: 1000, 3: 100, 4: 100}


@dataclass(frozen=True)
class GridSpec:
    """Grid resolution: intervals per variable over [0, P_max], by variable count"""
    steps: dict[int, int] = field(default_factory=lambda: dict(DEFAULT_STEPS))

    def intervals(self, variables: int) -> int:
        if variables not in self.steps:
            raise ValueError(f"no grid resolution for {variables} variables")
        return self.steps[variables]

    def axes(self, highs: list[float]) -> list[np.ndarray]:
        n = self.intervals(len(highs))
        total = (n + 1) ** len(highs)
        if total > MAX_COMBINATIONS:
            raise ValueError(f"grid of {total} points exceeds {MAX_COMBINATIONS}")
        return [np.linspace(0.0, h, n + 1) for h in highs]

    def slack(self, highs: list[float], weights: list[float]) -> float:
        """Worst-case cost excess of the grid over the continuous optimum"""
        n = self.intervals(len(highs))
        return sum(h / n * w for h, w in zip(highs, weights))


def _mesh(axes: list[np.ndarray]) -> np.ndarray:
    if not axes:
        return np.zeros((1, 0))
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))


def _search(
    inp: SolverInput,
    mode: Mode,
    axes: list[np.ndarray],
    success: Callable[[np.ndarray], np.ndarray],
    relays: list[int],
) -> ModeCost:
    """
    Grid minimum of the slot metric over successful points

    Points are meshed one block of source powers at a time, in the same
    row-major order as a full mesh, so ties keep the first point.
    """
    weights = np.array([inp.source_weight] + [inp.relay_weights[i] for i in relays])
    rest = _mesh(axes[1:])
    block = max(1, CHUNK_POINTS // len(rest))
    best_cost, best_point = math.inf, None
    for start in range(0, len(axes[0]), block):
        source = axes[0][start:start + block]
        points = np.hstack([np.repeat(source, len(rest))[:, np.newaxis], np.tile(rest, (len(source), 1))])
        costs = np.where(success(points), points @ weights - inp.reward, math.inf)
        idx = int(np.argmin(costs))
        if costs[idx] < best_cost:
            best_cost, best_point = float(costs[idx]), points[idx]
    if best_point is None:
        return ModeCost.infeasible()
    alloc = PowerAllocation(
        source_power=float(best_point[0]),
        relay_powers={i: float(p) for i, p in zip(relays, best_point[1:])},
    )
    return ModeCost(cost=best_cost, action=ControlAction(mode=mode, alloc=alloc, scheme=inp.scheme))


def grid_mode_costs(inp: SolverInput, spec: Optional[GridSpec] = None) -> dict[Mode, ModeCost]:
    """Grid minimum of the slot metric for every mode"""
    spec = spec or GridSpec()
    state, budget, scheme = inp.state, inp.budget, inp.scheme
    W, R = budget.bandwidth, budget.rate
    relays = state.relays
    if len(relays) > MAX_RELAYS:
        raise ValueError(f"grid oracle handles at most {MAX_RELAYS} relays, got {len(relays)}")

    table = {Mode.IDLE: ModeCost(cost=0.0, action=ControlAction.idle())}

    table[Mode.DIRECT] = _search(
        inp, Mode.DIRECT, spec.axes([inp.source_max]),
        lambda points: meets_rate(direct_mi(W, points[:, 0], state.sd_gain), R), [],
    )

    best = ModeCost.infeasible()
    for relay in relays:
        def relayed(points: np.ndarray, relay=relay) -> np.ndarray:
            heard = decodes(W, R, 2, points[:, 0], state.sr_gains[relay])
            mi = combined_mi(W, 2, 0.0, 0.0, points[:, 1:], [state.rd_gains[relay]])
            return heard & meets_rate(mi, R)

        result = _search(inp, Mode.MULTIHOP, spec.axes([inp.source_max, inp.relay_max[relay]]), relayed, [relay])
        if result.cost < best.cost:
            best = result
    table[Mode.MULTIHOP] = best

    k = kappa(scheme, budget.relay_count)
    g_sr = np.array([state.sr_gains[i] for i in relays])
    g_rd = np.array([state.rd_gains[i] for i in relays])

    def cooperates(points: np.ndarray) -> np.ndarray:
        p_s, relay_p = points[:, 0], points[:, 1:]
        if scheme.amplify:
            mi = amplified_mi(W, k, p_s, state.sd_gain, relay_p, g_sr, g_rd)
        else:
            heard = decodes(W, R, k, p_s[:, np.newaxis], g_sr)
            useful = np.where(heard, relay_p, 0.0)
            formula = combined_mi if scheme.regenerative else parallel_mi
            mi = formula(W, k, p_s, state.sd_gain, useful, g_rd)
        return meets_rate(mi, R)

    axes = spec.axes([inp.source_max] + [inp.relay_max[i] for i in relays])
    table[Mode.COOPERATIVE] = _search(inp, Mode.COOPERATIVE, axes, cooperates, relays)
    return table


def grid_best_action(inp: SolverInput, spec: Optional[GridSpec] = None) -> ModeCost:
    """Least-cost mode on the grid, ties broken in the usual mode order"""
    table = grid_mode_costs(inp, spec)
    best = table[Mode.IDLE]
    for mode in MODE_PRIORITY:
        if table[mode].cost < best.cost:
            best = table[mode]
    return best


def grid_second_stage(
    model: CooperativeTwoStage,
    p_s: float,
    index: int,
    spec: Optional[GridSpec] = None,
) -> float:
    """Grid minimum of the second-stage metric over the decoded relays"""
    spec = spec or GridSpec()
    relays = model.decoded_relays(index)
    if len(relays) > MAX_RELAYS:
        raise ValueError(f"grid oracle handles at most {MAX_RELAYS} relays, got {len(relays)}")
    if not relays:
        return float(model.objective(p_s, index, np.zeros((1, 0)))[0])
    points = _mesh(spec.axes([model.relay_max[i] for i in relays]))
    best = math.inf
    for start in range(0, len(points), 4096):
        best = min(best, float(np.min(model.objective(p_s, index, points[start:start + 4096]))))
    return best
