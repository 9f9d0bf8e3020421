"""
Minimum drift-plus-penalty cost for each transmission mode under known channels
"""

import logging
import math
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from ..channel import ChannelState
from ..phy import MODE_PRIORITY, LinkBudget, Mode, PowerAllocation, Scheme, kappa
from .problem import ControlAction, ModeCost, SolverInput

logger = logging.getLogger(__name__)

# floor for zero power weights in the water-filling levels
WEIGHT_FLOOR = 1e-9
RESIDUAL_TOLERANCE = 1e-10
MAX_ITERATIONS = 200


def _coop_kappa(inp: SolverInput) -> int:
    return kappa(inp.scheme, inp.budget.relay_count)


def _finish(inp: SolverInput, mode: Mode, alloc: PowerAllocation, prefix: Sequence[int] = ()) -> ModeCost:
    action = ControlAction(mode=mode, alloc=alloc, scheme=inp.scheme, decode_target=tuple(prefix))
    return ModeCost(cost=inp.power_cost(alloc) - inp.reward, action=action)


def bisect_level(residual: Callable[[float], float], tolerance: float) -> float:
    """
    Smallest dual level meeting a monotone constraint

    Args:
        residual: Nondecreasing in the level, negative at 0, nonnegative
            somewhere above
        tolerance: Stop once the residual at the feasible end is this small

    Returns:
        A level whose residual lies in [0, tolerance] (or the tightest
        feasible level after MAX_ITERATIONS halvings)
    """
    lo, hi = 0.0, 1.0
    for _ in range(MAX_ITERATIONS):
        if residual(hi) >= 0:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise RuntimeError("water level bracket did not close")

    for _ in range(MAX_ITERATIONS):
        if residual(hi) <= tolerance or hi - lo <= 1e-15 * hi:
            break
        mid = 0.5 * (lo + hi)
        if residual(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


# direct and idle ------------------------------------------------------------

def cost_idle() -> ModeCost:
    return ModeCost(cost=0.0, action=ControlAction.idle())


def cost_direct(inp: SolverInput) -> ModeCost:
    """Direct transmission over the full slot, met with equality"""
    g_sd = inp.state.sd_gain
    if g_sd <= 0:
        return ModeCost.infeasible()
    p_dir = inp.budget.theta(1) / g_sd
    if p_dir > inp.source_max:
        return ModeCost.infeasible()
    return _finish(inp, Mode.DIRECT, PowerAllocation(source_power=p_dir))


# decode-and-forward ---------------------------------------------------------

def order_relays(state: ChannelState) -> list[int]:
    """Relays by decreasing |h_si|^2, ties by ascending id"""
    return sorted(state.available_relays, key=lambda i: (-state.sr_gains[i], i))


def min_decode_power(
    prefix: Sequence[int],
    state: ChannelState,
    budget: LinkBudget,
    scheme: Scheme,
    k: Optional[int] = None,
) -> float:
    """Smallest source power that lets every relay of the prefix decode"""
    if not prefix:
        return 0.0
    weakest = min(state.sr_gains[i] for i in prefix)
    if weakest <= 0:
        return math.inf
    if k is None:
        k = kappa(scheme, budget.relay_count)
    return budget.theta(k) / weakest


def _greedy_fill(need: float, items: list[tuple[int, float, float, float]]) -> tuple[dict[int, float], float]:
    """
    Fill a linear SNR requirement in decreasing gain/weight order

    items are (node, gain, weight, capacity); returns the amount per node and
    the unmet requirement.
    """
    ranked = sorted(
        (item for item in items if item[1] > 0 and item[3] > 0),
        key=lambda item: (-item[1] / max(item[2], WEIGHT_FLOOR), item[0]),
    )
    amounts: dict[int, float] = {}
    for node, gain, _, capacity in ranked:
        if need <= 0:
            break
        amount = min(capacity, need / gain)
        amounts[node] = amount
        need -= amount * gain
    return amounts, need


def solve_regdf_subproblem(
    prefix: Sequence[int],
    inp: SolverInput,
    *,
    k: Optional[int] = None,
    sd_gain: Optional[float] = None,
    mode: Mode = Mode.COOPERATIVE,
) -> ModeCost:
    """
    Regenerative DF with the decode set fixed to a prefix U_k

    The MI constraint is linear in the powers:
    P_s|h_sd|^2 + sum_i P_i|h_id|^2 >= theta, with P_s at least the decode floor.

    Args:
        prefix: Relays required to decode (a prefix of order_relays)
        inp: Slot problem
        k: Slot scaling override (2 for multi-hop)
        sd_gain: Override for |h_sd|^2 (0 for multi-hop)
        mode: Mode recorded on the returned action

    Returns:
        ModeCost of the greedy LP optimum, inf when unattainable
    """
    state = inp.state
    k = _coop_kappa(inp) if k is None else k
    g_sd = state.sd_gain if sd_gain is None else sd_gain
    theta = inp.budget.theta(k)
    floor = min_decode_power(prefix, state, inp.budget, inp.scheme, k=k)
    if floor > inp.source_max:
        return ModeCost.infeasible()

    source = state.source
    items = [(source, g_sd, inp.source_weight, inp.source_max - floor)]
    items += [(i, state.rd_gains[i], inp.relay_weights[i], inp.relay_max[i]) for i in prefix]
    amounts, unmet = _greedy_fill(theta - floor * g_sd, items)
    if unmet > RESIDUAL_TOLERANCE * max(1.0, theta):
        return ModeCost.infeasible()

    alloc = PowerAllocation(
        source_power=floor + amounts.get(source, 0.0),
        relay_powers={i: amounts.get(i, 0.0) for i in prefix},
    )
    return _finish(inp, mode, alloc, prefix)


def _best_over_prefixes(inp: SolverInput, solve: Callable[[Sequence[int], SolverInput], ModeCost]) -> ModeCost:
    ranked = order_relays(inp.state)
    k = _coop_kappa(inp)
    best = ModeCost.infeasible()
    for size in range(len(ranked) + 1):
        prefix = ranked[:size]
        # floors only grow with the prefix
        if min_decode_power(prefix, inp.state, inp.budget, inp.scheme, k=k) > inp.source_max:
            break
        result = solve(prefix, inp)
        if result.cost < best.cost:
            best = result
    return best


def cost_regdf(inp: SolverInput) -> ModeCost:
    """Regenerative DF (orthogonal or DSTC): best of the m+1 prefix LPs"""
    return _best_over_prefixes(inp, solve_regdf_subproblem)


def cost_regdf_sum_power(inp: SolverInput, total_relay_power: float) -> ModeCost:
    """
    Regenerative DF when relays share one sum-power budget

    Individual relay peaks are replaced by the shared budget, so the greedy
    solution activates at most one relay.
    """
    if total_relay_power < 0:
        raise ValueError("total relay power must be nonnegative")
    state = inp.state
    k = _coop_kappa(inp)
    theta = inp.budget.theta(k)
    source = state.source
    best = ModeCost.infeasible()
    ranked = order_relays(state)
    for size in range(len(ranked) + 1):
        prefix = ranked[:size]
        floor = min_decode_power(prefix, state, inp.budget, inp.scheme, k=k)
        if floor > inp.source_max:
            break
        need = theta - floor * state.sd_gain
        items = [(source, state.sd_gain, inp.source_weight)]
        items += [(i, state.rd_gains[i], inp.relay_weights[i]) for i in prefix]
        items = sorted(
            (item for item in items if item[1] > 0),
            key=lambda item: (-item[1] / max(item[2], WEIGHT_FLOOR), item[0]),
        )
        shared = total_relay_power
        amounts: dict[int, float] = {}
        for node, gain, _ in items:
            if need <= 0:
                break
            capacity = inp.source_max - floor if node == source else shared
            amount = min(capacity, need / gain)
            amounts[node] = amount
            need -= amount * gain
            if node != source:
                shared -= amount
        if need > RESIDUAL_TOLERANCE * max(1.0, theta):
            continue
        alloc = PowerAllocation(
            source_power=floor + amounts.get(source, 0.0),
            relay_powers={i: amounts.get(i, 0.0) for i in prefix},
        )
        # sum-power variant skips per-node peaks, so the cost is computed directly
        cost = inp.source_weight * alloc.source_power + sum(
            inp.relay_weights[i] * p for i, p in alloc.relay_powers.items()
        ) - inp.reward
        if cost < best.cost:
            best = ModeCost(cost=cost, action=ControlAction(
                mode=Mode.COOPERATIVE, alloc=alloc, scheme=inp.scheme, decode_target=tuple(prefix),
            ))
    return best


def solve_nonregdf_subproblem(prefix: Sequence[int], inp: SolverInput) -> ModeCost:
    """
    Non-regenerative DF with decode set U_k: water-filling over log terms

    P_j = clamp(mu / w_j - W / (k g_j), lo_j, hi_j), with the level mu chosen
    so that sum_j log2(1 + k P_j g_j / W) = k R / W.
    """
    state = inp.state
    W = inp.budget.bandwidth
    k = _coop_kappa(inp)
    floor = min_decode_power(prefix, state, inp.budget, inp.scheme, k=k)
    if floor > inp.source_max:
        return ModeCost.infeasible()

    nodes = [state.source, *prefix]
    scale = np.array([state.sd_gain] + [state.rd_gains[i] for i in prefix]) * (k / W)
    weights = np.maximum(
        np.array([inp.source_weight] + [inp.relay_weights[i] for i in prefix]), WEIGHT_FLOOR
    )
    lows = np.array([floor] + [0.0] * len(prefix))
    highs = np.array([inp.source_max] + [inp.relay_max[i] for i in prefix])
    target = inp.budget.rate * k / W
    useful = scale > 0
    inverse_scale = np.divide(1.0, scale, out=np.zeros_like(scale), where=useful)

    def levels(mu: float) -> np.ndarray:
        return np.where(useful, np.clip(mu / weights - inverse_scale, lows, highs), lows)

    def achieved(powers: np.ndarray) -> float:
        return float(np.sum(np.log2(1.0 + scale * powers)))

    if achieved(lows) >= target - RESIDUAL_TOLERANCE:
        powers = lows
    elif achieved(highs) < target - RESIDUAL_TOLERANCE:
        return ModeCost.infeasible()
    elif achieved(highs) <= target:
        powers = highs
    else:
        mu = bisect_level(lambda level: achieved(levels(level)) - target, RESIDUAL_TOLERANCE)
        powers = levels(mu)

    alloc = PowerAllocation(
        source_power=float(powers[0]),
        relay_powers={node: float(p) for node, p in zip(nodes[1:], powers[1:])},
    )
    return _finish(inp, Mode.COOPERATIVE, alloc, prefix)


def cost_nonregdf(inp: SolverInput) -> ModeCost:
    return _best_over_prefixes(inp, solve_nonregdf_subproblem)


# amplify-and-forward --------------------------------------------------------

def solve_af_inner(p_s: float, inp: SolverInput) -> ModeCost:
    """
    AF relay powers for a fixed source power

    With P_s fixed the constraint becomes
    sum_i c_i / (b_i + P_i |h_id|^2) <= theta', where
    c_i = P_s^2 |h_si|^4 + P_s |h_si|^2 W/k and b_i = P_s |h_si|^2 + W/k.
    """
    if p_s <= 0:
        return ModeCost.infeasible()
    state = inp.state
    k = _coop_kappa(inp)
    noise = inp.budget.bandwidth / k
    theta = inp.budget.theta(k)
    relays = state.relays
    zero = {i: 0.0 for i in relays}
    tolerance = RESIDUAL_TOLERANCE * max(1.0, theta)

    if p_s * state.sd_gain >= theta:
        return _finish(inp, Mode.COOPERATIVE, PowerAllocation(source_power=p_s, relay_powers=zero))

    active = [i for i in relays if state.sr_gains[i] > 0 and state.rd_gains[i] > 0]
    if not active:
        return ModeCost.infeasible()
    g_sr = np.array([state.sr_gains[i] for i in active])
    g_rd = np.array([state.rd_gains[i] for i in active])
    weights = np.maximum(np.array([inp.relay_weights[i] for i in active]), WEIGHT_FLOOR)
    highs = np.array([inp.relay_max[i] for i in active])
    c = p_s**2 * g_sr**2 + p_s * g_sr * noise
    b = p_s * g_sr + noise
    theta_prime = p_s * (state.sd_gain + g_sr.sum()) - theta

    def residual_of(powers: np.ndarray) -> float:
        return theta_prime - float(np.sum(c / (b + powers * g_rd)))

    if residual_of(highs) < -tolerance:
        return ModeCost.infeasible()

    def levels(nu: float) -> np.ndarray:
        return np.clip(np.sqrt(nu * c / (weights * g_rd)) - b / g_rd, 0.0, highs)

    if residual_of(highs) <= 0:
        powers = highs
    else:
        nu = bisect_level(lambda level: residual_of(levels(level)), tolerance)
        powers = levels(nu)
    relay_powers = dict(zero)
    relay_powers.update({i: float(p) for i, p in zip(active, powers)})
    return _finish(inp, Mode.COOPERATIVE, PowerAllocation(source_power=p_s, relay_powers=relay_powers))


def af_source_grid(source_max: float, points: int) -> np.ndarray:
    """Uniform, endpoint-inclusive source power grid"""
    if points <= 1:
        return np.array([source_max])
    return np.linspace(0.0, source_max, points)


def _best_over_grid(inp: SolverInput, grid: Iterable[float]) -> tuple[ModeCost, float]:
    best, best_p = ModeCost.infeasible(), math.nan
    for p_s in grid:
        result = solve_af_inner(float(p_s), inp)
        if result.cost < best.cost:
            best, best_p = result, float(p_s)
    return best, best_p


def cost_af(inp: SolverInput) -> ModeCost:
    """AF (orthogonal or DSTC): fixed-P_s reduction over a uniform grid"""
    grid = af_source_grid(inp.source_max, inp.af_grid_points)
    best, best_p = _best_over_grid(inp, grid)
    if inp.af_refine and best.feasible and len(grid) > 1:
        step = grid[1] - grid[0]
        local = np.linspace(max(0.0, best_p - step), min(inp.source_max, best_p + step), 21)
        refined, _ = _best_over_grid(inp, local)
        if refined.cost < best.cost:
            best = refined
    return best


# multi-hop and mode selection -----------------------------------------------

def cost_multihop(inp: SolverInput) -> ModeCost:
    """Two-hop relaying through one relay: regenerative DF with k=2 and h_sd=0"""
    best = ModeCost.infeasible()
    for relay in inp.state.relays:
        result = solve_regdf_subproblem([relay], inp, k=2, sd_gain=0.0, mode=Mode.MULTIHOP)
        if result.cost < best.cost:
            best = result
    return best


def cost_cooperative(inp: SolverInput) -> ModeCost:
    if inp.scheme.amplify:
        return cost_af(inp)
    if inp.scheme.regenerative:
        return cost_regdf(inp)
    return cost_nonregdf(inp)


_MODE_COSTS: dict[Mode, Callable[[SolverInput], ModeCost]] = {
    Mode.IDLE: lambda inp: cost_idle(),
    Mode.DIRECT: cost_direct,
    Mode.MULTIHOP: cost_multihop,
    Mode.COOPERATIVE: cost_cooperative,
}


def best_action(
    inp: SolverInput,
    modes: Optional[Iterable[Mode]] = None,
) -> tuple[ModeCost, dict[Mode, ModeCost]]:
    """
    Minimum-cost mode for the slot

    Args:
        inp: Slot problem
        modes: Allowed modes; idle is always allowed

    Returns:
        The winning ModeCost and the per-mode cost table
    """
    allowed = set(MODE_PRIORITY if modes is None else modes) | {Mode.IDLE}
    table = {mode: _MODE_COSTS[mode](inp) for mode in MODE_PRIORITY if mode in allowed}
    best = table[Mode.IDLE]
    for mode in MODE_PRIORITY:
        if mode in table and table[mode].cost < best.cost:
            best = table[mode]
    logger.debug(
        "slot %d source %d: %s",
        inp.state.slot, inp.state.source,
        ", ".join(f"{m.name.lower()}={c.cost:.4g}" for m, c in table.items()),
    )
    return best, table
