"""
Multi-run experiments and post-run diagnostics
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

from rich.console import Console
from scipy import stats

from ..controller import performance_bound
from .simulation import Metrics, SimConfig, Strategy, run

logger = logging.getLogger(__name__)

# floating-point slack on the telescoping identities
IDENTITY_TOLERANCE = 1e-9
# the stability witness allows queues this many times the bound scale
STABILITY_FACTOR = 10.0


@dataclass(frozen=True)
class Verdict:
    """One time-average constraint checked against a finished run"""
    kind: str  # reliability, power
    node: int
    measured: float
    bound: float
    ok: bool


@dataclass(frozen=True)
class FeasibilityCell:
    lam: float
    rho: float
    strategy: Strategy
    feasible: bool
    # smallest slack over all constraints; negative when violated
    margin: float
    metrics: Metrics


@dataclass(frozen=True)
class QueueGrowthFit:
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    node: int
    lhs: float
    rhs: float
    ok: bool


def sweep_v(
    config: SimConfig,
    v_values: Sequence[float],
    show_progress: bool = False,
    console: Optional[Console] = None,
) -> list[Metrics]:
    """
    Independent runs over a list of V values

    Run j uses seed config.seed + j.
    """
    if not v_values:
        raise ValueError("V list is empty")
    results = []
    for offset, v in enumerate(v_values):
        if v < 0:
            raise ValueError(f"V must be nonnegative, got {v}")
        cfg = replace(config, v=float(v), seed=config.seed + offset)
        metrics = run(cfg, show_progress=show_progress, console=console)
        logger.info("V=%g: sum power %.4f, mean Z %.4f", v, metrics.sum_power, metrics.mean_z)
        results.append(metrics)
    return results


def check_feasibility(metrics: Metrics, config: SimConfig, tol: float) -> list[Verdict]:
    """
    Verdicts for every time-average constraint

    Reliability holds when r_s >= rho_s * measured lambda_s - tol, power when
    e_i <= P_avg_i + tol.
    """
    params = config.params()
    verdicts = []
    for s in config.source_ids:
        bound = params.rho[s] * metrics.arrival_rate[s] - tol
        measured = metrics.delivered_fraction[s]
        verdicts.append(Verdict("reliability", s, measured, bound, measured >= bound))
    for i in params.nodes:
        bound = params.p_avg[i] + tol
        measured = metrics.avg_power.get(i, 0.0)
        verdicts.append(Verdict("power", i, measured, bound, measured <= bound))
    return verdicts


def _margin(verdicts: Iterable[Verdict]) -> float:
    slack = [
        v.measured - v.bound if v.kind == "reliability" else v.bound - v.measured
        for v in verdicts
    ]
    return min(slack) if slack else math.inf


def feasibility_table(
    config: SimConfig,
    pairs: Sequence[tuple[float, float]],
    strategies: Sequence[Strategy],
    tol: float,
    show_progress: bool = False,
    console: Optional[Console] = None,
) -> list[FeasibilityCell]:
    """Verdict for every (lambda, rho) pair under every strategy, same seed throughout"""
    if not pairs or not strategies:
        raise ValueError("feasibility grid needs at least one pair and one strategy")
    cells = []
    for strategy in strategies:
        for lam, rho in pairs:
            cfg = replace(config.with_traffic(lam, rho), strategy=strategy)
            metrics = run(cfg, show_progress=show_progress, console=console)
            verdicts = check_feasibility(metrics, cfg, tol)
            feasible = all(v.ok for v in verdicts)
            logger.info("(%.2f, %.2f) %s: %s", lam, rho, strategy.value, "feasible" if feasible else "infeasible")
            cells.append(FeasibilityCell(lam, rho, strategy, feasible, _margin(verdicts), metrics))
    return cells


def fit_queue_growth(results: Sequence[Metrics]) -> QueueGrowthFit:
    """Least-squares line of the mean reliability queue against V"""
    if len(results) < 2:
        raise ValueError("queue growth fit needs at least two V values")
    fit = stats.linregress([m.v for m in results], [m.mean_z for m in results])
    return QueueGrowthFit(slope=float(fit.slope), intercept=float(fit.intercept), r_squared=float(fit.rvalue**2))


def verify_identities(metrics: Metrics, config: SimConfig) -> list[IdentityCheck]:
    """
    Telescoping inequalities over the full horizon and the queue stability witness

    sum(Phi)/T >= rho * sum(A)/T - Z(T)/T for each source,
    sum(P_i)/T <= P_avg_i + X_i(T)/T for each node, and every queue's maximum
    stays below STABILITY_FACTOR times the bound scale B + V(alpha + sum beta P_max).
    """
    params = config.params()
    T = metrics.slots
    checks = []
    for s in config.source_ids:
        lhs = metrics.total_deliveries[s] / T
        rhs = params.rho[s] * metrics.total_arrivals[s] / T - metrics.final_z[s] / T
        checks.append(IdentityCheck("reliability", s, lhs, rhs, lhs >= rhs - IDENTITY_TOLERANCE))
    for i in params.nodes:
        lhs = metrics.total_power.get(i, 0.0) / T
        rhs = params.p_avg[i] + metrics.final_x[i] / T
        checks.append(IdentityCheck("power", i, lhs, rhs, lhs <= rhs + IDENTITY_TOLERANCE * max(1.0, rhs)))

    scale = max(performance_bound(params, s).queue_bound_scale for s in config.source_ids)
    limit = STABILITY_FACTOR * scale
    for s in config.source_ids:
        checks.append(IdentityCheck("stability", s, metrics.max_z[s], limit, metrics.max_z[s] < limit))
    for i in params.nodes:
        checks.append(IdentityCheck("stability", i, metrics.max_x[i], limit, metrics.max_x[i] < limit))
    return checks
