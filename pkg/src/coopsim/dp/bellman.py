"""
Exact two-stage Bellman recursion and the Monte Carlo cost-to-go estimator
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .model import CooperativeTwoStage, TwoStageModel

logger = logging.getLogger(__name__)

# outcomes below this probability are skipped in the exact expectation
NEGLIGIBLE_MASS = 1e-15


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Sample-mean estimate of J0(P_s) with the sample variance of J1"""
    p_s: float
    value: float
    variance: float
    n: int

    @property
    def std_error(self) -> float:
        return float(np.sqrt(self.variance / self.n))


@dataclass(frozen=True)
class DpSolution:
    """Best first-stage source power over a grid"""
    p_s: float
    value: float
    grid: np.ndarray
    values: np.ndarray


def second_stage_value(model: CooperativeTwoStage, p_s: float, index: int) -> tuple[float, dict[int, float]]:
    """J1 of one outcome and the relay powers attaining it"""
    return model.second_stage(p_s, index)


def exact_cost_to_go(model: TwoStageModel, p_s: float) -> float:
    """J0(P_s) = source cost + sum_w f(P_s, w) J1(P_s, w)"""
    probs = model.outcome_probs(p_s)
    expectation = sum(
        float(p) * model.stage_two(p_s, idx)
        for idx, p in enumerate(probs)
        if p > NEGLIGIBLE_MASS
    )
    return model.source_cost(p_s) + expectation


def exact_dp(model: TwoStageModel, grid: Iterable[float]) -> DpSolution:
    """Minimize J0 over the source power grid; ties keep the smaller P_s"""
    grid = np.asarray(list(grid), dtype=float)
    if grid.size == 0:
        raise ValueError("source power grid is empty")
    values = np.array([exact_cost_to_go(model, p) for p in grid])
    best = int(np.argmin(values))
    logger.info("exact dp: J0* = %.6g at P_s = %.6g over %d grid points", values[best], grid[best], grid.size)
    return DpSolution(p_s=float(grid[best]), value=float(values[best]), grid=grid, values=values)


def mc_estimate(
    model: TwoStageModel,
    p_s: float,
    n: int,
    rng: np.random.Generator,
    probs: Optional[np.ndarray] = None,
) -> MonteCarloEstimate:
    """
    Estimate J0(P_s) from n sampled first-stage outcomes

    Args:
        model: Two-stage model
        p_s: Source power
        n: Number of sampled outcomes
        rng: Random generator; the same generator state gives the same estimate
        probs: Precomputed outcome distribution for P_s

    Returns:
        MonteCarloEstimate with value = source cost + mean J1 and the unbiased
        sample variance of the J1 draws
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    probs = model.outcome_probs(p_s) if probs is None else probs
    draws = rng.choice(len(probs), size=n, p=probs)
    unique, counts = np.unique(draws, return_counts=True)
    j1 = {int(idx): model.stage_two(p_s, int(idx)) for idx in unique}
    samples = np.repeat([j1[int(idx)] for idx in unique], counts)
    variance = float(samples.var(ddof=1)) if n > 1 else 0.0
    return MonteCarloEstimate(
        p_s=p_s,
        value=model.source_cost(p_s) + float(samples.mean()),
        variance=variance,
        n=n,
    )


def chebyshev_bound(variance: float, n: int, epsilon: float) -> float:
    """Upper bound on P(|J0_est - J0| >= epsilon): min(1, sigma^2 / (n epsilon^2))"""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if variance < 0:
        raise ValueError(f"variance must be nonnegative, got {variance}")
    return min(1.0, variance / (n * epsilon**2))
