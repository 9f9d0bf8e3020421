"""
Two-stage models for the unknown-channels problem

A model exposes the first-stage source cost, the outcome distribution and the
optimal second-stage value J1 of every outcome.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Protocol, Sequence

import numpy as np
from scipy import stats

from ..channel import FadingModel
from ..phy import LinkBudget, Scheme, kappa
from .outcomes import OutcomeSpace, first_stage_dist

logger = logging.getLogger(__name__)

# near-equal exponential means fall back to the Erlang tail
EQUAL_MEAN_TOLERANCE = 1e-9
MIN_MC_SAMPLES = 10_000
GRID_CHUNK = 64


class TwoStageModel(Protocol):
    def source_cost(self, p_s: float) -> float: ...

    def outcome_probs(self, p_s: float) -> np.ndarray: ...

    def stage_two(self, p_s: float, index: int) -> float: ...


@dataclass
class TabularTwoStage:
    """Synthetic model with P_s-independent outcome probabilities and J1 values"""
    source_weight: float
    probs: Sequence[float]
    values: Sequence[float]

    def __post_init__(self):
        if len(self.probs) != len(self.values) or not self.probs:
            raise ValueError("probs and values must be nonempty and aligned")
        if any(p < 0 for p in self.probs) or not math.isclose(sum(self.probs), 1.0, abs_tol=1e-9):
            raise ValueError("probs must be a distribution")

    def source_cost(self, p_s: float) -> float:
        return self.source_weight * p_s

    def outcome_probs(self, p_s: float) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def stage_two(self, p_s: float, index: int) -> float:
        return float(self.values[index])


# success probability --------------------------------------------------------

def sum_exponential_sf(residual: float, means: np.ndarray) -> np.ndarray:
    """
    P[sum_i Y_i >= residual] for independent Y_i ~ Exp(mean_i), up to two terms

    means has shape (..., n) with n <= 2; zero means contribute nothing.
    """
    means = np.asarray(means, dtype=float)
    if residual <= 0:
        return np.ones(means.shape[:-1])
    if means.shape[-1] == 0:
        return np.zeros(means.shape[:-1])
    if means.shape[-1] == 1:
        a = means[..., 0]
        return np.where(a > 0, stats.expon.sf(residual, scale=np.where(a > 0, a, 1.0)), 0.0)
    if means.shape[-1] != 2:
        raise ValueError("closed form covers at most two exponential terms")

    a = np.max(means, axis=-1)
    b = np.min(means, axis=-1)
    safe_a = np.where(a > 0, a, 1.0)
    safe_b = np.where(b > 0, b, 1.0)
    single = stats.expon.sf(residual, scale=safe_a)
    erlang = stats.gamma.sf(residual, 2, scale=safe_a)
    gap = np.where(a - b > 0, a - b, 1.0)
    hypo = (a * stats.expon.sf(residual, scale=safe_a) - b * stats.expon.sf(residual, scale=safe_b)) / gap
    close = (a - b) <= EQUAL_MEAN_TOLERANCE * np.maximum(a, 1e-300)
    out = np.where(close, erlang, hypo)
    out = np.where(b > 0, out, single)
    out = np.where(a > 0, out, 0.0)
    return np.clip(out, 0.0, 1.0)


@dataclass
class CooperativeTwoStage:
    """
    DF cooperation with unknown channels and known exponential statistics

    The first stage picks P_s; the outcome (decode set, destination MI bin)
    is revealed; the second stage picks powers for the decoded relays to
    trade weighted power against the success probability g.
    """
    space: OutcomeSpace
    fading: FadingModel
    budget: LinkBudget
    scheme: Scheme
    reward: float
    source_weight: float
    relay_weights: Mapping[int, float]
    relay_max: Mapping[int, float]
    source_max: float
    mc_samples: int = MIN_MC_SAMPLES
    grid_points: int = 50
    refine_levels: int = 2
    seed: int = 0
    _samples: np.ndarray = field(init=False, repr=False)
    _cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        if self.scheme.amplify:
            raise ValueError("amplify-and-forward has no finite outcome model")
        if self.mc_samples < MIN_MC_SAMPLES:
            raise ValueError(f"mc_samples must be at least {MIN_MC_SAMPLES}")
        if self.reward < 0 or self.source_weight < 0:
            raise ValueError("metric weights must be nonnegative")
        missing = set(self.space.relays) - (set(self.relay_weights) & set(self.relay_max))
        if missing:
            raise ValueError(f"no weight or peak limit for relays {sorted(missing)}")
        self.budget = LinkBudget(self.budget.bandwidth, self.budget.rate, max(len(self.space.relays), 1))
        self.k = kappa(self.scheme, self.budget.relay_count)
        # common random numbers: one |h_id|^2 matrix shared by every g evaluation
        rng = np.random.default_rng(self.seed)
        self._samples = rng.exponential(self.fading.rd_mean, size=(self.mc_samples, len(self.space.relays)))

    def source_cost(self, p_s: float) -> float:
        return self.source_weight * p_s

    def outcome_probs(self, p_s: float) -> np.ndarray:
        return first_stage_dist(p_s, self.fading, self.space, self.budget, self.scheme)

    def decoded_relays(self, index: int) -> list[int]:
        return sorted(self.space.outcomes[index].decoded)

    def credited_mi(self, index: int) -> float:
        return self.space.bin_edges[self.space.outcomes[index].mi_bin]

    def success_probability(self, p_s: float, index: int, powers: np.ndarray) -> np.ndarray:
        """
        g for a batch of relay power vectors

        Args:
            p_s: Source power of the first stage
            index: Outcome index
            powers: Shape (..., |U|), one column per decoded relay in id order

        Returns:
            Success probabilities, shape powers.shape[:-1]
        """
        powers = np.asarray(powers, dtype=float)
        relays = self.decoded_relays(index)
        W, R, k = self.budget.bandwidth, self.budget.rate, self.k
        credited = self.credited_mi(index)
        mean = self.fading.rd_mean

        if self.scheme.regenerative:
            # received SNR sum still missing after phase one
            residual = self.budget.theta(k) - (W / k) * math.expm1(k * credited * math.log(2) / W)
            if residual <= 1e-12:
                return np.ones(powers.shape[:-1])
            if len(relays) <= 2:
                return sum_exponential_sf(residual, powers * mean)
            return self._monte_carlo(relays, powers, lambda snr: snr.sum(axis=-1) >= residual)

        missing_mi = R - credited
        if missing_mi <= 1e-12:
            return np.ones(powers.shape[:-1])
        if not relays:
            return np.zeros(powers.shape[:-1])
        if len(relays) == 1:
            p = powers[..., 0]
            safe = np.where(p > 0, p, 1.0)
            needed = (W / (k * safe)) * math.expm1(k * missing_mi * math.log(2) / W)
            return np.where(p > 0, stats.expon.sf(needed, scale=mean), 0.0)
        target = k * missing_mi / W
        return self._monte_carlo(
            relays, powers,
            lambda snr: np.log2(1.0 + (k / W) * snr).sum(axis=-1) >= target,
        )

    def _monte_carlo(
        self,
        relays: list[int],
        powers: np.ndarray,
        succeeds: Callable[[np.ndarray], np.ndarray],
    ) -> np.ndarray:
        columns = [self.space.relays.index(i) for i in relays]
        gains = self._samples[:, columns]
        flat = powers.reshape(-1, len(relays))
        out = np.empty(len(flat))
        for start in range(0, len(flat), GRID_CHUNK):
            chunk = flat[start:start + GRID_CHUNK]
            snr = gains[np.newaxis, :, :] * chunk[:, np.newaxis, :]
            out[start:start + GRID_CHUNK] = succeeds(snr).mean(axis=-1)
        return out.reshape(powers.shape[:-1])

    def objective(self, p_s: float, index: int, powers: np.ndarray) -> np.ndarray:
        """Second-stage metric sum_i w_i P_i - reward * g"""
        powers = np.asarray(powers, dtype=float)
        weights = np.array([self.relay_weights[i] for i in self.decoded_relays(index)])
        power_term = (powers * weights).sum(axis=-1) if weights.size else np.zeros(powers.shape[:-1])
        return power_term - self.reward * self.success_probability(p_s, index, powers)

    def second_stage(self, p_s: float, index: int) -> tuple[float, dict[int, float]]:
        """Minimize the second-stage metric over the decoded relays' power box"""
        key = (float(p_s), index)
        if key in self._cache:
            return self._cache[key]
        relays = self.decoded_relays(index)
        highs = np.array([self.relay_max[i] for i in relays])
        zero = np.zeros(len(relays))
        value = float(self.objective(p_s, index, zero))
        best = zero
        if self.reward > 0 and relays:
            def evaluate(points: np.ndarray) -> np.ndarray:
                return self.objective(p_s, index, points)

            if len(relays) <= 2:
                candidate, candidate_value = grid_search(evaluate, highs, self.grid_points, self.refine_levels)
            else:
                candidate, candidate_value = coordinate_search(evaluate, highs, self.grid_points, self.refine_levels)
            if candidate_value < value:
                best, value = candidate, candidate_value
        result = (value, {i: float(p) for i, p in zip(relays, best)})
        self._cache[key] = result
        return result

    def stage_two(self, p_s: float, index: int) -> float:
        return self.second_stage(p_s, index)[0]


# box minimizers -------------------------------------------------------------

def _axis(lo: float, hi: float, points: int) -> np.ndarray:
    return np.linspace(lo, hi, points) if hi > lo else np.array([lo])


def grid_search(
    evaluate: Callable[[np.ndarray], np.ndarray],
    highs: np.ndarray,
    points: int,
    refine_levels: int = 0,
    lows: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, float]:
    """
    Product-grid minimum over a box, refined around the incumbent

    Each refinement re-grids [best - step, best + step] per axis.
    """
    lows = np.zeros_like(highs) if lows is None else lows
    box_lo, box_hi = lows.astype(float), highs.astype(float)
    best, best_value = None, math.inf
    lo, hi = box_lo, box_hi
    for _ in range(refine_levels + 1):
        axes = [_axis(l, h, points) for l, h in zip(lo, hi)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
        values = evaluate(mesh)
        idx = int(np.argmin(values))
        if values[idx] < best_value:
            best, best_value = mesh[idx], float(values[idx])
        steps = np.array([a[1] - a[0] if len(a) > 1 else 0.0 for a in axes])
        lo = np.maximum(box_lo, best - steps)
        hi = np.minimum(box_hi, best + steps)
    return best, best_value


def coordinate_search(
    evaluate: Callable[[np.ndarray], np.ndarray],
    highs: np.ndarray,
    points: int,
    refine_levels: int = 0,
    max_sweeps: int = 20,
) -> tuple[np.ndarray, float]:
    """Cyclic one-axis grid search from the origin until a sweep stops improving"""
    best = np.zeros_like(highs, dtype=float)
    best_value = float(evaluate(best[np.newaxis, :])[0])
    for _ in range(max_sweeps):
        improved = False
        for axis in range(len(highs)):
            def along(column: np.ndarray, axis=axis) -> np.ndarray:
                trial = np.repeat(best[np.newaxis, :], len(column), axis=0)
                trial[:, axis] = column[:, 0]
                return evaluate(trial)

            point, value = grid_search(along, highs[axis:axis + 1], points, refine_levels)
            if value < best_value - 1e-15:
                best = best.copy()
                best[axis] = point[0]
                best_value = value
                improved = True
        if not improved:
            break
    return best, best_value
