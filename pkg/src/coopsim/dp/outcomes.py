"""
First-stage outcome space and its distribution under known fading statistics
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy import stats

from ..channel import FadingModel
from ..phy import LinkBudget, Scheme, kappa

logger = logging.getLogger(__name__)

MAX_OUTCOMES = 1_000_000
MAX_RELAYS = 10


@dataclass(frozen=True)
class Outcome:
    """Relays that decoded phase one and the destination MI bin reached"""
    decoded: frozenset[int]
    mi_bin: int


@dataclass(frozen=True)
class OutcomeSpace:
    """
    Finite first-stage outcome space

    bin_edges are the lower edges of the destination MI bins; the last bin is
    unbounded above. A bin's lower edge is the MI credited to it.
    """
    relays: tuple[int, ...]
    bin_edges: tuple[float, ...]
    outcomes: tuple[Outcome, ...]

    def __len__(self) -> int:
        return len(self.outcomes)

    def index(self, outcome: Outcome) -> int:
        return self.outcomes.index(outcome)


def enumerate_outcomes(relays: Union[int, Sequence[int]], bins: int, rate: float = 1.0) -> OutcomeSpace:
    """
    Every (decode subset, MI bin) pair

    Args:
        relays: Relay count m (ids 0..m-1) or explicit relay ids
        bins: Number of destination MI levels
        rate: Target rate R; bin edges are linspace(0, R, bins)

    Returns:
        OutcomeSpace with 2^m * bins outcomes, subsets in ascending size then
        lexicographic order, bins innermost
    """
    ids = tuple(range(relays)) if isinstance(relays, int) else tuple(sorted(relays))
    if len(ids) > MAX_RELAYS:
        raise ValueError(f"at most {MAX_RELAYS} relays supported, got {len(ids)}")
    if bins < 1:
        raise ValueError(f"bins must be at least 1, got {bins}")
    size = 2 ** len(ids) * bins
    if size > MAX_OUTCOMES:
        raise ValueError(f"outcome space of {size} exceeds {MAX_OUTCOMES}")

    edges = (0.0,) if bins == 1 else tuple(float(e) for e in np.linspace(0.0, rate, bins))
    subsets = [
        frozenset(combo)
        for r in range(len(ids) + 1)
        for combo in itertools.combinations(ids, r)
    ]
    outcomes = tuple(Outcome(decoded=s, mi_bin=b) for s in subsets for b in range(bins))
    return OutcomeSpace(relays=ids, bin_edges=edges, outcomes=outcomes)


def snr_threshold(mi: float, p_s: float, bandwidth: float, k: float) -> float:
    """Channel gain at which (W/k) log2(1 + k P_s g / W) reaches mi"""
    if mi <= 0:
        return 0.0
    if p_s <= 0:
        return math.inf
    return (bandwidth / (k * p_s)) * math.expm1(k * mi * math.log(2) / bandwidth)


def first_stage_dist(
    p_s: float,
    fading: FadingModel,
    space: OutcomeSpace,
    budget: LinkBudget,
    scheme: Scheme,
) -> np.ndarray:
    """
    Probability of every outcome after the source transmits at P_s

    Relays decode independently with probability exp(-tau/mu_sr) where tau is
    the phy decode threshold; the destination MI bin follows from the
    exponential law of |h_sd|^2.

    Returns:
        Probabilities aligned with space.outcomes, summing to 1
    """
    if p_s < 0:
        raise ValueError(f"source power must be nonnegative, got {p_s}")
    budget = LinkBudget(budget.bandwidth, budget.rate, max(len(space.relays), 1))
    k = kappa(scheme, budget.relay_count)

    tau = snr_threshold(budget.rate, p_s, budget.bandwidth, k)
    decode_p = 0.0 if math.isinf(tau) else float(stats.expon.sf(tau, scale=fading.sr_mean))

    thresholds = [snr_threshold(e, p_s, budget.bandwidth, k) for e in space.bin_edges]
    tails = [1.0 if t == 0 else (0.0 if math.isinf(t) else float(stats.expon.sf(t, scale=fading.sd_mean)))
             for t in thresholds]
    tails.append(0.0)
    bin_p = np.clip(np.diff(-np.array(tails)), 0.0, None)

    m = len(space.relays)
    probs = np.empty(len(space))
    for idx, outcome in enumerate(space.outcomes):
        n = len(outcome.decoded)
        probs[idx] = decode_p**n * (1.0 - decode_p) ** (m - n) * bin_p[outcome.mi_bin]
    return probs / probs.sum()
