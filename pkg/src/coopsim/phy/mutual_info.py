"""
Mutual information and success indicator for every transmission mode

All formulas take numpy-broadcastable arguments so the brute-force oracle can
evaluate whole power grids at once; relay quantities run along the last axis.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from ..channel import ChannelState

# relative slack on rate and decode comparisons
RATE_TOLERANCE = 1e-9
DECODE_TOLERANCE = 1e-12


class Mode(Enum):
    """Transmission modes, valued by their usual numbering"""
    DIRECT = 1
    MULTIHOP = 2
    COOPERATIVE = 3
    IDLE = 4


# tie-break order when costs are equal
MODE_PRIORITY = (Mode.IDLE, Mode.DIRECT, Mode.MULTIHOP, Mode.COOPERATIVE)


class Scheme(str, Enum):
    """Cooperative protocols"""
    REG_DF_ORTHO = "regdf-ortho"
    NONREG_DF_ORTHO = "nonregdf-ortho"
    AF_ORTHO = "af-ortho"
    DF_DSTC = "df-dstc"
    AF_DSTC = "af-dstc"

    @property
    def orthogonal(self) -> bool:
        return self in (Scheme.REG_DF_ORTHO, Scheme.NONREG_DF_ORTHO, Scheme.AF_ORTHO)

    @property
    def amplify(self) -> bool:
        return self in (Scheme.AF_ORTHO, Scheme.AF_DSTC)

    @property
    def regenerative(self) -> bool:
        """Relays reuse the source codebook so SNRs add"""
        return self in (Scheme.REG_DF_ORTHO, Scheme.DF_DSTC)


@dataclass(frozen=True)
class PowerAllocation:
    """Noise-normalized transmit powers for one slot"""
    source_power: float = 0.0
    relay_powers: Mapping[int, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.source_power + sum(self.relay_powers.values())

    def relay_power(self, node: int) -> float:
        return self.relay_powers.get(node, 0.0)

    def within(self, source_max: float, relay_max: Mapping[int, float], slack: float = 1e-9) -> bool:
        """Check the peak-power box constraints"""
        if not -slack <= self.source_power <= source_max + slack:
            return False
        return all(
            -slack <= p <= relay_max[node] + slack
            for node, p in self.relay_powers.items()
        )


@dataclass(frozen=True)
class LinkBudget:
    """Bandwidth W (symbols/slot), rate R (bits/slot), relay count m"""
    bandwidth: float = 1.0
    rate: float = 1.0
    relay_count: int = 1

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.rate <= 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if self.relay_count < 0:
            raise ValueError(f"relay_count must be nonnegative, got {self.relay_count}")

    def for_state(self, state: ChannelState) -> "LinkBudget":
        """
        Budget normalized to the relays available in a slot

        An orthogonal slot with no relays is a single full-width mini-slot, so
        the normalization never drops below 1.
        """
        return replace(self, relay_count=max(len(state.available_relays), 1))

    def theta(self, kappa: float) -> float:
        """Received-SNR sum needed for rate R over a 1/kappa share: (W/k)(2^(Rk/W)-1)"""
        return (self.bandwidth / kappa) * math.expm1(self.rate * kappa * math.log(2) / self.bandwidth)


def kappa(scheme: Scheme, relay_count: int) -> int:
    """Slot scaling: m for orthogonal schemes, 2 for DSTC"""
    if not scheme.orthogonal:
        return 2
    if relay_count <= 0:
        raise ValueError(f"{scheme.value} needs at least one relay; use direct mode instead")
    return relay_count


def meets_rate(mi, rate: float):
    return mi >= rate - RATE_TOLERANCE * max(1.0, rate)


# closed forms ---------------------------------------------------------------

def direct_mi(bandwidth: float, p_s, g_sd):
    """W log2(1 + P_s |h_sd|^2 / W)"""
    return bandwidth * np.log2(1.0 + np.asarray(p_s) * g_sd / bandwidth)


def combined_mi(bandwidth: float, k: float, p_s, g_sd, relay_p, relay_g):
    """Regenerative DF: (W/k) log2(1 + k P_s g_sd / W + sum_i k P_i g_id / W)"""
    relay_term = np.sum(np.asarray(relay_p) * np.asarray(relay_g), axis=-1)
    snr = (k / bandwidth) * (np.asarray(p_s) * g_sd + relay_term)
    return (bandwidth / k) * np.log2(1.0 + snr)


def parallel_mi(bandwidth: float, k: float, p_s, g_sd, relay_p, relay_g):
    """Non-regenerative DF: per-channel log terms add"""
    source_term = np.log2(1.0 + (k / bandwidth) * np.asarray(p_s) * g_sd)
    relay_terms = np.sum(
        np.log2(1.0 + (k / bandwidth) * np.asarray(relay_p) * np.asarray(relay_g)), axis=-1
    )
    return (bandwidth / k) * (source_term + relay_terms)


def amplified_snr(bandwidth: float, k: float, p_s, relay_p, g_sr, g_rd):
    """Effective relay contribution psi_i = P_i g_si g_id / (P_s g_si + P_i g_id + W/k)"""
    p_s = np.asarray(p_s)[..., np.newaxis]
    relay_p = np.asarray(relay_p)
    return relay_p * g_sr * g_rd / (p_s * g_sr + relay_p * g_rd + bandwidth / k)


def amplified_mi(bandwidth: float, k: float, p_s, g_sd, relay_p, g_sr, g_rd):
    """AF: (W/k) log2(1 + k P_s (g_sd + sum_i psi_i) / W)"""
    psi = np.sum(amplified_snr(bandwidth, k, p_s, relay_p, np.asarray(g_sr), np.asarray(g_rd)), axis=-1)
    return (bandwidth / k) * np.log2(1.0 + (k / bandwidth) * np.asarray(p_s) * (g_sd + psi))


def decodes(bandwidth: float, rate: float, k: float, p_s, g_sr):
    """Whether first-phase MI (W/k) log2(1 + k P_s g_si / W) reaches R"""
    needed = math.expm1(rate * k * math.log(2) / bandwidth)
    return (k / bandwidth) * np.asarray(p_s) * g_sr >= needed * (1.0 - DECODE_TOLERANCE)


# slot-level API -------------------------------------------------------------

def decode_set(
    p_s: float,
    state: ChannelState,
    budget: LinkBudget,
    scheme: Scheme,
    k: float | None = None,
) -> set[int]:
    """
    Relays that decode the first-phase transmission

    Args:
        p_s: Source power
        state: Channel state of the slot
        budget: Link budget (its relay_count sets the orthogonal scaling)
        scheme: Cooperative scheme
        k: Explicit slot scaling, overriding the scheme's

    Returns:
        Relays with |h_si|^2 >= (W/(k P_s))(2^(Rk/W) - 1); empty when P_s = 0
    """
    if p_s < 0:
        raise ValueError(f"source power must be nonnegative, got {p_s}")
    if p_s == 0 or not state.available_relays:
        return set()
    if k is None:
        k = kappa(scheme, budget.relay_count)
    return {
        node for node in state.available_relays
        if decodes(budget.bandwidth, budget.rate, k, p_s, state.sr_gains[node])
    }


def mutual_information(
    mode: Mode,
    scheme: Scheme,
    alloc: PowerAllocation,
    decoded: Iterable[int],
    state: ChannelState,
    budget: LinkBudget,
) -> float:
    """
    Total mutual information delivered to the destination in one slot

    Args:
        mode: Transmission mode
        scheme: Cooperative scheme (used by the cooperative mode)
        alloc: Power allocation
        decoded: Relays holding the packet after phase one (ignored for AF)
        state: Channel state
        budget: Link budget

    Returns:
        Mutual information in bits per slot
    """
    W = budget.bandwidth
    if mode is Mode.IDLE:
        return 0.0
    if mode is Mode.DIRECT:
        return float(direct_mi(W, alloc.source_power, state.sd_gain))

    if mode is Mode.MULTIHOP:
        # regenerative DF over two half-slots; the destination ignores phase one
        relays = sorted(set(decoded) & set(state.available_relays))
        powers = [alloc.relay_power(i) for i in relays]
        gains = [state.rd_gains[i] for i in relays]
        return float(combined_mi(W, 2, 0.0, 0.0, powers, gains))

    k = kappa(scheme, budget.relay_count)
    if scheme.amplify:
        relays = state.relays
        powers = [alloc.relay_power(i) for i in relays]
        return float(amplified_mi(
            W, k, alloc.source_power, state.sd_gain, powers,
            [state.sr_gains[i] for i in relays], [state.rd_gains[i] for i in relays],
        ))

    relays = sorted(set(decoded) & set(state.available_relays))
    powers = [alloc.relay_power(i) for i in relays]
    gains = [state.rd_gains[i] for i in relays]
    if scheme.regenerative:
        return float(combined_mi(W, k, alloc.source_power, state.sd_gain, powers, gains))
    return float(parallel_mi(W, k, alloc.source_power, state.sd_gain, powers, gains))


def outcome(
    mode: Mode,
    scheme: Scheme,
    alloc: PowerAllocation,
    state: ChannelState,
    budget: LinkBudget,
) -> int:
    """
    Success indicator for an action under known channels

    Returns:
        1 when the mutual information, with the decode set induced by the
        source power, reaches R; idle always returns 0
    """
    if mode is Mode.IDLE:
        return 0
    decoded: set[int] = set()
    if mode is Mode.MULTIHOP:
        decoded = decode_set(alloc.source_power, state, budget, scheme, k=2)
    elif mode is Mode.COOPERATIVE and not scheme.amplify:
        decoded = decode_set(alloc.source_power, state, budget, scheme)
    mi = mutual_information(mode, scheme, alloc, decoded, state, budget)
    return int(meets_rate(mi, budget.rate))
