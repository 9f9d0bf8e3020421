import numpy as np
import pytest

from coopsim.channel import ChannelState
from coopsim.phy import LinkBudget, Scheme
from coopsim.solver import SolverInput


def make_state(sd_gain, relays=(), source=0, slot=0):
    """ChannelState from (id, sr_gain, rd_gain) triples"""
    return ChannelState(
        slot=slot,
        source=source,
        sd_gain=sd_gain,
        available_relays=frozenset(i for i, _, _ in relays),
        sr_gains={i: sr for i, sr, _ in relays},
        rd_gains={i: rd for i, _, rd in relays},
    )


def make_input(
    state,
    scheme=Scheme.REG_DF_ORTHO,
    *,
    bandwidth=1.0,
    rate=1.0,
    reward=0.0,
    source_weight=1.0,
    relay_weight=1.0,
    p_max=10.0,
    af_grid_points=100,
    af_refine=False,
):
    relays = state.relays
    return SolverInput(
        state=state,
        budget=LinkBudget(bandwidth, rate, max(len(relays), 1)),
        scheme=scheme,
        reward=reward,
        source_weight=source_weight,
        relay_weights={i: relay_weight for i in relays},
        source_max=p_max,
        relay_max={i: p_max for i in relays},
        af_grid_points=af_grid_points,
        af_refine=af_refine,
    )


def random_input(rng, scheme, relays):
    """Random slot problem with moderate gains and weights"""
    triples = [(i, float(rng.exponential()), float(rng.exponential())) for i in range(1, relays + 1)]
    state = make_state(float(rng.exponential()), triples)
    return SolverInput(
        state=state,
        budget=LinkBudget(1.0, 1.0, max(relays, 1)),
        scheme=scheme,
        reward=float(rng.uniform(5.0, 40.0)),
        source_weight=float(rng.uniform(0.5, 3.0)),
        relay_weights={i: float(rng.uniform(0.5, 3.0)) for i in state.relays},
        source_max=10.0,
        relay_max={i: 10.0 for i in state.relays},
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def regdf_example():
    """One relay, theta = 1: the greedy optimum is P_s = 0.5, P_1 = 0.75"""
    return make_input(make_state(0.5, [(1, 2.0, 1.0)]))
