import numpy as np
import pytest

from coopsim.channel import (
    CellGrid,
    ChannelState,
    FadingModel,
    MobilityModel,
    relay_set,
    sample_channel_state,
    step_mobility,
)

from conftest import make_state


def test_grid_neighbors():
    grid = CellGrid()
    assert grid.neighbors(4) == [1, 3, 5, 7]
    assert grid.neighbors(0) == [1, 3]
    assert grid.neighbors(8) == [5, 7]
    assert CellGrid(rows=1, cols=1, base_station_cell=0).neighbors(0) == []


def test_grid_rejects_bad_cells():
    with pytest.raises(ValueError):
        CellGrid(rows=3, cols=3, base_station_cell=9)
    with pytest.raises(ValueError):
        CellGrid().neighbors(-1)


def test_mobility_always_stay():
    mobility = MobilityModel(stay_probability=1.0, positions={3: 0, 4: 8})
    moved = step_mobility(mobility, CellGrid(), np.random.default_rng(0))
    assert moved.positions == {3: 0, 4: 8}


def test_mobility_always_moves_to_a_neighbor():
    grid = CellGrid()
    mobility = MobilityModel(stay_probability=0.0, positions={3: 4, 4: 0})
    rng = np.random.default_rng(1)
    for _ in range(50):
        nxt = step_mobility(mobility, grid, rng)
        for node, cell in nxt.positions.items():
            assert cell in grid.neighbors(mobility.positions[node])
        mobility = nxt


def test_mobility_stay_frequency():
    grid = CellGrid()
    mobility = MobilityModel(stay_probability=0.8, positions={1: 4})
    rng = np.random.default_rng(2)
    stays = 0
    for _ in range(5000):
        nxt = step_mobility(mobility, grid, rng)
        stays += nxt.positions[1] == mobility.positions[1]
        mobility = nxt
    assert stays / 5000 == pytest.approx(0.8, abs=0.03)


def test_mobility_is_reproducible():
    mobility = MobilityModel(stay_probability=0.5, positions={i: i for i in range(7)})
    a = step_mobility(mobility, CellGrid(), np.random.default_rng(9))
    b = step_mobility(mobility, CellGrid(), np.random.default_rng(9))
    assert a == b


def test_relay_set_same_cell_and_adjacent():
    mobility = MobilityModel(stay_probability=0.8, positions={3: 0, 4: 1, 5: 4, 6: 0})
    assert relay_set(mobility, 0) == {3, 6}
    assert relay_set(mobility, 0, exclude=[6]) == {3}
    assert relay_set(mobility, 0, grid=CellGrid(), include_adjacent=True) == {3, 4, 6}
    with pytest.raises(ValueError):
        relay_set(mobility, 0, include_adjacent=True)


def test_sample_channel_state_uses_eligible_relays():
    mobility = MobilityModel(stay_probability=0.8, positions={3: 0, 4: 1, 5: 0})
    state = sample_channel_state(0, mobility, FadingModel(), np.random.default_rng(5),
                                 slot=7, source=0, exclude=[5])
    assert state.slot == 7
    assert state.relays == [3]
    assert state.sd_gain >= 0
    assert set(state.sr_gains) == set(state.rd_gains) == {3}


def test_sample_channel_state_is_reproducible():
    mobility = MobilityModel(stay_probability=0.8, positions={3: 0, 4: 0})
    a = sample_channel_state(0, mobility, FadingModel(), np.random.default_rng(11))
    b = sample_channel_state(0, mobility, FadingModel(), np.random.default_rng(11))
    assert a == b


def test_sample_channel_state_mean_gain():
    mobility = MobilityModel(stay_probability=0.8, positions={})
    rng = np.random.default_rng(12)
    gains = [sample_channel_state(0, mobility, FadingModel(sd_mean=2.0), rng).sd_gain for _ in range(20000)]
    assert np.mean(gains) == pytest.approx(2.0, rel=0.05)


def test_sampled_gains_have_exponential_tail():
    mobility = MobilityModel(stay_probability=0.8, positions={1: 0})
    fading = FadingModel(sr_mean=2.0, rd_mean=0.5, sd_mean=1.0)
    rng = np.random.default_rng(31)
    n = 20000
    states = [sample_channel_state(0, mobility, fading, rng) for _ in range(n)]
    links = [
        (fading.sd_mean, np.array([s.sd_gain for s in states])),
        (fading.sr_mean, np.array([s.sr_gains[1] for s in states])),
        (fading.rd_mean, np.array([s.rd_gains[1] for s in states])),
    ]
    for mean, gains in links:
        for tau in (0.25, 1.0, 3.0):
            # P[|h|^2 >= tau] = exp(-tau / mean)
            expected = np.exp(-tau / mean)
            sigma = np.sqrt(expected * (1.0 - expected) / n)
            assert abs(np.mean(gains >= tau) - expected) <= 4.0 * sigma


def test_adjacent_relays_draw_from_adjacent_means():
    mobility = MobilityModel(stay_probability=0.8, positions={3: 1})
    fading = FadingModel(adjacent_sr_mean=1e-6, adjacent_rd_mean=1e-6)
    state = sample_channel_state(0, mobility, fading, np.random.default_rng(3),
                                 grid=CellGrid(), include_adjacent=True)
    assert state.relays == [3]
    assert state.sr_gains[3] < 1e-3
    assert state.rd_gains[3] < 1e-3


def test_channel_state_validation():
    with pytest.raises(ValueError):
        ChannelState(slot=0, source=0, sd_gain=1.0, available_relays=frozenset({1}), sr_gains={1: 1.0})
    with pytest.raises(ValueError):
        make_state(-0.1)


def test_without_relays():
    state = make_state(1.0, [(1, 1.0, 1.0), (2, 2.0, 2.0)])
    assert state.without_relays([2]).relays == [1]
    assert state.without_relays([1, 2]).available_relays == frozenset()
