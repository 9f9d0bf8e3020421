from dataclasses import replace

import numpy as np
import pytest

from coopsim.channel import CellGrid, FadingModel
from coopsim.engine import simulation
from coopsim.engine import (
    Access,
    RelaySpec,
    SimConfig,
    Simulation,
    SourceSpec,
    Strategy,
    TdmaSchedule,
    check_feasibility,
    feasibility_table,
    fit_queue_growth,
    run,
    sweep_v,
    verify_identities,
)
from coopsim.phy import Mode, Scheme


@pytest.fixture
def small_config():
    return SimConfig(
        sources=(SourceSpec(cell=0, lam=0.5, rho=0.9), SourceSpec(cell=2, lam=0.5, rho=0.9)),
        relays=(RelaySpec(cell=0), RelaySpec(cell=2), RelaySpec(cell=1)),
        v=5.0,
        slots=200,
        seed=3,
        access=Access.ORTHOGONAL,
        trace=True,
    )


def test_tdma_round_robin():
    schedule = TdmaSchedule((0, 1, 2))
    rng = np.random.default_rng(0)
    assert [schedule.select(t, rng) for t in range(5)] == [0, 1, 2, 0, 1]
    with pytest.raises(ValueError):
        TdmaSchedule(())


def test_tdma_random_stays_in_order_set():
    schedule = TdmaSchedule((4, 7), randomized=True)
    rng = np.random.default_rng(1)
    picks = {schedule.select(t, rng) for t in range(100)}
    assert picks == {4, 7}


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(sources=(SourceSpec(cell=0, lam=0.5, rho=0.9),), slots=0)
    with pytest.raises(ValueError):
        SimConfig(sources=())
    with pytest.raises(ValueError):
        SimConfig(sources=(SourceSpec(cell=9, lam=0.5, rho=0.9),))
    with pytest.raises(ValueError):
        SimConfig(sources=(SourceSpec(cell=0, lam=1.5, rho=0.9),))


def test_node_ids_and_params(small_config):
    assert small_config.source_ids == [0, 1]
    assert small_config.relay_ids == [2, 3, 4]
    params = small_config.params()
    assert params.nodes == [0, 1, 2, 3, 4]
    assert params.sources == [0, 1]
    assert small_config.measured_from == 100


def test_with_traffic(small_config):
    changed = small_config.with_traffic(0.2, 0.5)
    assert all(s.lam == 0.2 and s.rho == 0.5 for s in changed.sources)
    assert small_config.sources[0].lam == 0.5


def test_orthogonal_trace_has_every_source_each_slot(small_config):
    metrics = run(small_config)
    assert len(metrics.trace) == 2 * small_config.slots
    assert metrics.slots == 200
    assert metrics.measured_slots == 100
    assert sum(metrics.mode_counts.values()) == 400


@pytest.mark.parametrize("access", [Access.ROUND_ROBIN, Access.RANDOM])
def test_tdma_trace_has_one_row_per_slot(small_config, access):
    metrics = run(replace(small_config, access=access))
    assert len(metrics.trace) == small_config.slots
    assert {row.source for row in metrics.trace} <= {0, 1}


def test_runs_are_reproducible(small_config):
    assert run(small_config) == run(small_config)


def test_different_seeds_differ(small_config):
    a = run(small_config)
    b = run(replace(small_config, seed=4))
    assert a.total_arrivals != b.total_arrivals or a.total_power != b.total_power


def test_deliveries_never_exceed_arrivals(small_config):
    metrics = run(small_config)
    for s in small_config.source_ids:
        assert metrics.total_deliveries[s] <= metrics.total_arrivals[s]
    for row in metrics.trace:
        if not row.arrived:
            assert row.mode == "idle"
            assert row.success == 0


def test_trace_respects_peak_power(small_config):
    metrics = run(small_config)
    for row in metrics.trace:
        assert row.source_power <= 10.0 + 1e-9
        assert row.relay_power <= 10.0 * row.relays_used + 1e-9


def test_direct_strategy_never_relays(small_config):
    metrics = run(replace(small_config, strategy=Strategy.DIRECT))
    assert set(metrics.mode_counts) <= {"idle", "direct"}
    assert all(row.relays_used == 0 for row in metrics.trace)


def test_cooperative_strategy_modes(small_config):
    metrics = run(replace(small_config, strategy=Strategy.COOPERATIVE))
    assert set(metrics.mode_counts) <= {"idle", "cooperative"}


def test_strategy_modes():
    assert Strategy.OPTIMAL.modes == frozenset(Mode)
    assert Mode.MULTIHOP not in Strategy.DIRECT.modes


@pytest.mark.parametrize("scheme", [Scheme.NONREG_DF_ORTHO, Scheme.AF_ORTHO, Scheme.DF_DSTC])
def test_identities_hold_for_every_scheme(small_config, scheme):
    config = replace(small_config, scheme=scheme, af_grid_points=20, slots=60)
    metrics = run(config)
    checks = verify_identities(metrics, config)
    assert all(check.ok for check in checks), [c for c in checks if not c.ok]


def test_identities_hold_with_extras(small_config):
    config = replace(small_config, include_adjacent=True, sources_as_relays=True, access=Access.ROUND_ROBIN)
    metrics = run(config)
    assert all(check.ok for check in verify_identities(metrics, config))


def test_run_slot_advances_time(small_config):
    sim = Simulation(small_config)
    rows = sim.run_slot()
    assert sim.t == 1
    assert len(rows) == 2
    assert {row.slot for row in rows} == {0}


def test_relays_move_at_end_of_slot(monkeypatch):
    seen = []
    sample = simulation.sample_channel_state

    def recording(cell, mobility, *args, **kwargs):
        seen.append(dict(mobility.positions))
        return sample(cell, mobility, *args, **kwargs)

    monkeypatch.setattr(simulation, "sample_channel_state", recording)
    config = SimConfig(
        sources=(SourceSpec(cell=0, lam=1.0, rho=0.9),),
        relays=(RelaySpec(cell=0), RelaySpec(cell=3)),
        grid=CellGrid(rows=2, cols=2, base_station_cell=3),
        stay_probability=0.0,
        slots=3,
        seed=5,
    )
    sim = Simulation(config)
    sim.run_slot()
    assert seen == [{1: 0, 2: 3}]
    moved = dict(sim.mobility.positions)
    assert moved[1] in (1, 2) and moved[2] in (1, 2)
    sim.run_slot()
    assert seen[1] == moved


def test_queue_snapshot_in_trace_is_start_of_slot(small_config):
    sim = Simulation(small_config)
    first = sim.run_slot()
    assert all(row.z == 0.0 and row.x_source == 0.0 for row in first)


def test_sweep_v_seeds_and_values(small_config):
    config = replace(small_config, slots=40, trace=False)
    results = sweep_v(config, [1.0, 10.0])
    assert [m.v for m in results] == [1.0, 10.0]
    assert [m.seed for m in results] == [3, 4]
    with pytest.raises(ValueError):
        sweep_v(config, [])
    with pytest.raises(ValueError):
        sweep_v(config, [-1.0])


def test_fit_queue_growth(small_config):
    base = run(replace(small_config, slots=20))
    synthetic = [replace(base, v=v, avg_z={0: 2.0 * v + 1.0, 1: 2.0 * v + 1.0}) for v in (1.0, 5.0, 10.0)]
    fit = fit_queue_growth(synthetic)
    assert fit.slope == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(1.0)
    assert fit.r_squared == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fit_queue_growth(synthetic[:1])


def test_check_feasibility_verdicts(small_config):
    metrics = run(small_config)
    verdicts = check_feasibility(metrics, small_config, tol=0.005)
    assert [v.kind for v in verdicts].count("reliability") == 2
    assert [v.kind for v in verdicts].count("power") == 5


def test_feasibility_table_extremes(small_config):
    silent = replace(small_config, slots=50, trace=False)
    cells = feasibility_table(silent, [(0.0, 0.9)], [Strategy.DIRECT, Strategy.OPTIMAL], tol=0.0)
    assert [c.strategy for c in cells] == [Strategy.DIRECT, Strategy.OPTIMAL]
    assert all(c.feasible for c in cells)

    # every slot carries a packet but no link can reach the destination
    dead = replace(silent, relays=(), fading=FadingModel(sd_mean=1e-6))
    cells = feasibility_table(dead, [(1.0, 1.0)], [Strategy.OPTIMAL], tol=0.0)
    assert not cells[0].feasible
    assert cells[0].margin < 0
    with pytest.raises(ValueError):
        feasibility_table(dead, [], [Strategy.OPTIMAL], tol=0.0)


@pytest.mark.slow
def test_larger_v_spends_less_power():
    config = SimConfig(
        sources=(SourceSpec(cell=0, lam=0.5, rho=0.9, beta=1.0),),
        relays=(RelaySpec(cell=0), RelaySpec(cell=0)),
        slots=20_000,
        seed=11,
    )
    low, high = sweep_v(config, [1.0, 100.0])
    assert high.sum_power <= low.sum_power
    assert high.mean_z >= low.mean_z
