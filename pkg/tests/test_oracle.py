import numpy as np
import pytest

from coopsim.channel import FadingModel
from coopsim.dp import CooperativeTwoStage, enumerate_outcomes
from coopsim.oracle import GridSpec, brute_force, grid_mode_costs, grid_second_stage
from coopsim.phy import LinkBudget, Mode, Scheme
from coopsim.solver import af_source_grid, best_action

from conftest import make_input, make_state, random_input

# 1e-3 P_max per variable up to two variables, 1e-2 P_max beyond
FINE_GRID = GridSpec()
FAST_GRID = GridSpec(steps={1: 1000, 2: 300, 3: 40})


def _tolerance(inp, mode, spec):
    highs = [inp.source_max] + [inp.relay_max[i] for i in inp.state.relays]
    weights = [inp.source_weight] + [inp.relay_weights[i] for i in inp.state.relays]
    if mode is Mode.DIRECT:
        return spec.slack(highs[:1], weights[:1])
    if mode is Mode.MULTIHOP:
        return spec.slack(highs[:1] * 2, [max(weights)] * 2)
    return spec.slack(highs, weights)


def _solver_excess(inp, mode):
    """How far the AF source-power grid can sit above the continuous optimum"""
    if mode is not Mode.COOPERATIVE or not inp.scheme.amplify:
        return 0.0
    grid = af_source_grid(inp.source_max, inp.af_grid_points)
    return (grid[1] - grid[0]) * inp.source_weight


def _assert_agrees(inp, spec):
    _, table = best_action(inp)
    reference = grid_mode_costs(inp, spec)
    for mode in (Mode.DIRECT, Mode.MULTIHOP, Mode.COOPERATIVE):
        solved, grid = table[mode], reference[mode]
        if not grid.feasible:
            assert not solved.feasible or solved.cost <= grid.cost
            continue
        assert solved.feasible
        # the grid can only do worse than the continuous optimum, by at most one step per variable
        assert solved.cost <= grid.cost + _solver_excess(inp, mode) + 1e-6
        assert grid.cost - solved.cost <= _tolerance(inp, mode, spec) + 1e-6


def test_grid_spec_limits():
    with pytest.raises(ValueError):
        GridSpec(steps={1: 300_000_000}).axes([1.0])
    with pytest.raises(ValueError):
        GridSpec().intervals(5)
    assert GridSpec().slack([10.0, 10.0], [1.0, 2.0]) == pytest.approx(0.03)
    assert GridSpec().slack([10.0] * 4, [1.0] * 4) == pytest.approx(0.4)


def test_blocked_search_matches_single_block(monkeypatch):
    inp = make_input(make_state(0.2, [(1, 2.0, 1.0), (2, 0.8, 1.5)]), Scheme.NONREG_DF_ORTHO)
    spec = GridSpec(steps={1: 20, 2: 20, 3: 20})
    whole = grid_mode_costs(inp, spec)
    monkeypatch.setattr(brute_force, "CHUNK_POINTS", 5)
    blocked = grid_mode_costs(inp, spec)
    for mode in (Mode.DIRECT, Mode.MULTIHOP, Mode.COOPERATIVE):
        assert blocked[mode].cost == pytest.approx(whole[mode].cost, rel=1e-12)
    alloc = whole[Mode.COOPERATIVE].action.alloc
    # every grid coordinate is a multiple of P_max / 20
    for p in (alloc.source_power, *alloc.relay_powers.values()):
        assert p / 0.5 == pytest.approx(round(p / 0.5))


def test_oracle_matches_regdf_example(regdf_example):
    table = grid_mode_costs(regdf_example, FAST_GRID)
    assert table[Mode.COOPERATIVE].cost == pytest.approx(
        1.25, abs=_tolerance(regdf_example, Mode.COOPERATIVE, FAST_GRID)
    )
    assert table[Mode.DIRECT].cost == pytest.approx(2.0, abs=1e-9)


@pytest.mark.parametrize("scheme", list(Scheme))
@pytest.mark.parametrize("relays", [1, 2])
def test_solver_agrees_with_fine_grid(scheme, relays):
    rng = np.random.default_rng(100 + relays)
    for _ in range(6):
        _assert_agrees(random_input(rng, scheme, relays), FINE_GRID)


@pytest.mark.slow
@pytest.mark.parametrize("scheme", list(Scheme))
def test_solver_agrees_with_fine_grid_three_relays(scheme):
    rng = np.random.default_rng(103)
    for _ in range(3):
        _assert_agrees(random_input(rng, scheme, 3), FINE_GRID)


@pytest.mark.slow
@pytest.mark.parametrize("scheme", list(Scheme))
def test_solver_agrees_with_grid_on_many_instances(scheme):
    rng = np.random.default_rng(2000)
    for _ in range(1000):
        _assert_agrees(random_input(rng, scheme, 1), FAST_GRID)


def test_oracle_rejects_many_relays():
    state = make_state(1.0, [(i, 1.0, 1.0) for i in range(1, 5)])
    with pytest.raises(ValueError):
        grid_mode_costs(make_input(state))


def _second_stage_model(reward=10.0):
    return CooperativeTwoStage(
        space=enumerate_outcomes([1], bins=1),
        fading=FadingModel(),
        budget=LinkBudget(),
        scheme=Scheme.REG_DF_ORTHO,
        reward=reward,
        source_weight=1.0,
        relay_weights={1: 1.0},
        relay_max={1: 10.0},
        source_max=10.0,
    )


def test_second_stage_agrees_with_grid():
    model = _second_stage_model()
    decoded = model.space.index(next(o for o in model.space.outcomes if o.decoded))
    value, powers = model.second_stage(1.0, decoded)
    reference = grid_second_stage(model, 1.0, decoded, GridSpec(steps={1: 1000}))
    assert value == pytest.approx(reference, abs=1e-3)
    # interior optimum of P - 10 exp(-1/P)
    assert 2.0 < powers[1] < 3.0


def test_second_stage_without_decoders_is_flat():
    model = _second_stage_model()
    empty = model.space.index(next(o for o in model.space.outcomes if not o.decoded))
    assert grid_second_stage(model, 1.0, empty) == pytest.approx(model.stage_two(1.0, empty))
