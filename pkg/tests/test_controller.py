import math

import pytest

from coopsim.controller import (
    ControllerParams,
    DriftPlusPenaltyController,
    VirtualQueues,
    decide,
    performance_bound,
    power_by_node,
    solver_input,
    update_queues,
)
from coopsim.phy import LinkBudget, Mode, PowerAllocation, Scheme

from conftest import make_state


def make_params(v=10.0, alpha=0.0, beta=1.0, lam=0.5, rho=0.98, p_avg=1.0, p_max=10.0, relays=(1,)):
    nodes = [0, *relays]
    return ControllerParams(
        v=v,
        rho={0: rho},
        lam={0: lam},
        alpha={0: alpha},
        p_avg={i: p_avg for i in nodes},
        p_max={i: p_max for i in nodes},
        beta={i: beta for i in nodes},
    )


def test_queue_update_example():
    params = make_params()
    q = VirtualQueues(z={0: 0.0}, x={0: 1.0, 1: 0.0})
    nxt = update_queues(q, outcomes={0: 0}, arrivals={0: 1}, powers={0: 6.0}, params=params)
    assert nxt.z[0] == pytest.approx(0.98)
    assert nxt.x[0] == pytest.approx(6.0)
    assert nxt.x[1] == 0.0


def test_queue_update_serves_then_floors_at_zero():
    params = make_params()
    q = VirtualQueues(z={0: 0.5}, x={0: 0.2, 1: 3.0})
    nxt = update_queues(q, outcomes={0: 1}, arrivals={}, powers={}, params=params)
    assert nxt.z[0] == 0.0
    assert nxt.x == {0: 0.0, 1: pytest.approx(2.0)}


def test_queues_reject_negative_values():
    with pytest.raises(ValueError):
        VirtualQueues(z={0: -1.0})


def test_params_validation():
    with pytest.raises(ValueError):
        make_params(v=-1.0)
    with pytest.raises(ValueError):
        make_params(rho=1.5)
    with pytest.raises(ValueError):
        make_params(p_avg=11.0)
    with pytest.raises(ValueError):
        make_params(beta=-0.1)


def test_performance_bound_single_node():
    params = make_params(relays=())
    constants = performance_bound(params, 0)
    # [1 + 0.25 * 0.9604 + 1 + 100] / 2
    assert constants.b == pytest.approx(51.12005)
    assert constants.bound_utility_gap == pytest.approx(5.112005)
    assert constants.queue_bound_scale == pytest.approx(51.12005 + 10.0 * 10.0)


def test_performance_bound_without_traffic():
    params = make_params(v=0.0, lam=0.0, rho=0.0, p_avg=1e-9, p_max=1e-9, relays=())
    constants = performance_bound(params, 0)
    assert constants.b == pytest.approx(0.5)
    assert math.isinf(constants.bound_utility_gap)


def test_performance_bound_sums_all_nodes():
    one = performance_bound(make_params(relays=()), 0).b
    three = performance_bound(make_params(relays=(1, 2)), 0).b
    assert three - one == pytest.approx(101.0)


def test_solver_input_uses_queues():
    params = make_params(v=2.0, alpha=1.0, beta=0.5)
    q = VirtualQueues(z={0: 4.0}, x={0: 1.0, 1: 3.0})
    state = make_state(1.0, [(1, 1.0, 1.0)])
    inp = solver_input(q, state, params, LinkBudget(relay_count=7), Scheme.REG_DF_ORTHO)
    assert inp.reward == pytest.approx(6.0)
    assert inp.source_weight == pytest.approx(2.0)
    assert inp.relay_weights[1] == pytest.approx(4.0)
    assert inp.budget.relay_count == 1


def test_decide_idle_without_packet():
    params = make_params()
    q = VirtualQueues.zeros([0], [0, 1])
    action, table = decide(q, make_state(5.0), params, LinkBudget(), Scheme.REG_DF_ORTHO, arrived=False)
    assert action.mode is Mode.IDLE
    assert table == {}


def test_decide_transmits_once_reliability_debt_grows():
    params = make_params(v=1.0)
    state = make_state(1.0)
    empty = VirtualQueues.zeros([0], [0, 1])
    assert decide(empty, state, params, LinkBudget(), Scheme.REG_DF_ORTHO)[0].mode is Mode.IDLE
    owed = VirtualQueues(z={0: 5.0}, x={0: 0.0, 1: 0.0})
    assert decide(owed, state, params, LinkBudget(), Scheme.REG_DF_ORTHO)[0].mode is Mode.DIRECT


def test_controller_tracks_queues():
    params = make_params(v=1.0)
    controller = DriftPlusPenaltyController(params, LinkBudget(), Scheme.REG_DF_ORTHO, modes=[Mode.DIRECT])
    assert controller.queues.z == {0: 0.0}
    controller.update(outcomes={0: 0}, arrivals={0: 1}, powers={})
    controller.update(outcomes={0: 0}, arrivals={0: 1}, powers={})
    assert controller.queues.z[0] == pytest.approx(1.96)
    action, table = controller.decide(make_state(0.5, [(1, 2.0, 1.0)]))
    assert set(table) == {Mode.IDLE, Mode.DIRECT}
    assert action.mode is Mode.IDLE
    assert [c.source for c in controller.constants()] == [0]


def test_power_by_node():
    alloc = PowerAllocation(1.5, {1: 0.0, 2: 2.0})
    assert power_by_node(alloc, 0) == {0: 1.5, 2: 2.0}
    assert power_by_node(PowerAllocation(), 0) == {}


def test_with_v():
    params = make_params(v=1.0)
    assert params.with_v(50.0).v == 50.0
    assert params.v == 1.0
    assert params.sources == [0]
    assert params.nodes == [0, 1]


@pytest.mark.parametrize("scheme", list(Scheme))
@pytest.mark.parametrize("node", [0, 1, 2])
def test_mode_costs_grow_with_power_queue(scheme, node):
    params = make_params(v=1.0, relays=(1, 2))
    state = make_state(0.3, [(1, 2.0, 0.8), (2, 1.2, 1.5)])
    budget = LinkBudget(1.0, 1.0, 2)
    previous = None
    for backlog in (0.0, 0.5, 2.0, 10.0):
        x = {0: 0.0, 1: 0.0, 2: 0.0}
        x[node] = backlog
        _, table = decide(VirtualQueues(z={0: 40.0}, x=x), state, params, budget, scheme, af_grid_points=25)
        if previous is not None:
            for mode, mode_cost in table.items():
                before = previous[mode].cost
                if math.isfinite(before):
                    assert mode_cost.cost >= before - 1e-7 * (1.0 + abs(before))
            assert min(c.cost for c in table.values()) >= min(c.cost for c in previous.values()) - 1e-7
        previous = table
