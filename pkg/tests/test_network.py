import math

import pytest

from zevrpp import network
from zevrpp.errors import ModelError
from zevrpp.gp import convexity
from zevrpp.gp.expression import Registry
from zevrpp.network import Cargo, FlowKey, LegTimes, RoutePlan, Service, TimingParams

_DISTANCES = {
    (1, 2): 80e3,
    (1, 4): 300e3,
    (1, 5): 400e3,
    (2, 4): 280e3,
    (2, 5): 400e3,
    (4, 5): 150e3,
}


def _plan(*services: tuple[int, ...]) -> RoutePlan:
    return RoutePlan(
        ports=(1, 2, 3, 4, 5),
        services=tuple(Service("".join(map(str, s)), s) for s in services),
        distances=_DISTANCES,
    )


def _full_demand(sets: network.IndexSets) -> dict[tuple[int, int, Cargo], float]:
    return {(i, j, c): 1.0 for i, j in sets.suppliers for c in Cargo}


def test_two_port_service() -> None:
    sets = network.build_index_sets(_plan((1, 2)))

    assert sets.legs["12"] == ((1, 2),)
    assert set(sets.arcs["12"]) == {(1, 2), (2, 1)}
    assert sets.directed_legs("12") == ((1, 2), (2, 1))
    assert sets.next_leg("12", (2, 1)) == (1, 2)


def test_three_port_service_and_shared_suppliers() -> None:
    sets = network.build_index_sets(_plan((1, 4, 5), (2, 4, 5)))

    assert sets.legs["145"] == ((1, 4), (4, 5))
    assert len(sets.arcs["145"]) == 6
    assert sets.suppliers[(4, 5)] == ("145", "245")
    assert sets.suppliers[(1, 4)] == ("145",)
    assert sets.predecessors("145", 4) == (1, 4)
    assert sets.successors("145", 4) == (4, 5)


def test_invalid_services_are_rejected() -> None:
    with pytest.raises(ModelError, match="fewer than two"):
        network.build_index_sets(_plan((1,)))
    with pytest.raises(ModelError, match="route order"):
        network.build_index_sets(_plan((4, 1)))
    with pytest.raises(ModelError, match="unknown ports"):
        network.build_index_sets(_plan((1, 7)))
    with pytest.raises(ModelError, match="No distance"):
        network.build_index_sets(_plan((1, 2, 3)))


def test_onboard_flows_across_a_leg() -> None:
    sets = network.build_index_sets(_plan((1, 4, 5)))
    flows = network.create_flows(Registry(), sets, _full_demand(sets))

    outbound = network.leg_flows(sets, "145", (4, 5), Cargo.PAX, flows)
    inbound = network.leg_flows(sets, "145", (5, 4), Cargo.PAX, flows)

    assert outbound == [flows[FlowKey("145", 1, 5, Cargo.PAX)], flows[FlowKey("145", 4, 5, Cargo.PAX)]]
    assert inbound == [flows[FlowKey("145", 5, 1, Cargo.PAX)], flows[FlowKey("145", 5, 4, Cargo.PAX)]]


def test_zero_demand_arcs_get_no_flow() -> None:
    sets = network.build_index_sets(_plan((1, 4, 5)))
    demand = {(1, 5, Cargo.PAX): 2.0, (5, 1, Cargo.RORO): 1.0, (1, 4, Cargo.PAX): 0.0}

    flows = network.create_flows(Registry(), sets, demand)

    assert set(flows) == {FlowKey("145", 1, 5, Cargo.PAX), FlowKey("145", 5, 1, Cargo.RORO)}


def test_capacity_and_demand_counts() -> None:
    sets = network.build_index_sets(_plan((1, 2), (1, 4, 5), (2, 4, 5)))
    registry = Registry()
    demand = _full_demand(sets)
    flows = network.create_flows(registry, sets, demand)
    frequency = {s.id: registry.integer(f"{s.id}.N_rt") for s in sets.plan.services}
    capacity = {
        (s.id, c): registry.continuous(f"{s.id}.cap_{c}").as_monomial()
        for s in sets.plan.services
        for c in Cargo
    }

    caps = network.capacity_constraints(sets, flows, frequency, capacity)
    demands = network.demand_constraints(sets, flows, demand)

    expected = sum(len(Cargo) * 2 * (len(s.ports) - 1) for s in sets.plan.services)
    assert len(caps) == expected
    assert len(demands) == len(sets.suppliers) * len(Cargo)
    for c in caps + demands:
        assert convexity.check_log_convex(c, samples=100).passed


def test_capacity_rows_skip_empty_legs() -> None:
    sets = network.build_index_sets(_plan((1, 4, 5)))
    registry = Registry()
    demand = {(1, 4, Cargo.PAX): 1.0}
    flows = network.create_flows(registry, sets, demand)
    frequency = {"145": registry.integer("145.N_rt")}
    capacity = {("145", c): registry.continuous(f"145.cap_{c}").as_monomial() for c in Cargo}

    caps = network.capacity_constraints(sets, flows, frequency, capacity)

    assert [c.label for c in caps] == ["Operations:capacity:145:1-4:pax"]


def test_every_flow_is_carried_on_exactly_its_path() -> None:
    sets = network.build_index_sets(_plan((1, 4, 5), (2, 4, 5)))
    flows = network.create_flows(Registry(), sets, _full_demand(sets))

    for key, variable in flows.items():
        ports = sets.service(key.service).ports
        lo, hi = sorted((ports.index(key.origin), ports.index(key.destination)))
        carrying = [
            leg
            for leg in sets.directed_legs(key.service)
            if variable in network.leg_flows(sets, key.service, leg, key.cargo, flows)
        ]
        assert len(carrying) == hi - lo
        forward = ports.index(key.origin) < ports.index(key.destination)
        for i, j in carrying:
            assert (ports.index(i) < ports.index(j)) == forward


def test_sea_time_minimum_speed() -> None:
    registry = Registry()
    v = registry.continuous("v")
    time = network.sea_time(1000.0, v, 0.05, 0.02)
    v_star = math.sqrt(2 * 1000.0 / (1 / 0.05 + 1 / 0.02))

    best = time.evaluate({v: v_star})
    assert best < time.evaluate({v: 1.01 * v_star})
    assert best < time.evaluate({v: 0.99 * v_star})
    assert network.sea_time(1000.0, v, 1e12, 1e12).evaluate({v: 10.0}) == pytest.approx(100.0)


def test_handling_turns_around_at_terminals() -> None:
    sets = network.build_index_sets(_plan((1, 4, 5)))
    flows = network.create_flows(Registry(), sets, _full_demand(sets))

    unload, load = network.handling_flows(sets, "145", (4, 5), Cargo.RORO, flows)
    assert unload == [flows[FlowKey("145", 1, 5, Cargo.RORO)], flows[FlowKey("145", 4, 5, Cargo.RORO)]]
    assert load == [flows[FlowKey("145", 5, 1, Cargo.RORO)], flows[FlowKey("145", 5, 4, Cargo.RORO)]]

    unload, load = network.handling_flows(sets, "145", (1, 4), Cargo.RORO, flows)
    assert unload == [flows[FlowKey("145", 1, 4, Cargo.RORO)]]
    assert load == [flows[FlowKey("145", 4, 5, Cargo.RORO)]]


def test_availability_scales_with_frequency() -> None:
    sets = network.build_index_sets(_plan((1, 2)))
    registry = Registry()
    flows = network.create_flows(registry, sets, _full_demand(sets))
    times = {
        ("12", leg): LegTimes(
            registry.continuous(f"v{leg}"),
            registry.continuous(f"tp{leg}"),
            registry.continuous(f"tc{leg}"),
        )
        for leg in sets.directed_legs("12")
    }
    n_rt, n_v = registry.integer("N_rt"), registry.integer("N_v")
    params = TimingParams(1e9, 1e9, {Cargo.PAX: 100.0, Cargo.RORO: 100.0}, 172800.0)

    constraints = network.timing_and_availability(sets, flows, times, {"12": n_rt}, {"12": n_v}, params)

    (availability,) = [c for c in constraints if c.label == "Operations:availability:12"]
    point = {v: 1.0 for v in flows.values()} | {n_v: 1.0}
    for leg_times in times.values():
        point |= {leg_times.speed: 8.0, leg_times.port_time: 3600.0, leg_times.charge_time: 1800.0}
    cycle = 2 * (80e3 / 8.0 + 3600.0)
    assert availability.expr.evaluate(point | {n_rt: 1.0}) == pytest.approx(cycle / 172800.0)
    assert availability.expr.evaluate(point | {n_rt: 2.0}) == pytest.approx(2 * cycle / 172800.0)
    port_labels = [c.label for c in constraints if c.label.startswith("Operations:port_")]
    # Per arrival: charging plus unloading and loading of both cargoes.
    assert len(port_labels) == 2 * (1 + 2 * len(Cargo))


def test_service_level_examples() -> None:
    registry = Registry()
    f1, f2 = registry.continuous("f1"), registry.continuous("f2")
    k1 = FlowKey("12", 1, 2, Cargo.PAX)
    k2 = FlowKey("12", 2, 1, Cargo.PAX)
    flows = {k1: f1, k2: f2}

    single = network.service_level_constraint({k1: f1}, {k1: 1.0}, 0.0)
    assert single.violation({f1: 1.0}) == 0.0
    assert single.violation({f1: 0.9}) > 0.0

    pair = network.service_level_constraint(flows, {k1: 1.0, k2: 1.0}, 2 * math.log(3.0))
    assert pair.violation({f1: 1.0, f2: 9.0}) <= 1e-12
    assert pair.violation({f1: 2.0, f2: 4.0}) > 0.0

    with pytest.raises(ModelError):
        network.service_level_constraint(flows, {k1: 0.0, k2: 0.0}, 0.0)


def test_utility_weights_and_minimum() -> None:
    plan = _plan((1, 4, 5), (2, 4, 5))
    sets = network.build_index_sets(plan)
    demand = {(4, 5, Cargo.PAX): 4.0, (1, 5, Cargo.PAX): 2.0}
    flows = network.create_flows(Registry(), sets, demand)

    weights = network.utility_weights(plan, flows, {Cargo.PAX: 2.0, Cargo.RORO: 1.0})

    total = 150e3 + 400e3
    assert weights[FlowKey("145", 1, 5, Cargo.PAX)] == pytest.approx(400e3 / total * 2.0)
    assert weights[FlowKey("245", 4, 5, Cargo.PAX)] == pytest.approx(150e3 / total * 2.0)
    # Half of 2 on one supplier, half of 4 split between two: one unit per flow.
    assert network.minimum_utility(weights, demand, sets.suppliers, 0.5) == pytest.approx(
        0.0, abs=1e-12
    )
    assert network.minimum_utility(weights, demand, sets.suppliers, 1.0) == pytest.approx(
        math.log(2.0) * 2.0 * (400e3 + 2 * 150e3) / total
    )
