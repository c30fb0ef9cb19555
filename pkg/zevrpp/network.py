"""Route structure and the operational constraint families.

Ports are linearly ordered. A service calls a subset of ports in that order
outbound and in reverse inbound; cargo travels directly from origin to
destination on one service (no transshipment).
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
from typing import Iterable, Mapping, NamedTuple, Sequence

import attrs

from zevrpp.errors import ModelError
from zevrpp.gp import constraint
from zevrpp.gp.constraint import Constraint
from zevrpp.gp.expression import Monomial, Posynomial, Registry, Variable, posy_sum

logger = logging.getLogger(__name__)

Arc = tuple[int, int]


class Cargo(enum.StrEnum):
    PAX = "pax"
    RORO = "roro"


class FlowKey(NamedTuple):
    service: str
    origin: int
    destination: int
    cargo: Cargo


@attrs.frozen
class Service:
    id: str
    ports: tuple[int, ...]

    @property
    def origin(self) -> int:
        return self.ports[0]

    @property
    def destination(self) -> int:
        return self.ports[-1]


@attrs.frozen
class RoutePlan:
    """``distances`` holds metres per unordered port pair, keyed ``(low, high)``."""

    ports: tuple[int, ...]
    services: tuple[Service, ...]
    distances: Mapping[Arc, float]

    def distance(self, i: int, j: int) -> float:
        key = (min(i, j), max(i, j))
        if key not in self.distances:
            raise ModelError(f"No distance given between ports {i} and {j}")
        return self.distances[key]


@attrs.frozen
class IndexSets:
    plan: RoutePlan
    legs: Mapping[str, tuple[Arc, ...]]
    """Outbound legs per service."""
    arcs: Mapping[str, tuple[Arc, ...]]
    suppliers: Mapping[Arc, tuple[str, ...]]

    def service(self, service_id: str) -> Service:
        return next(s for s in self.plan.services if s.id == service_id)

    def predecessors(self, service_id: str, port: int) -> tuple[int, ...]:
        """Ports called at or before ``port`` on the outbound pass."""
        ports = self.service(service_id).ports
        return ports[: ports.index(port) + 1]

    def successors(self, service_id: str, port: int) -> tuple[int, ...]:
        """Ports called at or after ``port`` on the outbound pass."""
        ports = self.service(service_id).ports
        return ports[ports.index(port) :]

    def directed_legs(self, service_id: str) -> tuple[Arc, ...]:
        """The round trip in sailing order: outbound legs, then inbound legs."""
        outbound = self.legs[service_id]
        return outbound + tuple((j, i) for i, j in reversed(outbound))

    def next_leg(self, service_id: str, leg: Arc) -> Arc:
        cycle = self.directed_legs(service_id)
        return cycle[(cycle.index(leg) + 1) % len(cycle)]


def build_index_sets(plan: RoutePlan) -> IndexSets:
    order = {p: k for k, p in enumerate(plan.ports)}
    legs: dict[str, tuple[Arc, ...]] = {}
    arcs: dict[str, tuple[Arc, ...]] = {}
    suppliers: dict[Arc, list[str]] = {}
    for service in plan.services:
        if len(service.ports) < 2:
            raise ModelError(f"Service {service.id} calls fewer than two ports")
        unknown = [p for p in service.ports if p not in order]
        if unknown:
            raise ModelError(f"Service {service.id} calls unknown ports {unknown}")
        ranks = [order[p] for p in service.ports]
        if ranks != sorted(set(ranks)):
            raise ModelError(f"Service {service.id} ports are not in route order")
        legs[service.id] = tuple(itertools.pairwise(service.ports))
        arcs[service.id] = tuple(itertools.permutations(service.ports, 2))
        for arc in arcs[service.id]:
            suppliers.setdefault(arc, []).append(service.id)
        for i, j in legs[service.id]:
            plan.distance(i, j)
    return IndexSets(plan, legs, arcs, {a: tuple(s) for a, s in suppliers.items()})


Demand = Mapping[tuple[int, int, Cargo], float]


def create_flows(
    registry: Registry, sets: IndexSets, demand: Demand
) -> dict[FlowKey, Variable]:
    """One flow variable per service, arc and cargo with positive demand."""
    flows: dict[FlowKey, Variable] = {}
    for service in sets.plan.services:
        for i, j in sets.arcs[service.id]:
            for cargo in Cargo:
                if demand.get((i, j, cargo), 0.0) > 0:
                    key = FlowKey(service.id, i, j, cargo)
                    flows[key] = registry.continuous(f"{service.id}.f_{i}_{j}_{cargo}")
    skipped = [
        (i, j, c)
        for (i, j, c), value in demand.items()
        if value > 0 and (i, j) not in sets.suppliers
    ]
    if skipped:
        logger.info("Demand on %d arcs has no supplying service: %s", len(skipped), skipped)
    return flows


def leg_flows(
    sets: IndexSets, service_id: str, leg: Arc, cargo: Cargo, flows: Mapping[FlowKey, Variable]
) -> list[Variable]:
    """Flows on board while sailing ``leg`` in either direction."""
    i, j = leg
    ports = sets.service(service_id).ports
    if ports.index(i) < ports.index(j):
        origins, destinations = sets.predecessors(service_id, i), sets.successors(service_id, j)
    else:
        origins, destinations = sets.successors(service_id, i), sets.predecessors(service_id, j)
    return [
        flows[key]
        for a in origins
        for b in destinations
        if (key := FlowKey(service_id, a, b, cargo)) in flows
    ]


def capacity_constraints(
    sets: IndexSets,
    flows: Mapping[FlowKey, Variable],
    frequency: Mapping[str, Variable],
    capacity: Mapping[tuple[str, Cargo], Monomial],
) -> list[Constraint]:
    """Cargo on board every leg stays within ``N_rt · f_cap``.

    Legs with no flow on board for a cargo get no row.
    """
    constraints: list[Constraint] = []
    for service in sets.plan.services:
        for leg in sets.directed_legs(service.id):
            for cargo in Cargo:
                onboard = leg_flows(sets, service.id, leg, cargo, flows)
                if not onboard:
                    continue
                constraints.append(
                    constraint.le(
                        posy_sum(f.as_monomial() for f in onboard),
                        frequency[service.id] * capacity[(service.id, cargo)],
                        f"Operations:capacity:{service.id}:{leg[0]}-{leg[1]}:{cargo}",
                    )
                )
    return constraints


def demand_constraints(
    sets: IndexSets, flows: Mapping[FlowKey, Variable], demand: Demand
) -> list[Constraint]:
    by_arc: dict[tuple[int, int, Cargo], list[Variable]] = {}
    for key, variable in flows.items():
        by_arc.setdefault((key.origin, key.destination, key.cargo), []).append(variable)
    return [
        constraint.le(
            posy_sum(v.as_monomial() for v in variables),
            demand[arc],
            f"Operations:demand:{arc[0]}-{arc[1]}:{arc[2]}",
        )
        for arc, variables in sorted(by_arc.items())
    ]


def sea_time(length: float, speed: Variable, acceleration: float, deceleration: float) -> Posynomial:
    """Cruise plus linear speed-up and slow-down: ``l/v + (v/2)(1/a⁺ + 1/a⁻)``."""
    ramp = 0.5 * (1 / acceleration + 1 / deceleration)
    return Posynomial((length * speed**-1, ramp * speed.as_monomial()))


def handling_flows(
    sets: IndexSets, service_id: str, leg: Arc, cargo: Cargo, flows: Mapping[FlowKey, Variable]
) -> tuple[list[Variable], list[Variable]]:
    """Cargo unloaded and loaded at the arrival port of ``leg``.

    Loading is for the next departure, so the terminal ports turn the cycle
    around.
    """
    ports = sets.service(service_id).ports
    i, j = leg
    upstream = ports[: ports.index(j)] if ports.index(i) < ports.index(j) else ports[ports.index(j) + 1 :]
    _, k = sets.next_leg(service_id, leg)
    downstream = ports[ports.index(j) + 1 :] if ports.index(k) > ports.index(j) else ports[: ports.index(j)]
    unload = [
        flows[key] for a in upstream if (key := FlowKey(service_id, a, j, cargo)) in flows
    ]
    load = [
        flows[key] for b in downstream if (key := FlowKey(service_id, j, b, cargo)) in flows
    ]
    return unload, load


@attrs.frozen
class LegTimes:
    """Speed and times for one directed leg; port and charge times are at its arrival."""

    speed: Variable
    port_time: Variable
    charge_time: Variable


@attrs.frozen
class TimingParams:
    acceleration: float
    deceleration: float
    handling_time: Mapping[Cargo, float]
    """Seconds per unit of flow (per thousand passengers or lane-metres)."""
    route_time: float


def port_time_constraints(
    sets: IndexSets,
    flows: Mapping[FlowKey, Variable],
    times: Mapping[tuple[str, Arc], LegTimes],
    params: TimingParams,
) -> list[Constraint]:
    """``t_port`` bounds every handling operation and the charging time."""
    constraints: list[Constraint] = []
    for service in sets.plan.services:
        for leg in sets.directed_legs(service.id):
            leg_times = times[(service.id, leg)]
            tag = f"{service.id}:{leg[0]}-{leg[1]}"
            constraints.append(
                constraint.le(leg_times.charge_time, leg_times.port_time, f"Operations:port_charge:{tag}")
            )
            for cargo in Cargo:
                for kind, moved in zip(
                    ("unload", "load"), handling_flows(sets, service.id, leg, cargo, flows)
                ):
                    if not moved:
                        continue
                    constraints.append(
                        constraint.le(
                            posy_sum(f.as_monomial() for f in moved).scaled(
                                Monomial(params.handling_time[cargo])
                            ),
                            leg_times.port_time,
                            f"Operations:port_{kind}:{tag}:{cargo}",
                        )
                    )
    return constraints


def timing_and_availability(
    sets: IndexSets,
    flows: Mapping[FlowKey, Variable],
    times: Mapping[tuple[str, Arc], LegTimes],
    frequency: Mapping[str, Variable],
    fleet_size: Mapping[str, Variable],
    params: TimingParams,
) -> list[Constraint]:
    """Port-time epigraphs plus ``N_rt Σ (t_sea + t_port) ≤ N_v t_route`` per service."""
    constraints = port_time_constraints(sets, flows, times, params)
    for service in sets.plan.services:
        cycle = posy_sum(
            [
                *(
                    sea_time(
                        sets.plan.distance(*leg),
                        times[(service.id, leg)].speed,
                        params.acceleration,
                        params.deceleration,
                    )
                    for leg in sets.directed_legs(service.id)
                ),
                *(times[(service.id, leg)].port_time.as_monomial() for leg in sets.directed_legs(service.id)),
            ]
        )
        constraints.append(
            constraint.le(
                cycle.scaled(frequency[service.id].as_monomial()),
                params.route_time * fleet_size[service.id],
                f"Operations:availability:{service.id}",
            )
        )
    return constraints


def utility_weights(
    plan: RoutePlan,
    flows: Iterable[FlowKey],
    cargo_values: Mapping[Cargo, float],
) -> dict[FlowKey, float]:
    """``α = (l_arc / Σ l_arc) · value_c`` over the distinct served arcs."""
    keys = list(flows)
    arcs = sorted({(k.origin, k.destination) for k in keys})
    total = sum(plan.distance(i, j) for i, j in arcs)
    if total <= 0:
        raise ModelError("Served arcs have no length")
    return {
        k: plan.distance(k.origin, k.destination) / total * cargo_values[k.cargo] for k in keys
    }


def minimum_utility(
    weights: Mapping[FlowKey, float],
    demand: Demand,
    suppliers: Mapping[Arc, Sequence[str]],
    service_fraction: float,
) -> float:
    """Utility of serving ``service_fraction`` of each arc's demand, split evenly."""
    return sum(
        alpha
        * math.log(
            service_fraction
            * demand[(k.origin, k.destination, k.cargo)]
            / len(suppliers[(k.origin, k.destination)])
        )
        for k, alpha in weights.items()
    )


def service_level_constraint(
    flows: Mapping[FlowKey, Variable],
    weights: Mapping[FlowKey, float],
    minimum: float,
) -> Constraint:
    """``Π f^α ≥ exp(U_min)``."""
    if not weights or all(w == 0 for w in weights.values()):
        raise ModelError("Service level needs at least one positive utility weight")
    if any(w < 0 for w in weights.values()):
        raise ModelError("Utility weights must be nonnegative")
    utility = Monomial(1.0, [(flows[k], w) for k, w in weights.items() if w > 0])
    return constraint.MonoGE(utility, math.exp(minimum), "Operations:service_level")
