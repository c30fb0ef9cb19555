"""Decision variables of one case: vessel designs, services, chargers and flows."""

from __future__ import annotations

from typing import Mapping

import attrs

from zevrpp import network
from zevrpp.gp.expression import Monomial, Registry, Variable
from zevrpp.model.scenario import Case, FleetMode, ParameterSet
from zevrpp.network import Arc, Cargo, FlowKey, IndexSets, LegTimes
from zevrpp.vessel.arrangement import Arrangement
from zevrpp.vessel.battery import BatteryVars
from zevrpp.vessel.hull import SIMPSON_WEIGHTS, HullForm, HullVars
from zevrpp.vessel.resistance import LegHydro
from zevrpp.vessel.structures import GirderSection

SHARED_DESIGN = "fleet"


def _gauges(registry: Registry, prefix: str) -> tuple[Variable, ...]:
    return tuple(registry.continuous(f"{prefix}{k}") for k in range(len(SIMPSON_WEIGHTS)))


@attrs.frozen
class VesselDesign:
    id: str
    hull: HullVars
    superstructure_length: Variable
    deck_plate: Variable
    wetted_area: Variable
    wetted_gauges: tuple[Variable, ...]
    girth_gauges: tuple[Variable, ...]
    """Simpson gauges of the midship girth from keel to deck."""
    arrangement: Arrangement
    battery_capacity: Variable
    max_shaft_power: Variable
    enclosed_volume: Variable

    @classmethod
    def create(
        cls, registry: Registry, design_id: str, form: HullForm, room_count: int
    ) -> VesselDesign:
        p = f"{design_id}."
        return cls(
            design_id,
            HullVars(
                registry.continuous(f"{p}L"),
                registry.continuous(f"{p}B"),
                registry.continuous(f"{p}T"),
                registry.continuous(f"{p}D"),
                form,
            ),
            registry.continuous(f"{p}L_sup"),
            registry.continuous(f"{p}p_deck"),
            registry.continuous(f"{p}A_wetted"),
            _gauges(registry, f"{p}r_wetted"),
            _gauges(registry, f"{p}r_girth"),
            Arrangement.create(registry, p, room_count),
            registry.continuous(f"{p}E_batt"),
            registry.continuous(f"{p}P_shaft_max"),
            registry.continuous(f"{p}V_int"),
        )

    @property
    def section(self) -> GirderSection:
        return GirderSection(self.hull.breadth, self.hull.depth, self.deck_plate)

    def pax_capacity(self, parameters: ParameterSet) -> Monomial:
        """Passenger capacity in thousands: superstructure deck area over area per passenger."""
        per_area = parameters.si("superstructure.decks") / (
            1000 * parameters.si("superstructure.pax_area")
        )
        return per_area * self.hull.breadth * self.superstructure_length

    def roro_capacity(self, parameters: ParameterSet) -> Monomial:
        """Lane-metres in thousands over two ro-ro decks."""
        return (2 / (1000 * parameters.si("superstructure.lane_area"))) * (
            self.hull.breadth * self.hull.length
        )

    def capacity(self, cargo: Cargo, parameters: ParameterSet) -> Monomial:
        if cargo is Cargo.PAX:
            return self.pax_capacity(parameters)
        return self.roro_capacity(parameters)


@attrs.frozen
class LegVars:
    hydro: LegHydro
    times: LegTimes


@attrs.frozen
class ServiceVars:
    id: str
    design: VesselDesign
    frequency: Variable
    """Round trips of the whole service per planning horizon."""
    fleet_size: Variable
    battery: BatteryVars
    legs: Mapping[Arc, LegVars]


@attrs.frozen
class FleetVars:
    designs: Mapping[str, VesselDesign]
    services: Mapping[str, ServiceVars]
    chargers: Mapping[int, Variable]
    """Shore charger power per called port."""
    flows: Mapping[FlowKey, Variable]

    @property
    def integer_vars(self) -> frozenset[Variable]:
        return frozenset(
            v for s in self.services.values() for v in (s.frequency, s.fleet_size)
        )

    def services_of(self, design_id: str) -> list[ServiceVars]:
        return [s for s in self.services.values() if s.design.id == design_id]


def create_fleet(
    registry: Registry,
    case: Case,
    sets: IndexSets,
    demand: network.Demand,
    form: HullForm,
    room_count: int,
) -> FleetVars:
    """Designs are shared by every service in uniform mode, one per service otherwise."""
    service_ids = [s.id for s in case.plan.services]
    if case.mode is FleetMode.UNIFORM:
        shared = VesselDesign.create(registry, SHARED_DESIGN, form, room_count)
        designs = {SHARED_DESIGN: shared}
        design_of = {sid: shared for sid in service_ids}
    else:
        designs = {sid: VesselDesign.create(registry, sid, form, room_count) for sid in service_ids}
        design_of = designs
    services: dict[str, ServiceVars] = {}
    for sid in service_ids:
        design = design_of[sid]
        legs = {}
        for i, j in sets.directed_legs(sid):
            prefix = f"{sid}.{i}-{j}."
            hydro = LegHydro.create(registry, prefix)
            times = LegTimes(
                hydro.speed,
                registry.continuous(f"{prefix}t_port"),
                registry.continuous(f"{prefix}t_cha"),
            )
            legs[(i, j)] = LegVars(hydro, times)
        services[sid] = ServiceVars(
            sid,
            design,
            registry.integer(f"{sid}.N_rt"),
            registry.integer(f"{sid}.N_vessel"),
            BatteryVars.create(registry, f"{sid}.", design.battery_capacity),
            legs,
        )
    called = sorted({p for s in case.plan.services for p in s.ports})
    chargers = {port: registry.continuous(f"port{port}.P_cha") for port in called}
    flows = network.create_flows(registry, sets, demand)
    return FleetVars(designs, services, chargers, flows)


def start_hints(fleet: FleetVars, demand: network.Demand) -> dict[Variable, tuple[float, float]]:
    """Typical ranges of every variable, used to seed the barrier start point."""
    hints: dict[Variable, tuple[float, float]] = {}
    for design in fleet.designs.values():
        hull = design.hull
        hints |= {
            hull.length: (80.0, 250.0),
            hull.breadth: (15.0, 35.0),
            hull.draught: (4.0, 9.0),
            hull.depth: (10.0, 25.0),
            design.superstructure_length: (40.0, 200.0),
            design.deck_plate: (0.008, 0.04),
            design.wetted_area: (2e3, 1.5e4),
            design.battery_capacity: (1e10, 5e11),
            design.max_shaft_power: (2e6, 4e7),
            design.enclosed_volume: (3e4, 3e5),
        }
        hints |= {g: (1.0, 10.0) for g in design.wetted_gauges + design.girth_gauges}
        layout = design.arrangement
        for room in layout.rooms:
            hints |= {room.width: (3.0, 20.0), room.length: (5.0, 40.0), room.front: (20.0, 100.0)}
        hints |= {
            layout.room_height: (2.5, 6.0),
            layout.inner_bottom: (1.0, 3.0),
            layout.roro_deck: (6.0, 12.0),
            layout.roro_height: (5.0, 8.0),
        }
    for service in fleet.services.values():
        hints |= {
            service.frequency: (1.0, 8.0),
            service.fleet_size: (1.0, 4.0),
            service.battery.cycle_charge: (1e3, 1e5),
            service.battery.lifetime_horizons: (1e2, 1e4),
            service.battery.replacements: (1.0, 5.0),
        }
        for leg in service.legs.values():
            hints |= {
                leg.hydro.speed: (5.0, 11.0),
                leg.hydro.friction_gauge: (6.0, 8.0),
                leg.hydro.standard_residual: (1e-4, 1e-2),
                leg.hydro.critical_ratio: (1.0, 1.5),
                leg.hydro.critical_factor: (1.0, 1.5),
                leg.times.port_time: (900.0, 7200.0),
                leg.times.charge_time: (600.0, 3600.0),
            }
    hints |= {charger: (1e6, 4e7) for charger in fleet.chargers.values()}
    for key, flow in fleet.flows.items():
        value = demand[(key.origin, key.destination, key.cargo)]
        hints[flow] = (0.1 * value, value)
    return hints
