"""Assembly of one case into a mixed-integer log-convex problem.

Constraint labels fall into six groups: Operations, Hydrostatics,
Structures, Hydrodynamics, Energy and Dimensions. The integer variables are
the round-trip frequency and fleet size of every service.
"""

from __future__ import annotations

import logging
from typing import Mapping

import attrs

from zevrpp import network, utils
from zevrpp.errors import ModelError
from zevrpp.gp import constraint
from zevrpp.gp.constraint import Constraint
from zevrpp.gp.expression import Posynomial, Registry, Variable
from zevrpp.gp.problem import Problem
from zevrpp.model import cost, weights
from zevrpp.model.scenario import Case, FleetMode, ParameterSet, Scenario
from zevrpp.model.variables import (
    FleetVars,
    ServiceVars,
    VesselDesign,
    create_fleet,
    start_hints,
)
from zevrpp.network import Arc, Cargo, IndexSets, TimingParams
from zevrpp.vessel import arrangement, hull, resistance, structures, surrogates
from zevrpp.vessel.battery import BatteryParams, LegDemand, battery_constraints
from zevrpp.vessel.coefficients import (
    DegradationTable,
    ResistanceTable,
    load_degradation_table,
    load_resistance_table,
)
from zevrpp.vessel.hull import HullForm
from zevrpp.vessel.resistance import HydroParams
from zevrpp.vessel.surrogates import Surrogates

logger = logging.getLogger(__name__)

GROUPS = ("Operations", "Hydrostatics", "Structures", "Hydrodynamics", "Energy", "Dimensions")


def hull_form(scenario: Scenario) -> HullForm:
    return HullForm(scenario.parameters.si("hull.beta"), scenario.options.aft_reading)


def hydro_params(parameters: ParameterSet) -> HydroParams:
    return HydroParams(
        water_density=1000 * parameters.si("hull.water_density"),
        kinematic_viscosity=parameters.si("propulsion.kinematic_viscosity"),
        friction_scale=parameters.si("propulsion.friction_scale"),
        residual_area_scale=parameters.si("propulsion.residual_area_scale"),
        propulsive_efficiency=parameters.si("propulsion.propulsive_efficiency"),
        propeller_diameter=parameters.si("propulsion.propeller_diameter"),
        rudder_count=round(parameters.si("propulsion.rudder_count")),
    )


def battery_params(parameters: ParameterSet) -> BatteryParams:
    return BatteryParams(
        depth_margin=parameters.si("battery.depth_margin"),
        discharge_efficiency=parameters.si("battery.discharge_efficiency"),
        charge_efficiency=parameters.si("battery.charge_efficiency"),
        service_life_years=parameters.si("battery.service_life"),
        horizon_hours=parameters.si("operations.horizon") / 3600,
    )


def timing_params(parameters: ParameterSet) -> TimingParams:
    return TimingParams(
        acceleration=parameters.si("propulsion.acceleration"),
        deceleration=parameters.si("propulsion.deceleration"),
        handling_time={
            Cargo.PAX: parameters.si("operations.pax_handling"),
            Cargo.RORO: parameters.si("operations.roro_handling"),
        },
        route_time=parameters.si("operations.horizon"),
    )


@attrs.frozen(eq=False)
class LegPhysics:
    shaft_power: Posynomial
    demand: LegDemand


@attrs.frozen(eq=False)
class AssembledModel:
    scenario: Scenario
    case: Case
    sets: IndexSets
    fleet: FleetVars
    problem: Problem
    cost_terms: Mapping[str, Posynomial]
    steel: Mapping[str, Posynomial]
    legs: Mapping[tuple[str, Arc], LegPhysics]
    fits: Surrogates


def design_constraints(
    design: VesselDesign, scenario: Scenario, fits: Surrogates
) -> tuple[list[Constraint], Posynomial]:
    """Hull, structure, arrangement and weight constraints of one design; also the steel weight."""
    p = scenario.parameters
    h = design.hull
    L, B, D = h.length, h.breadth, h.depth
    constraints: list[Constraint] = [
        hull.bm_and_stability_constraint(
            h,
            surrogates.monomial_of(fits.stability, [B / h.draught]),
            p.si("hull.kg_ratio"),
            p.si("hull.gm_margin"),
        ),
        *structures.strength_constraints(
            design.section,
            structures.design_loads(h, p.si("structures.load_scale")),
            p.si("structures.allowable_bending"),
            p.si("structures.allowable_shear"),
        ),
        *hull.wetted_area_constraints(
            h, design.wetted_area, design.wetted_gauges, p.si("hull.area_factor")
        ),
        *arrangement.arrangement_constraints(
            design.arrangement,
            h,
            design.battery_capacity / scenario.options.room_count,
            p.si("battery.volume_per_energy"),
            p.si("arrangement.min_room_height"),
            p.si("arrangement.min_roro_height"),
            h.form.lcb_fraction,
        ),
        constraint.le(design.superstructure_length, L, "Dimensions:superstructure"),
        constraint.le(
            Posynomial(
                (
                    p.si("hull.interior_coefficient") * L * B * D,
                    p.si("superstructure.decks")
                    * p.si("superstructure.deck_height")
                    * design.superstructure_length
                    * B,
                )
            ),
            design.enclosed_volume,
            "Dimensions:enclosed_volume",
        ),
    ]
    weight, steel = weights.weight_constraints(
        design, p, scenario.options.include_freshwater
    )
    return constraints + weight, steel


def port_energy_balance(
    sets: IndexSets,
    service: ServiceVars,
    demands: Mapping[Arc, LegDemand],
    chargers: Mapping[int, Variable],
    charge_efficiency: float,
) -> list[Constraint]:
    """Energy charged at each arrival covers the next departing leg."""
    constraints: list[Constraint] = []
    for leg in sets.directed_legs(service.id):
        i, j = leg
        following = sets.next_leg(service.id, leg)
        constraints.append(
            constraint.le(
                demands[following].energy,
                charge_efficiency * chargers[j] * service.legs[leg].times.charge_time,
                f"Energy:port_balance:{service.id}:{i}-{j}",
            )
        )
    return constraints


def service_constraints(
    service: ServiceVars,
    sets: IndexSets,
    scenario: Scenario,
    fleet: FleetVars,
    fits: Surrogates,
    resistance_table: ResistanceTable,
    degradation_table: DegradationTable,
) -> tuple[list[Constraint], dict[Arc, LegPhysics]]:
    """Per-leg resistance, power and battery constraints of one service."""
    p = scenario.parameters
    hydro = hydro_params(p)
    timing = timing_params(p)
    design = service.design
    constraints: list[Constraint] = []
    physics: dict[Arc, LegPhysics] = {}
    for leg in sets.directed_legs(service.id):
        i, j = leg
        leg_vars = service.legs[leg].hydro
        constraints += resistance.friction_constraints(leg_vars, design.hull, hydro)
        constraints += resistance.residual_constraints(leg_vars, design.hull, fits)
        shaft, discharge = resistance.power_chain(
            leg_vars,
            design.hull,
            design.wetted_area,
            resistance_table,
            hydro,
            p.si("propulsion.auxiliary_power"),
        )
        constraints.append(
            constraint.le(
                shaft, design.max_shaft_power, f"Energy:max_shaft:{service.id}:{i}-{j}"
            )
        )
        time_at_sea = network.sea_time(
            sets.plan.distance(i, j), leg_vars.speed, timing.acceleration, timing.deceleration
        )
        physics[leg] = LegPhysics(shaft, LegDemand(discharge, time_at_sea))
    battery = battery_params(p)
    constraints += battery_constraints(
        service.battery,
        [physics[leg].demand for leg in sets.directed_legs(service.id)],
        service.frequency / service.fleet_size,
        battery,
        degradation_table,
        prefix=f"{service.id}:",
    )
    constraints += port_energy_balance(
        sets,
        service,
        {leg: lp.demand for leg, lp in physics.items()},
        fleet.chargers,
        battery.charge_efficiency,
    )
    return constraints, physics


def operations_constraints(
    scenario: Scenario, sets: IndexSets, fleet: FleetVars, demand: network.Demand
) -> list[Constraint]:
    p = scenario.parameters
    fraction = p.si("service_level.fraction")
    if not 0 < fraction <= 1:
        raise ModelError(f"Service level fraction must lie in (0, 1], got {fraction}")
    frequency = {sid: s.frequency for sid, s in fleet.services.items()}
    fleet_size = {sid: s.fleet_size for sid, s in fleet.services.items()}
    capacity = {
        (sid, cargo): s.design.capacity(cargo, p)
        for sid, s in fleet.services.items()
        for cargo in Cargo
    }
    times = {
        (sid, leg): lv.times for sid, s in fleet.services.items() for leg, lv in s.legs.items()
    }
    utility = network.utility_weights(
        sets.plan,
        fleet.flows,
        {Cargo.PAX: p.si("service_level.pax_value"), Cargo.RORO: p.si("service_level.roro_value")},
    )
    minimum = network.minimum_utility(utility, demand, sets.suppliers, fraction)
    return [
        *network.capacity_constraints(sets, fleet.flows, frequency, capacity),
        *network.demand_constraints(sets, fleet.flows, demand),
        *network.timing_and_availability(
            sets, fleet.flows, times, frequency, fleet_size, timing_params(p)
        ),
        network.service_level_constraint(fleet.flows, utility, minimum),
    ]


def baseline_constraints(case: Case, fleet: FleetVars) -> list[Constraint]:
    """Pin design and operation of every service to the values of the present fleet."""
    constraints: list[Constraint] = []
    for sid, pin in case.baseline.items():
        service = fleet.services[sid]
        constraints += [
            constraint.eq(
                service.design.hull.length, pin.length, f"Dimensions:baseline_length:{sid}"
            ),
            constraint.eq(
                service.design.superstructure_length,
                pin.superstructure_length,
                f"Dimensions:baseline_superstructure:{sid}",
            ),
            constraint.eq(
                service.frequency, float(pin.frequency), f"Operations:baseline_frequency:{sid}"
            ),
            constraint.eq(
                service.fleet_size, float(pin.fleet_size), f"Operations:baseline_fleet:{sid}"
            ),
        ]
    return constraints


def assemble(
    scenario: Scenario, case: Case, fits: Surrogates | None = None
) -> AssembledModel:
    """Build the full problem of ``case``; surrogates are fitted when not given."""
    with utils.timer(f"assembly of case {case.id}"):
        form = hull_form(scenario)
        resistance_table = load_resistance_table()
        degradation_table = load_degradation_table()
        if fits is None:
            fits = surrogates.build_surrogates(form, resistance_table)
        sets = network.build_index_sets(case.plan)
        demand = scenario.demand
        registry = Registry()
        fleet = create_fleet(
            registry, case, sets, demand, form, scenario.options.room_count
        )

        constraints = operations_constraints(scenario, sets, fleet, demand)
        steel: dict[str, Posynomial] = {}
        for design in fleet.designs.values():
            design_rows, steel[design.id] = design_constraints(design, scenario, fits)
            constraints += design_rows
        legs: dict[tuple[str, Arc], LegPhysics] = {}
        for service in fleet.services.values():
            rows, physics = service_constraints(
                service, sets, scenario, fleet, fits, resistance_table, degradation_table
            )
            constraints += rows
            legs |= {(service.id, leg): lp for leg, lp in physics.items()}
        if case.mode is FleetMode.BASELINE:
            constraints += baseline_constraints(case, fleet)

        terms = cost.cost_terms(scenario, fleet, steel)
        problem = Problem(
            cost.cost_objective(terms),
            tuple(constraints),
            fleet.integer_vars,
            start_hints(fleet, demand),
        )
    census = problem.census()
    unexpected = sorted(set(census) - set(GROUPS))
    if unexpected:
        raise ModelError(f"Constraints outside the known groups: {unexpected}")
    logger.info(
        "Case %s (%s): %d constraints, %d integer variables; %s",
        case.id,
        case.mode.value,
        len(problem.constraints),
        len(problem.integer_vars),
        ", ".join(f"{g} {census.get(g, 0)}" for g in GROUPS),
    )
    return AssembledModel(scenario, case, sets, fleet, problem, terms, steel, legs, fits)
