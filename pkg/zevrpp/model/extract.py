"""Recovering, validating and serializing an optimal fleet.

Reported values use the maritime I/O units: knots, MWh, MW, tonnes, EUR per
year; lengths stay in metres.
"""

from __future__ import annotations

import logging
import math
from typing import Any, Mapping

import attrs

from zevrpp.errors import ModelError, ValidationFailure
from zevrpp.gp import constraint
from zevrpp.gp.expression import Variable
from zevrpp.gp.problem import Solution
from zevrpp.model import cost, weights
from zevrpp.model.assemble import AssembledModel
from zevrpp.model.scenario import KNOT, MW, MWH
from zevrpp.model.variables import VesselDesign
from zevrpp.vessel import battery, hull, resistance

logger = logging.getLogger(__name__)

VIOLATION_TOLERANCE = 1e-6
BREAKDOWN_TOLERANCE = 1e-9
INTEGRALITY_TOLERANCE = 1e-6


@attrs.frozen
class DesignValues:
    length: float
    breadth: float
    draught: float
    depth: float
    superstructure_length: float
    deck_plate: float
    battery_capacity: float
    """MWh."""
    max_shaft_power: float
    """MW."""
    enclosed_volume: float
    gross_tonnage: float
    pax_capacity: float
    """Thousands of passengers."""
    roro_capacity: float
    """Thousands of lane-metres."""
    steel_weight: float
    displacement: float
    """Tonnes."""


@attrs.frozen
class ServiceValues:
    design: str
    ports: tuple[int, ...]
    frequency: int
    fleet_size: int
    battery_replacements: float
    cell_life_years: float
    speeds: Mapping[str, float]
    """Knots per directed leg ``"i-j"``."""
    shaft_power: Mapping[str, float]
    """MW per directed leg."""
    admiralty_power: Mapping[str, float]
    """MW per directed leg, scaled from the first leg by the admiralty formula."""


@attrs.frozen
class FleetSolution:
    scenario: str
    case: str
    mode: str
    objective: float
    """EUR per year."""
    cost_breakdown: Mapping[str, float]
    designs: Mapping[str, DesignValues]
    services: Mapping[str, ServiceValues]
    chargers: Mapping[str, float]
    """MW per port id."""
    flows: Mapping[str, float]
    """Thousands per horizon, keyed ``"service:i-j:cargo"``."""
    worst_violation: float
    bnb_nodes: int

    def to_dict(self) -> dict[str, Any]:
        return attrs.asdict(self, recurse=True)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> FleetSolution:
        try:
            return cls(
                scenario=str(data["scenario"]),
                case=str(data["case"]),
                mode=str(data["mode"]),
                objective=float(data["objective"]),
                cost_breakdown={k: float(v) for k, v in data["cost_breakdown"].items()},
                designs={k: DesignValues(**v) for k, v in data["designs"].items()},
                services={
                    k: ServiceValues(**{**v, "ports": tuple(v["ports"])})
                    for k, v in data["services"].items()
                },
                chargers={k: float(v) for k, v in data["chargers"].items()},
                flows={k: float(v) for k, v in data["flows"].items()},
                worst_violation=float(data["worst_violation"]),
                bnb_nodes=int(data["bnb_nodes"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ModelError(f"Malformed fleet solution: {e}") from e


def _integral_values(model: AssembledModel, solution: Solution) -> dict[Variable, float]:
    values = dict(solution.values)
    for variable in model.problem.integer_vars:
        rounded = round(values[variable])
        if abs(values[variable] - rounded) > INTEGRALITY_TOLERANCE:
            raise ValidationFailure(f"Integer:{variable.name}", abs(values[variable] - rounded))
        values[variable] = float(rounded)
    return values


def _design_values(
    model: AssembledModel, design: VesselDesign, values: Mapping[Variable, float]
) -> DesignValues:
    p = model.scenario.parameters
    h = design.hull
    volume = values[design.enclosed_volume]
    return DesignValues(
        length=values[h.length],
        breadth=values[h.breadth],
        draught=values[h.draught],
        depth=values[h.depth],
        superstructure_length=values[design.superstructure_length],
        deck_plate=values[design.deck_plate],
        battery_capacity=values[design.battery_capacity] / MWH,
        max_shaft_power=values[design.max_shaft_power] / MW,
        enclosed_volume=volume,
        gross_tonnage=hull.gross_tonnage_approx(volume, cost.GROSS_TONNAGE_ANCHOR),
        pax_capacity=design.pax_capacity(p).evaluate(values),
        roro_capacity=design.roro_capacity(p).evaluate(values),
        steel_weight=model.steel[design.id].evaluate(values),
        displacement=p.si("hull.water_density") * hull.displacement_volume(h).evaluate(values),
    )


def _service_values(
    model: AssembledModel, service_id: str, values: Mapping[Variable, float]
) -> ServiceValues:
    service = model.fleet.services[service_id]
    legs = model.sets.directed_legs(service_id)
    speeds: dict[str, float] = {}
    shaft: dict[str, float] = {}
    admiralty: dict[str, float] = {}
    first = legs[0]
    reference_power = model.legs[(service_id, first)].shaft_power.evaluate(values)
    reference_speed = values[service.legs[first].hydro.speed]
    displacement = hull.displacement_volume(service.design.hull).evaluate(values)
    for leg in legs:
        key = f"{leg[0]}-{leg[1]}"
        speed = values[service.legs[leg].hydro.speed]
        speeds[key] = speed / KNOT
        shaft[key] = model.legs[(service_id, leg)].shaft_power.evaluate(values) / MW
        admiralty[key] = (
            resistance.admiralty_power(
                reference_power, displacement, displacement, speed, reference_speed
            )
            / MW
        )
    horizon_hours = model.scenario.parameters.si("operations.horizon") / 3600
    return ServiceValues(
        design=service.design.id,
        ports=model.sets.service(service_id).ports,
        frequency=round(values[service.frequency]),
        fleet_size=round(values[service.fleet_size]),
        battery_replacements=values[service.battery.replacements],
        cell_life_years=battery.cell_life_years(
            values[service.battery.lifetime_horizons], horizon_hours
        ),
        speeds=speeds,
        shaft_power=shaft,
        admiralty_power=admiralty,
    )


def extract_and_validate(model: AssembledModel, solution: Solution) -> FleetSolution:
    """Re-check every constraint at the recovered point and tabulate the fleet.

    Integer variables are rounded first; anything violated by more than
    1e-6 (relative) raises :class:`ValidationFailure` naming the worst
    constraint.
    """
    if not solution.is_optimal:
        raise ModelError(f"Cannot extract a {solution.status.value} solution")
    values = _integral_values(model, solution)
    worst, violation = constraint.worst_violation(model.problem.constraints, values)
    if worst is not None and violation > VIOLATION_TOLERANCE:
        raise ValidationFailure(worst.label, violation)
    logger.info(
        "Worst constraint violation %.2e%s",
        violation,
        f" ({worst.label})" if worst is not None else "",
    )

    breakdown = {name: term.evaluate(values) for name, term in model.cost_terms.items()}
    objective = model.problem.objective.evaluate(values)
    mismatch = abs(math.fsum(breakdown.values()) - objective) / objective
    if mismatch > BREAKDOWN_TOLERANCE:
        raise ValidationFailure("Objective:breakdown", mismatch)

    fleet = model.fleet
    return FleetSolution(
        scenario=model.scenario.name,
        case=model.case.id,
        mode=model.case.mode.value,
        objective=objective,
        cost_breakdown=breakdown,
        designs={d: _design_values(model, design, values) for d, design in fleet.designs.items()},
        services={sid: _service_values(model, sid, values) for sid in fleet.services},
        chargers={str(port): values[power] / MW for port, power in fleet.chargers.items()},
        flows={
            f"{k.service}:{k.origin}-{k.destination}:{k.cargo}": values[v]
            for k, v in fleet.flows.items()
        },
        worst_violation=violation,
        bnb_nodes=solution.bnb_nodes,
    )


def steel_breakdown(
    model: AssembledModel, values: Mapping[Variable, float]
) -> dict[str, dict[str, float]]:
    """Steel tonnes per plate element and design."""
    density = model.scenario.parameters.si("structures.steel_density")
    result = {}
    for design_id, design in model.fleet.designs.items():
        _, elements = weights.plate_elements(design, model.scenario.parameters)
        result[design_id] = {e.name: density * e.volume.evaluate(values) for e in elements}
    return result
