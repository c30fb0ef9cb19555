"""Weight breakdown and the vertical force balance.

Masses are in tonnes. Lightweight is steel plus outfitting, battery and
motors; steel is summed over the plate table below, each row an area and a
thickness (both symbolic).
"""

from __future__ import annotations

import attrs

from zevrpp.gp import constraint
from zevrpp.gp.constraint import Constraint
from zevrpp.gp.expression import Monomial, Posynomial, posy_sum
from zevrpp.model.scenario import ParameterSet
from zevrpp.model.variables import VesselDesign
from zevrpp.vessel import arrangement, hull

SUPERSTRUCTURE_OUTFIT_EXPONENT = 3.1
DEADWEIGHT_PER_LANE = 1565.0
DEADWEIGHT_PER_PAX = 170.0


@attrs.frozen
class PlateElement:
    name: str
    count: int
    area: Posynomial
    thickness: Monomial

    @property
    def volume(self) -> Posynomial:
        return self.area.scaled(float(self.count) * self.thickness)


def _posy(expr: Monomial | Posynomial) -> Posynomial:
    return expr if isinstance(expr, Posynomial) else Posynomial((expr,))


def plate_elements(
    design: VesselDesign, parameters: ParameterSet
) -> tuple[list[Constraint], list[PlateElement]]:
    """Girth gauge constraints and the nine plate rows."""
    h, layout, section = design.hull, design.arrangement, design.section
    L, B, D = h.length, h.breadth, h.depth
    beta = h.form.beta
    light = Monomial(parameters.si("structures.light_plate"))
    deck_height = parameters.si("superstructure.deck_height")
    gauges, girth = hull.simpson_arc(B, D, beta, design.girth_gauges, "Dimensions:girth")
    lsup = design.superstructure_length
    superstructure = Posynomial(
        (
            6 * deck_height * lsup.as_monomial(),
            4 * lsup * B,
            2 * lsup * layout.roro_height,
            B * layout.roro_height,
            6 * deck_height * B.as_monomial(),
        )
    )
    elements = [
        PlateElement(
            "external_hull",
            1,
            girth.scaled(2 * parameters.si("hull.area_factor") * L.as_monomial()),
            section.side_plate,
        ),
        PlateElement("bottom", 1, _posy(0.5 * L * B), section.bottom_plate),
        PlateElement(
            "inner_bottom",
            1,
            _posy((2 / 3) * (layout.inner_bottom / h.draught) ** (1 / beta) * B * L),
            design.deck_plate.as_monomial(),
        ),
        PlateElement("roro_decks", 2, _posy((5 / 6) * B * L), design.deck_plate.as_monomial()),
        PlateElement("ramp", 1, _posy(B * layout.roro_height), light),
        PlateElement("longitudinal_bulkheads", 2, _posy(0.7 * L * D), section.bulkhead_plate),
        PlateElement(
            "transverse_bulkheads", 2, arrangement.transverse_bulkhead_area(layout, h), light
        ),
        PlateElement(
            "battery_walls", 2, layout.wall_length().scaled(layout.room_height.as_monomial()), light
        ),
        PlateElement("superstructure", 1, superstructure, light),
    ]
    return gauges, elements


def steel_weight(elements: list[PlateElement], parameters: ParameterSet) -> Posynomial:
    """``ρ_st Σ N A p`` in tonnes."""
    density = parameters.si("structures.steel_density")
    return posy_sum(e.volume for e in elements).scaled(Monomial(density))


def outfitting_weight(design: VesselDesign) -> Posynomial:
    L, B = design.hull.length, design.hull.breadth
    return Posynomial(
        (
            0.3 * L * B,
            1e-5 * design.superstructure_length**SUPERSTRUCTURE_OUTFIT_EXPONENT * B,
        )
    )


def lightweight(
    design: VesselDesign, steel: Posynomial, parameters: ParameterSet
) -> Posynomial:
    return posy_sum(
        [
            steel,
            outfitting_weight(design),
            parameters.si("battery.mass_per_energy") * design.battery_capacity,
            parameters.si("propulsion.motor_mass") * design.max_shaft_power,
        ]
    )


def deadweight(
    design: VesselDesign, parameters: ParameterSet, include_freshwater: bool
) -> Posynomial:
    """Cargo and passenger deadweight; the passenger term is counted twice with freshwater."""
    scale = parameters.si("weights.deadweight_scale")
    pax = Posynomial((Monomial(0.02), 1.146 * design.pax_capacity(parameters))).scaled(
        Monomial(DEADWEIGHT_PER_PAX * scale)
    )
    terms: list[Monomial | Posynomial] = [
        DEADWEIGHT_PER_LANE * scale * design.roro_capacity(parameters),
        pax,
    ]
    if include_freshwater:
        terms.append(pax)
    return posy_sum(terms)


def weight_constraints(
    design: VesselDesign, parameters: ParameterSet, include_freshwater: bool
) -> tuple[list[Constraint], Posynomial]:
    """``W_L + W_D ≤ ρ_sw ∇`` plus girth gauges; also returns the steel weight."""
    gauges, elements = plate_elements(design, parameters)
    steel = steel_weight(elements, parameters)
    total = posy_sum(
        [lightweight(design, steel, parameters), deadweight(design, parameters, include_freshwater)]
    )
    displacement = parameters.si("hull.water_density") * hull.displacement_volume(design.hull)
    return [
        *gauges,
        constraint.le(total, displacement, "Hydrostatics:weight_balance"),
    ], steel
