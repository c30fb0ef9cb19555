"""Annualized fleet cost.

Investment terms are spread over the service life and counted per vessel;
berthing and electricity are paid on every call, ``N_rt`` times per planning
horizon and ``N_ph`` horizons per year.
"""

from __future__ import annotations

import logging
from typing import Mapping

from zevrpp.gp.expression import Monomial, Posynomial, Variable, posy_sum
from zevrpp.model.scenario import Scenario
from zevrpp.model.variables import FleetVars, ServiceVars
from zevrpp.vessel import hull

logger = logging.getLogger(__name__)

# Zero-priced terms keep a negligible weight so every variable stays bounded.
COST_FLOOR = 1e-9
GROSS_TONNAGE_ANCHOR = 1e5

TERM_NAMES = (
    "hotel_crew",
    "deck_crew",
    "battery",
    "hull_outfitting",
    "berthing",
    "electricity",
    "chargers",
)


def _coefficient(name: str, value: float) -> float:
    if value < 0:
        raise ValueError(f"Cost coefficient {name} must be nonnegative, got {value}")
    return max(value, COST_FLOOR)


def horizons_per_year(scenario: Scenario) -> float:
    return 365 * 24 * 3600 / scenario.parameters.si("operations.horizon")


def _per_call(
    scenario: Scenario, service: ServiceVars, chargers: Mapping[int, Variable]
) -> tuple[Posynomial, Posynomial]:
    """Berthing and shore electricity of one round trip, charged at every arrival."""
    gross_tonnage = hull.gross_tonnage_posynomial(
        service.design.enclosed_volume, GROSS_TONNAGE_ANCHOR
    )
    berthing: list[Posynomial] = []
    electricity: list[Monomial] = []
    for (_, j), leg in service.legs.items():
        port = scenario.port(j)
        berthing.append(
            gross_tonnage.scaled(Monomial(_coefficient("port_charge", port.port_charge)))
        )
        electricity.append(
            _coefficient("electricity_price", port.electricity_price)
            * leg.times.charge_time
            * chargers[j]
        )
    return posy_sum(berthing), posy_sum(electricity)


def cost_terms(
    scenario: Scenario, fleet: FleetVars, steel: Mapping[str, Posynomial]
) -> dict[str, Posynomial]:
    """The objective split into named terms, EUR per year; see :data:`TERM_NAMES`."""
    p = scenario.parameters
    life = p.si("battery.service_life")
    hotel = _coefficient("costs.hotel_crew", p.si("costs.hotel_crew")) / life
    deck = _coefficient("costs.deck_crew", p.si("costs.deck_crew")) / life
    battery = (
        _coefficient("costs.battery", p.si("costs.battery"))
        * p.si("costs.battery_scale")
        / life
    )
    steel_price = _coefficient("costs.steel", p.si("costs.steel")) / life
    charger = _coefficient("costs.charger", p.si("costs.charger")) / life
    calls = horizons_per_year(scenario)

    terms: dict[str, list[Monomial | Posynomial]] = {name: [] for name in TERM_NAMES}
    for service in fleet.services.values():
        design, vessels = service.design, service.fleet_size
        terms["hotel_crew"].append(hotel * vessels * design.pax_capacity(p))
        terms["deck_crew"].append(deck * vessels.as_monomial())
        terms["battery"].append(
            battery * vessels * service.battery.replacements * design.battery_capacity
        )
        terms["hull_outfitting"].append(
            steel[design.id].scaled(steel_price * vessels.as_monomial())
        )
        berthing, electricity = _per_call(scenario, service, fleet.chargers)
        frequency = calls * service.frequency.as_monomial()
        terms["berthing"].append(berthing.scaled(frequency))
        terms["electricity"].append(electricity.scaled(frequency))
    terms["chargers"] = [charger * power for power in fleet.chargers.values()]
    return {name: posy_sum(parts) for name, parts in terms.items()}


def cost_objective(terms: Mapping[str, Posynomial]) -> Posynomial:
    return posy_sum(terms.values())
