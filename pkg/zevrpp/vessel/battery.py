"""Battery sizing, cell current, capacity fade and replacements.

Cell fade follows a throughput model: the capacity lost after ``Ah`` amp-hours
at average C-rate ``c`` is ``ξ · Ah^χ1 · exp(χ4 c / (R T))`` percent.
"""

from __future__ import annotations

import logging
import math
from typing import Sequence

import attrs

from zevrpp import utils
from zevrpp.gp import constraint
from zevrpp.gp.constraint import Constraint
from zevrpp.gp.expression import (
    Expression,
    ExpOfMonomial,
    Monomial,
    Posynomial,
    Product,
    Registry,
    Variable,
    posy_sum,
)
from zevrpp.vessel.coefficients import DegradationTable

logger = logging.getLogger(__name__)

SECONDS_PER_HOUR = 3600.0


@attrs.frozen
class BatteryParams:
    depth_margin: float = 2.0
    """Excess capacity factor Θ; below 2 the mean half-charge assumption fails."""
    discharge_efficiency: float = 0.95
    charge_efficiency: float = 0.95
    service_life_years: float = 30.0
    horizon_hours: float = 48.0

    @property
    def horizons_per_year(self) -> float:
        return 365 * 24 / self.horizon_hours


@attrs.frozen
class BatteryVars:
    capacity: Variable
    """Pack energy in J."""
    cycle_charge: Variable
    """Per-cell discharged charge over one round trip, in C."""
    lifetime_horizons: Variable
    replacements: Variable

    @classmethod
    def create(
        cls, registry: Registry, prefix: str, capacity: Variable | None = None
    ) -> BatteryVars:
        """Per-service ageing variables; ``capacity`` is shared when given."""
        return cls(
            capacity if capacity is not None else registry.continuous(f"{prefix}E_batt"),
            registry.continuous(f"{prefix}r_dis"),
            registry.continuous(f"{prefix}N_life"),
            registry.continuous(f"{prefix}N_batt"),
        )


@attrs.frozen
class LegDemand:
    """Discharge power (W) and sea time (s) of one directed leg."""

    power: Posynomial
    sea_time: Posynomial

    @property
    def energy(self) -> Posynomial:
        return utils.assert_is_instance(self.power * self.sea_time, Posynomial)


def battery_constraints(
    battery: BatteryVars,
    legs: Sequence[LegDemand],
    cycles_per_horizon: Monomial,
    params: BatteryParams,
    table: DegradationTable,
    prefix: str = "",
) -> list[Constraint]:
    """Capacity for the hungriest leg, cell ageing and replacement count."""
    if params.depth_margin < 2:
        logger.warning(
            "Excess capacity factor %.2f is below 2; the mean half-charge ageing "
            "assumption does not hold",
            params.depth_margin,
        )
    constraints: list[Constraint] = [
        capacity_constraint(battery.capacity, leg.energy, params, f"Energy:capacity:{prefix}{k}")
        for k, leg in enumerate(legs)
    ]
    cell_charge = posy_sum(
        utils.assert_is_instance(
            cell_current(leg.power, battery.capacity, table) * leg.sea_time, Posynomial
        )
        for leg in legs
    )
    constraints.append(
        constraint.le(cell_charge, battery.cycle_charge, f"Energy:cell_charge:{prefix}")
    )
    constraints.append(
        degradation_constraint(
            battery.lifetime_horizons,
            cycles_per_horizon,
            battery.cycle_charge,
            params.horizon_hours,
            table,
        )
    )
    constraints += replacement_constraints(
        battery.replacements,
        battery.lifetime_horizons,
        params.service_life_years,
        params.horizons_per_year,
    )
    return constraints


def capacity_constraint(
    capacity: Variable,
    leg_energy: Expression,
    params: BatteryParams,
    label: str = "Energy:capacity",
) -> Constraint:
    """``E ≥ Θ / η_dis · b t_sea`` for one directed leg."""
    return constraint.le(
        leg_energy * (params.depth_margin / params.discharge_efficiency), capacity, label
    )


def cell_current(power: Posynomial, capacity: Variable, table: DegradationTable) -> Posynomial:
    """Per-cell current in A for pack power ``power`` (W) and capacity (J)."""
    cell_charge = table.cell_capacity_ah * SECONDS_PER_HOUR
    return power.scaled(cell_charge / capacity.as_monomial())


def degradation_constraint(
    lifetime_horizons: Variable,
    cycles_per_horizon: Monomial,
    cycle_charge: Variable,
    horizon_hours: float,
    table: DegradationTable,
) -> Constraint:
    """Capacity fade at end of life stays within ``φ_max``.

    ``cycle_charge`` is the discharged charge per cell over one round trip in
    coulombs; charging passes the same charge again.
    """
    throughput_ah = 2 * cycle_charge * cycles_per_horizon / SECONDS_PER_HOUR
    c_rate = throughput_ah / (horizon_hours * table.cell_capacity_ah)
    fade = Product(
        (
            (table.xi / table.phi_max) * (lifetime_horizons * throughput_ah) ** table.chi1,
            ExpOfMonomial(c_rate * (table.chi4 / table.thermal_energy)),
        )
    )
    return constraint.PosyLE1(fade, "Energy:degradation")


def replacement_constraints(
    replacements: Variable,
    lifetime_horizons: Variable,
    service_life_years: float,
    horizons_per_year: float,
) -> list[Constraint]:
    """``N_batt ≥ max{1, t_life N_ph / N_life}``; ``N_life`` counts planning horizons."""
    return [
        constraint.MonoGE(replacements.as_monomial(), 1.0, "Energy:replacements_floor"),
        constraint.le(
            service_life_years * horizons_per_year * lifetime_horizons**-1,
            replacements,
            "Energy:replacements",
        ),
    ]


def capacity_loss(throughput_ah: float, c_rate: float, table: DegradationTable) -> float:
    """Percent capacity lost after ``throughput_ah`` at average ``c_rate`` (1/h)."""
    if throughput_ah < 0 or c_rate < 0:
        raise ValueError("Throughput and C-rate must be nonnegative")
    return (
        table.xi
        * throughput_ah**table.chi1
        * math.exp(table.chi4 * c_rate / table.thermal_energy)
    )


@attrs.frozen
class ProfileStep:
    current: float
    """Cell current in A; the sign (charge or discharge) does not matter."""
    hours: float


def capacity_loss_eval(profile: Sequence[ProfileStep], table: DegradationTable) -> float:
    """Fade over a piecewise-constant current profile, at its average C-rate."""
    if not profile:
        raise ValueError("Current profile is empty")
    if any(step.hours < 0 for step in profile):
        raise ValueError("Profile step durations must be nonnegative")
    total_hours = sum(step.hours for step in profile)
    if total_hours == 0:
        return 0.0
    throughput = sum(abs(step.current) * step.hours for step in profile)
    c_rate = throughput / (total_hours * table.cell_capacity_ah)
    return capacity_loss(throughput, c_rate, table)


def cycling_profile(
    cycles_per_day: int,
    days: int,
    table: DegradationTable,
    *,
    depth_of_discharge: float = 0.5,
    c_rate: float = 0.5,
) -> list[ProfileStep]:
    """Whole days of charge/discharge cycles at a constant C-rate, rest filling each day."""
    if not 0 < depth_of_discharge <= 1 or c_rate <= 0 or cycles_per_day < 0 or days < 1:
        raise ValueError("Invalid cycling parameters")
    current = c_rate * table.cell_capacity_ah
    half_cycle = depth_of_discharge / c_rate
    rest = 24 - 2 * half_cycle * cycles_per_day
    if rest < 0:
        raise ValueError(f"{cycles_per_day} cycles do not fit in a day at C-rate {c_rate:g}")
    day = [ProfileStep(current, half_cycle), ProfileStep(-current, half_cycle)] * cycles_per_day
    day.append(ProfileStep(0.0, rest))
    return day * days


def cell_life_years(lifetime_horizons: float, horizon_hours: float) -> float:
    return lifetime_horizons * horizon_hours / (24 * 365)
