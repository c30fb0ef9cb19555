"""Calm-water resistance and shaft power for one directed leg.

Friction follows the ITTC-57 line through a gauge ``r ≤ log10(Re) − 2``;
residual resistance is an empirical regression whose speed dependence is
replaced by log-convex surrogates.
"""

from __future__ import annotations

import math

import attrs

from zevrpp.gp import constraint
from zevrpp.gp.constraint import Constraint
from zevrpp.gp.expression import Monomial, Posynomial, Registry, Variable
from zevrpp.vessel import surrogates
from zevrpp.vessel.coefficients import ResistanceTable
from zevrpp.vessel.hull import HullVars
from zevrpp.vessel.surrogates import Surrogates

GRAVITY = 9.81
ITTC_NUMERATOR = 75.0


@attrs.frozen
class HydroParams:
    water_density: float = 1025.0
    kinematic_viscosity: float = 1.19e-6
    friction_scale: float = 1e-3
    residual_area_scale: float = 0.1
    propulsive_efficiency: float = 0.7
    propeller_diameter: float = 4.5
    rudder_count: int = 2


@attrs.frozen
class LegHydro:
    """Speed and resistance gauges of one directed leg."""

    speed: Variable
    friction_gauge: Variable
    standard_residual: Variable
    critical_ratio: Variable
    critical_factor: Variable

    @classmethod
    def create(cls, registry: Registry, prefix: str) -> LegHydro:
        return cls(
            registry.continuous(f"{prefix}v"),
            registry.continuous(f"{prefix}r_cf"),
            registry.continuous(f"{prefix}c_r_std"),
            registry.continuous(f"{prefix}r_fr"),
            registry.continuous(f"{prefix}c_r_crit"),
        )


def froude_number(speed: Variable, hull: HullVars) -> Monomial:
    return speed / (GRAVITY * hull.length.as_monomial()) ** 0.5


def friction_coefficient(leg: LegHydro, params: HydroParams) -> Monomial:
    return params.friction_scale * ITTC_NUMERATOR * leg.friction_gauge**-2


def friction_constraints(leg: LegHydro, hull: HullVars, params: HydroParams) -> list[Constraint]:
    inv_ln10 = 1 / math.log(10)
    return [
        constraint.le_log(
            leg.friction_gauge.as_monomial(),
            -2.0 - math.log10(params.kinematic_viscosity),
            [(leg.speed, inv_ln10), (hull.length, inv_ln10)],
            "Hydrodynamics:friction_gauge",
        )
    ]


def friction_resistance(
    leg: LegHydro, hull: HullVars, wetted_area: Variable, params: HydroParams
) -> Monomial:
    return (
        0.5
        * params.water_density
        * leg.speed**2
        * wetted_area
        * friction_coefficient(leg, params)
    )


def residual_constraints(
    leg: LegHydro, hull: HullVars, fits: Surrogates
) -> list[Constraint]:
    """Surrogate bounds on the standard and Froude-critical residual factors."""
    fr = froude_number(leg.speed, hull)
    critical = leg.critical_factor.as_monomial()
    return [
        surrogates.bound_constraint(
            fits.standard_residual,
            [fr],
            leg.standard_residual.as_monomial(),
            "Hydrodynamics:residual_standard",
        ),
        constraint.MonoGE(critical, 1.0, "Hydrodynamics:residual_critical_floor"),
        constraint.le(leg.critical_ratio, critical, "Hydrodynamics:residual_critical"),
        surrogates.bound_constraint(
            fits.critical_froude,
            [fr / fits.froude_critical],
            leg.critical_ratio.as_monomial(),
            "Hydrodynamics:residual_critical_ratio",
        ),
    ]


def residual_coefficient(
    leg: LegHydro, hull: HullVars, table: ResistanceTable, params: HydroParams
) -> Monomial:
    k1, k2, k3, k4 = table.kappa
    L, B, T = hull.length, hull.breadth, hull.draught
    psi1, psi2 = table.psi
    return (
        psi1
        * L**psi2
        * leg.standard_residual
        * leg.critical_factor
        * (T / B) ** k1
        * (B / L) ** k2
        * Monomial(params.propeller_diameter**k3) * T**-k3
        * Monomial(float(params.rudder_count) ** k4)
    )


def residual_resistance(
    leg: LegHydro, hull: HullVars, table: ResistanceTable, params: HydroParams
) -> Monomial:
    return (
        residual_coefficient(leg, hull, table, params)
        * (0.5 * params.water_density * params.residual_area_scale)
        * leg.speed**2
        * hull.breadth
        * hull.draught
    )


def shaft_power(
    leg: LegHydro,
    hull: HullVars,
    wetted_area: Variable,
    table: ResistanceTable,
    params: HydroParams,
) -> Posynomial:
    resistance = Posynomial(
        (
            friction_resistance(leg, hull, wetted_area, params),
            residual_resistance(leg, hull, table, params),
        )
    )
    return resistance.scaled(leg.speed / params.propulsive_efficiency)


def power_chain(
    leg: LegHydro,
    hull: HullVars,
    wetted_area: Variable,
    table: ResistanceTable,
    params: HydroParams,
    auxiliary_power: float,
) -> tuple[Posynomial, Posynomial]:
    """Shaft power and battery discharge power ``b = P_shaft + P_aux`` in W."""
    shaft = shaft_power(leg, hull, wetted_area, table, params)
    if auxiliary_power <= 0:
        return shaft, shaft
    return shaft, shaft + auxiliary_power


def admiralty_power(
    reference_power: float,
    displacement: float,
    reference_displacement: float,
    speed: float,
    reference_speed: float,
) -> float:
    """Admiralty scaling ``P = P_ref (∇/∇_ref)^(2/3) (v/v_ref)³``."""
    return (
        reference_power
        * (displacement / reference_displacement) ** (2 / 3)
        * (speed / reference_speed) ** 3
    )


def ittc_friction(speed: float, length: float, params: HydroParams) -> float:
    """ITTC-57 friction coefficient, for comparison with the gauge form."""
    reynolds = speed * length / params.kinematic_viscosity
    return params.friction_scale * ITTC_NUMERATOR / (math.log10(reynolds) - 2) ** 2
