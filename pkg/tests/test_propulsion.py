import math

import numpy as np
import pytest

from zevrpp.gp import convexity
from zevrpp.gp.expression import Posynomial, Registry, Variable
from zevrpp.gp.fit import SoftmaxAffineFit
from zevrpp.vessel import battery, coefficients, resistance, surrogates
from zevrpp.vessel.hull import HullForm, HullVars
from zevrpp.vessel.resistance import HydroParams, LegHydro


@pytest.fixture
def degradation() -> coefficients.DegradationTable:
    return coefficients.load_degradation_table()


def _leg() -> tuple[HullVars, LegHydro, Variable, dict[Variable, float]]:
    registry = Registry()
    hull = HullVars(*(registry.continuous(n) for n in "LBTD"), HullForm(6.0))
    leg = LegHydro.create(registry, "leg.")
    area = registry.continuous("A_S")
    values = {
        hull.length: 200.0,
        hull.breadth: 30.0,
        hull.draught: 7.0,
        hull.depth: 15.0,
        leg.speed: 8.0,
        area: 7000.0,
    }
    return hull, leg, area, values


def test_tight_friction_gauge_reproduces_ittc() -> None:
    hull, leg, _, values = _leg()
    params = HydroParams()
    (gauge,) = resistance.friction_constraints(leg, hull, params)
    tight = math.log10(8.0 * 200.0 / params.kinematic_viscosity) - 2

    assert gauge.violation(values | {leg.friction_gauge: tight}) <= 1e-12
    assert gauge.violation(values | {leg.friction_gauge: tight * 1.01}) > 0
    assert resistance.friction_coefficient(leg, params).evaluate(
        {leg.friction_gauge: tight}
    ) == pytest.approx(resistance.ittc_friction(8.0, 200.0, params), rel=1e-12)


def test_residual_constraints_are_tight_on_the_surrogates() -> None:
    hull, leg, _, values = _leg()
    fits = surrogates.Surrogates(
        stability=SoftmaxAffineFit(1.0, np.array([[1.5]]), np.array([0.0]), 0.0),
        standard_residual=SoftmaxAffineFit(1.0, np.array([[2.0]]), np.array([0.5]), 0.0),
        critical_froude=surrogates.QUOTED_CRITICAL_FROUDE,
        froude_critical=0.286,
    )
    fr = 8.0 / math.sqrt(resistance.GRAVITY * 200.0)
    ratio = float(surrogates.QUOTED_CRITICAL_FROUDE(fr / 0.286)[0])
    tight = values | {
        leg.standard_residual: math.exp(0.5) * fr**2,
        leg.critical_ratio: ratio,
        leg.critical_factor: max(1.0, ratio),
    }

    constraints = resistance.residual_constraints(leg, hull, fits)

    assert len(constraints) == 4
    for c in constraints:
        assert c.violation(tight) <= 1e-9
    loose = tight | {leg.standard_residual: 0.5 * tight[leg.standard_residual]}
    assert constraints[0].violation(loose) > 0


def test_residual_resistance_formula() -> None:
    hull, leg, _, values = _leg()
    table = coefficients.load_resistance_table()
    params = HydroParams()
    point = values | {leg.standard_residual: 0.8, leg.critical_factor: 1.2}
    k1, k2, k3, k4 = table.kappa
    coefficient = (
        table.length_factor(200.0)
        * 0.8
        * 1.2
        * (7.0 / 30.0) ** k1
        * (30.0 / 200.0) ** k2
        * (params.propeller_diameter / 7.0) ** k3
        * params.rudder_count**k4
    )
    expected = coefficient * 0.5 * params.water_density * 8.0**2 * 30.0 * 7.0 * 0.1

    assert resistance.residual_resistance(leg, hull, table, params).evaluate(
        point
    ) == pytest.approx(expected, rel=1e-12)


def test_shaft_power_is_log_convex() -> None:
    hull, leg, area, _ = _leg()
    power = resistance.shaft_power(
        leg, hull, area, coefficients.load_resistance_table(), HydroParams()
    )

    assert convexity.check_log_convex(power, samples=200).passed


def test_admiralty_scaling() -> None:
    base = resistance.admiralty_power(10e6, 20000.0, 20000.0, 7.0, 10.0)

    assert base == pytest.approx(10e6 * 0.343)
    assert resistance.admiralty_power(10e6, 160000.0, 20000.0, 7.0, 10.0) == pytest.approx(
        4 * base
    )


def test_capacity_loss_reference_point(degradation: coefficients.DegradationTable) -> None:
    for ah in (100.0, 1e4):
        assert battery.capacity_loss(ah, 0.5, degradation) == pytest.approx(
            0.0913 * ah**0.55, rel=2e-3
        )


def test_faster_cycling_fades_more_for_the_same_throughput(
    degradation: coefficients.DegradationTable,
) -> None:
    slow = battery.cycling_profile(1, 20, degradation)
    fast = battery.cycling_profile(2, 10, degradation)

    assert sum(abs(s.current) * s.hours for s in slow) == pytest.approx(
        sum(abs(s.current) * s.hours for s in fast)
    )
    assert battery.capacity_loss_eval(fast, degradation) > battery.capacity_loss_eval(
        slow, degradation
    )


def test_cycling_profile_rejects_overfull_days(degradation: coefficients.DegradationTable) -> None:
    with pytest.raises(ValueError):
        battery.cycling_profile(13, 1, degradation)
    with pytest.raises(ValueError):
        battery.capacity_loss_eval([], degradation)


def test_degradation_constraint_matches_fade_law(
    degradation: coefficients.DegradationTable,
) -> None:
    registry = Registry()
    n_life, n_rt, n_v, charge = (registry.continuous(n) for n in ("n_life", "n_rt", "n_v", "q"))
    c = battery.degradation_constraint(n_life, n_rt / n_v, charge, 48.0, degradation)
    values = {n_life: 2000.0, n_rt: 6.0, n_v: 3.0, charge: 7884.0}
    per_horizon_ah = 2 * 7884.0 * 2.0 / 3600
    fade = battery.capacity_loss(
        2000.0 * per_horizon_ah, per_horizon_ah / (48.0 * 2.3), degradation
    )

    assert c.expr.evaluate(values) == pytest.approx(fade / 20.0, rel=1e-12)
    assert convexity.check_log_convex(c, samples=200).passed


def test_replacements_follow_cell_life() -> None:
    registry = Registry()
    n_batt, n_life = registry.continuous("n_batt"), registry.continuous("n_life")
    floor, ratio = battery.replacement_constraints(n_batt, n_life, 20.0, 182.5)

    assert ratio.violation({n_life: 365.0, n_batt: 10.0}) <= 1e-12
    assert ratio.violation({n_life: 365.0, n_batt: 9.0}) > 0.0
    assert floor.violation({n_life: 365.0, n_batt: 10.0}) == 0.0
    assert floor.violation({n_life: 1e5, n_batt: 0.5}) > 0.0


def test_cell_current_scales_with_pack_capacity(
    degradation: coefficients.DegradationTable,
) -> None:
    registry = Registry()
    power, capacity = registry.continuous("P"), registry.continuous("E")
    current = battery.cell_current(Posynomial((power.as_monomial(),)), capacity, degradation)

    assert current.evaluate({power: 1e7, capacity: 2.27e11}) == pytest.approx(
        1e7 * 2.3 * 3600 / 2.27e11
    )
