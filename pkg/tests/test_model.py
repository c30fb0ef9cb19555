"""Tests for scenario loading, model assembly and solution extraction."""

import copy
import math
from typing import Any

import attrs
import pytest

from zevrpp import json_utils, toml_utils
from zevrpp.errors import ModelError, ScenarioError, ValidationFailure
from zevrpp.gp import branch_bound, convexity
from zevrpp.gp.expression import Registry, Variable
from zevrpp.gp.problem import Solution, Status
from zevrpp.model import assemble, cost, extract, scenario, variables, weights
from zevrpp.model.scenario import MWH, NAUTICAL_MILE, FleetMode
from zevrpp.network import Cargo
from zevrpp.vessel.hull import HullForm

from tests.conftest import SCENARIO_DIR


def _toy() -> scenario.Scenario:
    return scenario.load_scenario(SCENARIO_DIR / "toy_shuttle.toml")


def _toy_data() -> dict[str, Any]:
    return toml_utils.read(SCENARIO_DIR / "toy_shuttle.toml")


def _hinted_point(model: assemble.AssembledModel) -> dict[Variable, float]:
    return {v: lo for v, (lo, _) in model.problem.var_bounds.items()}


@pytest.fixture(scope="module")
def toy_model() -> assemble.AssembledModel:
    toy = _toy()
    return assemble.assemble(toy, toy.case("S1"))


def test_toy_scenario_loads_in_si_units() -> None:
    toy = _toy()

    assert toy.name == "toy_shuttle"
    assert toy.distances[(1, 2)] == pytest.approx(20 * NAUTICAL_MILE)
    assert toy.port(1).electricity_price == pytest.approx(80 / MWH)
    assert toy.demand[(1, 2, Cargo.PAX)] == 4.0
    assert toy.demand[(2, 1, Cargo.RORO)] == 3.0
    assert toy.parameters.si("operations.horizon") == pytest.approx(48 * 3600)
    assert toy.case("S1").mode is FleetMode.MIXED
    assert toy.case("P1").baseline["12"].fleet_size == 2
    assert toy.bnb_config.integer_upper == 8


def test_unknown_case_names_the_alternatives() -> None:
    with pytest.raises(ScenarioError, match="unknown case") as info:
        _toy().case("X9")
    assert info.value.key == "cases.X9"


def test_parameter_overrides() -> None:
    toy = _toy()
    doubled = toy.with_parameter("operations.demand_scale", 2.0)

    assert doubled.demand[(1, 2, Cargo.PAX)] == 8.0
    assert toy.demand[(1, 2, Cargo.PAX)] == 4.0
    with pytest.raises(ModelError, match="Unknown parameter"):
        toy.with_parameter("hull.nope", 1.0)


def test_baltic_case_catalogue(baltic_scenario_path: Any) -> None:
    baltic = scenario.load_scenario(baltic_scenario_path)

    assert sorted(baltic.cases) == ["B4", "M1", "M2", "M3", "M4", "U4"]
    assert [s.id for s in baltic.case("M3").plan.services] == ["12", "1245", "345"]
    assert baltic.case("B4").baseline["12"].frequency == 6
    assert baltic.case("B4").baseline["245"].length == 203.0
    assert baltic.demand[(5, 2, Cargo.RORO)] == pytest.approx(2.71)
    assert baltic.demand[(2, 5, Cargo.RORO)] == pytest.approx(2.21)


@pytest.mark.parametrize(
    "edit, key",
    [
        (lambda d: d["ports"][0].update(foo=1), "ports.0.foo"),
        (lambda d: d["distances"].update({"1-1": 5.0}), "distances.1-1"),
        (lambda d: d["distances"].update({"1-7": 5.0}), "distances.1-7"),
        (lambda d: d["distances"].update({"1-2": -3.0}), "distances.1-2"),
        (lambda d: d.update(options={"room_count": 2}), "options.room_count"),
        (
            lambda d: d.update(
                parameters={"hull": {"nope": {"value": 1.0, "provenance": "assumed"}}}
            ),
            "parameters.hull.nope",
        ),
        (
            lambda d: d.update(
                parameters={
                    "operations": {
                        "horizon": {"value": 24.0, "provenance": "paper", "unit": "MWh"}
                    }
                }
            ),
            "parameters.operations.horizon.unit",
        ),
        (lambda d: d["cases"]["S1"].update(routes=[[2, 1]]), "cases.S1.routes"),
        (lambda d: d["cases"]["P1"].pop("baseline"), "cases.P1.baseline"),
        (
            lambda d: d["cases"]["S1"].update(baseline=d["cases"]["P1"]["baseline"]),
            "cases.S1.baseline",
        ),
    ],
)
def test_malformed_scenarios_report_their_location(edit: Any, key: str) -> None:
    data = copy.deepcopy(_toy_data())
    edit(data)

    with pytest.raises(ScenarioError) as info:
        scenario.build_scenario("toy.toml", data)
    assert info.value.key == key
    assert info.value.file == "toy.toml"


def test_missing_scenario_file(tmp_path: Any) -> None:
    with pytest.raises(ScenarioError, match="file not found"):
        scenario.load_scenario(tmp_path / "absent.toml")


def test_deadweight_examples() -> None:
    parameters = scenario.load_parameters()
    design = variables.VesselDesign.create(Registry(), "d", HullForm(6.0), 3)
    values = {
        design.hull.breadth: 30.0,
        design.hull.length: 150.0,
        design.superstructure_length: 100.0,
    }
    pax = 5 / 8000 * 30.0 * 100.0
    roro = 2 / 3000 * 30.0 * 150.0

    assert design.pax_capacity(parameters).evaluate(values) == pytest.approx(pax)
    assert design.roro_capacity(parameters).evaluate(values) == pytest.approx(roro)
    with_water = weights.deadweight(design, parameters, include_freshwater=True)
    without = weights.deadweight(design, parameters, include_freshwater=False)
    assert with_water.evaluate(values) == pytest.approx(
        1565 * roro + 2 * 170 * (0.02 + 1.146 * pax)
    )
    assert without.evaluate(values) == pytest.approx(1565 * roro + 170 * (0.02 + 1.146 * pax))


def test_plate_table_rows() -> None:
    parameters = scenario.load_parameters()
    design = variables.VesselDesign.create(Registry(), "d", HullForm(6.0), 3)
    gauges, elements = weights.plate_elements(design, parameters)

    assert [e.name for e in elements] == [
        "external_hull",
        "bottom",
        "inner_bottom",
        "roro_decks",
        "ramp",
        "longitudinal_bulkheads",
        "transverse_bulkheads",
        "battery_walls",
        "superstructure",
    ]
    assert all(c.group == "Dimensions" for c in gauges)


def test_toy_assembly(toy_model: assemble.AssembledModel) -> None:
    problem = toy_model.problem

    assert set(problem.census()) == set(assemble.GROUPS)
    assert {v.name for v in problem.integer_vars} == {"12.N_rt", "12.N_vessel"}
    assert list(toy_model.cost_terms) == list(cost.TERM_NAMES)
    assert list(toy_model.fleet.designs) == ["12"]
    assert sorted(toy_model.fleet.chargers) == [1, 2]
    assert set(toy_model.legs) == {("12", (1, 2)), ("12", (2, 1))}
    assert set(problem.var_bounds) >= set(problem.variables())


def test_cost_breakdown_sums_to_objective(toy_model: assemble.AssembledModel) -> None:
    point = _hinted_point(toy_model)
    terms = [term.evaluate(point) for term in toy_model.cost_terms.values()]

    assert all(t > 0 for t in terms)
    assert math.fsum(terms) == pytest.approx(toy_model.problem.objective.evaluate(point), rel=1e-12)


def test_zero_price_keeps_a_floor(toy_model: assemble.AssembledModel) -> None:
    toy = _toy().with_parameter("costs.battery", 0.0)
    free = assemble.assemble(toy, toy.case("S1"), toy_model.fits)
    priced = toy_model.cost_terms["battery"].evaluate(_hinted_point(toy_model))
    ratio = free.cost_terms["battery"].evaluate(_hinted_point(free)) / priced
    assert ratio == pytest.approx(cost.COST_FLOOR / (4e5 / MWH), rel=1e-9)


def test_negative_price_is_rejected(toy_model: assemble.AssembledModel) -> None:
    toy = _toy().with_parameter("costs.steel", -1.0)
    with pytest.raises(ValueError, match="nonnegative"):
        assemble.assemble(toy, toy.case("S1"), toy_model.fits)


def test_service_level_fraction_range(toy_model: assemble.AssembledModel) -> None:
    toy = _toy().with_parameter("service_level.fraction", 0.0)
    with pytest.raises(ModelError, match="fraction"):
        assemble.assemble(toy, toy.case("S1"), toy_model.fits)


def test_baseline_pins(toy_model: assemble.AssembledModel) -> None:
    toy = _toy()
    pinned = assemble.assemble(toy, toy.case("P1"), toy_model.fits)
    labels = {c.label for c in pinned.problem.constraints}

    assert {
        "Dimensions:baseline_length:12",
        "Dimensions:baseline_superstructure:12",
        "Operations:baseline_frequency:12",
        "Operations:baseline_fleet:12",
    } <= labels
    assert not any("baseline" in c.label for c in toy_model.problem.constraints)


def test_fleet_modes_on_the_baltic(
    toy_model: assemble.AssembledModel, baltic_scenario_path: Any
) -> None:
    baltic = scenario.load_scenario(baltic_scenario_path)
    uniform = assemble.assemble(baltic, baltic.case("U4"), toy_model.fits)
    mixed = assemble.assemble(baltic, baltic.case("M4"), toy_model.fits)

    assert list(uniform.fleet.designs) == [variables.SHARED_DESIGN]
    assert {s.design.id for s in uniform.fleet.services.values()} == {variables.SHARED_DESIGN}
    assert sorted(mixed.fleet.designs) == ["12", "145", "245", "345"]
    assert len(uniform.problem.integer_vars) == len(mixed.problem.integer_vars) == 8
    assert sorted(mixed.fleet.chargers) == [1, 2, 3, 4, 5]
    assert len(uniform.problem.variables()) < len(mixed.problem.variables())


def test_extraction_rejects_non_optimal(toy_model: assemble.AssembledModel) -> None:
    with pytest.raises(ModelError, match="infeasible"):
        extract.extract_and_validate(toy_model, Solution(Status.INFEASIBLE, {}, math.nan))


def test_extraction_rejects_fractional_integers(toy_model: assemble.AssembledModel) -> None:
    point = _hinted_point(toy_model)
    frequency = toy_model.fleet.services["12"].frequency
    point[frequency] = 2.5

    with pytest.raises(ValidationFailure) as info:
        extract.extract_and_validate(toy_model, Solution(Status.OPTIMAL, point, 1.0))
    assert info.value.constraint_label == "Integer:12.N_rt"


def test_fleet_solution_json_round_trip(fleet_solution: extract.FleetSolution) -> None:
    original = fleet_solution
    restored = extract.FleetSolution.from_dict(json_utils.loads(json_utils.dumps(original.to_dict())))

    assert restored == original
    assert restored.services["12"].ports == (1, 2)


def test_malformed_fleet_solution(fleet_solution: extract.FleetSolution) -> None:
    data = fleet_solution.to_dict()
    del data["designs"]

    with pytest.raises(ModelError, match="Malformed"):
        extract.FleetSolution.from_dict(data)


def test_toy_solve_with_loose_tolerances_validates(toy_model: assemble.AssembledModel) -> None:
    toy = toy_model.scenario
    tolerances = attrs.evolve(toy.tolerances, duality=1e-7, kkt=1e-6, stall_gap=1e-5)
    config = attrs.evolve(toy.bnb_config, relative_gap=1e-3)

    solution = branch_bound.solve_migp(toy_model.problem, tolerances, config)

    assert solution.status is Status.OPTIMAL
    fleet = extract.extract_and_validate(toy_model, solution)
    assert fleet.worst_violation <= 1e-6
    assert fleet.services["12"].frequency >= 1


def test_every_assembled_constraint_is_log_convex(toy_model: assemble.AssembledModel) -> None:
    failed = [
        c.label
        for c in toy_model.problem.constraints
        if not convexity.check_log_convex(c, samples=40, spread=0.5, tolerance=1e-9).passed
    ]

    assert failed == []
    assert convexity.check_log_convex(
        toy_model.problem.objective, samples=40, spread=0.5, tolerance=1e-9
    ).passed


@pytest.mark.slow
def test_toy_solve_validates(toy_model: assemble.AssembledModel) -> None:
    toy = toy_model.scenario
    solution = branch_bound.solve_migp(toy_model.problem, toy.tolerances, toy.bnb_config)
    fleet = extract.extract_and_validate(toy_model, solution)

    assert fleet.worst_violation <= 1e-6
    assert math.fsum(fleet.cost_breakdown.values()) == pytest.approx(fleet.objective, rel=1e-9)
    assert set(fleet.services["12"].speeds) == {"1-2", "2-1"}
    assert set(fleet.chargers) == {"1", "2"}
    assert fleet.services["12"].frequency >= 1


@pytest.mark.slow
def test_cost_grows_with_service_level(toy_model: assemble.AssembledModel) -> None:
    costs = []
    for fraction in (0.5, 0.9):
        toy = _toy().with_parameter("service_level.fraction", fraction)
        model = assemble.assemble(toy, toy.case("S1"), toy_model.fits)
        solution = branch_bound.solve_migp(model.problem, toy.tolerances, toy.bnb_config)
        assert solution.is_optimal
        costs.append(solution.objective_value)

    assert costs[0] <= costs[1] * (1 + 1e-6)
