import pathlib

import attrs

from zevrpp import json_utils, report
from zevrpp.gp.problem import Status
from zevrpp.model.extract import FleetSolution
from zevrpp.runner import CaseRun, SweepPoint


def test_speeds_put_inbound_in_brackets(fleet_solution: FleetSolution) -> None:
    assert report.speed_rows(fleet_solution) == [
        {"case": "S1", "service": "12", "leg": "1-2", "speed [kn]": "12.5 (12.2)"}
    ]


def test_charger_table_has_one_row_per_case(fleet_solution: FleetSolution) -> None:
    other = attrs.evolve(fleet_solution, case="S2", chargers={"1": 5.0, "3": 2.25})

    rows = report.charger_rows([fleet_solution, other])

    assert rows == [
        {"case": "S1", "1": "8.5", "2": "9.0", "3": ""},
        {"case": "S2", "1": "5.0", "2": "", "3": "2.2"},
    ]


def test_cost_rows_end_with_the_total(fleet_solution: FleetSolution) -> None:
    rows = report.cost_rows([fleet_solution])

    assert [r["term"] for r in rows] == ["battery", "deck_crew", "total"]
    assert rows[-1]["S1"] == "12.500"


def test_design_and_power_rows(fleet_solution: FleetSolution) -> None:
    (design,) = report.design_rows(fleet_solution)
    assert design["N_rt"] == "4"
    assert design["L [m]"] == "120.5"
    assert design["E_batt [MWh]"] == "55.5"

    power = report.power_rows(fleet_solution)
    assert [r["leg"] for r in power] == ["1-2", "2-1"]
    assert power[0]["ratio"] == "1.000"


def test_csv_output_is_byte_stable(fleet_solution: FleetSolution) -> None:
    first = report.render_fleets([fleet_solution], report.ReportFormat.CSV)
    second = report.render_fleets([fleet_solution], report.ReportFormat.CSV)

    assert first == second
    assert sorted(first) == [
        "chargers.csv",
        "costs.csv",
        "designs.csv",
        "power.csv",
        "speeds.csv",
    ]
    assert first["speeds.csv"] == b"case,service,leg,speed [kn]\nS1,12,1-2,12.5 (12.2)\n"


def test_json_report_round_trips(fleet_solution: FleetSolution, tmp_path: pathlib.Path) -> None:
    files = report.render_fleets([fleet_solution], report.ReportFormat.JSON)

    assert list(files) == ["toy_shuttle_S1.json"]
    (path,) = report.write(files, tmp_path)
    assert report.read_fleet(path) == fleet_solution


def test_table_output_has_every_section(fleet_solution: FleetSolution) -> None:
    (text,) = report.render_fleets([fleet_solution], report.ReportFormat.TABLE).values()

    for section in ("designs", "speeds", "chargers", "costs", "power"):
        assert f"## {section}".encode() in text
    assert b"12.5 (12.2)" in text


def test_sweep_rows_mark_failed_points(fleet_solution: FleetSolution) -> None:
    points = [
        SweepPoint(
            "operations.demand_scale", 1.0, CaseRun("S1", Status.OPTIMAL, 0, fleet_solution)
        ),
        SweepPoint(
            "operations.demand_scale", 2.0, CaseRun("S1", Status.INFEASIBLE, 2, message="no")
        ),
        SweepPoint("operations.demand_scale", 3.0, CaseRun("S1", None, 1, message="bad")),
    ]

    rows = report.sweep_rows(points)

    assert [r["status"] for r in rows] == ["optimal", "infeasible", "error"]
    assert rows[0]["cost [MEUR/yr]"] == "12.5"
    assert rows[0]["12.N_rt"] == "4"
    assert rows[1]["cost [MEUR/yr]"] == ""
    assert rows[2]["12.N_rt"] == ""
    assert list(rows[0]) == list(rows[2])
    assert json_utils.loads(report.render_sweep(points, report.ReportFormat.JSON)["sweep.json"])
