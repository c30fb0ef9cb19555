"""Shared test fixtures."""

import pathlib
import subprocess
import sys

import attrs
import pytest

from zevrpp import verify
from zevrpp.gp.expression import Variable
from zevrpp.gp.problem import Problem
from zevrpp.model import extract


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption(
        "--run-slow",
        action="store_true",
        default=False,
        help="Run opt-in tests marked `slow` (randomized sweeps, full scenario solves).",
    )


def pytest_collection_modifyitems(
    config: pytest.Config, items: list[pytest.Item]
) -> None:
    for marker, flag, reason in [
        ("slow", "--run-slow", "needs --run-slow (long-running solves)"),
    ]:
        if config.getoption(flag):
            continue
        skip = pytest.mark.skip(reason=reason)
        for item in items:
            if marker in item.keywords:
                item.add_marker(skip)


_PROJECT_ROOT = pathlib.Path(__file__).parent.parent
SCENARIO_DIR = _PROJECT_ROOT / "zevrpp" / "data" / "scenarios"


def run_zevrpp_tools(*args: str) -> subprocess.CompletedProcess[str]:
    """Run zevrpp_tools script with given arguments."""
    script_path = _PROJECT_ROOT / "scripts" / "zevrpp_tools.py"
    return subprocess.run(
        [sys.executable, str(script_path), *args],
        capture_output=True,
        text=True,
        cwd=str(_PROJECT_ROOT),
    )


@attrs.frozen
class ToyProblem:
    problem: Problem
    x1: Variable
    x2: Variable


@pytest.fixture
def toy() -> ToyProblem:
    return ToyProblem(*verify.toy_problem())


@pytest.fixture
def toy_scenario_path() -> pathlib.Path:
    return SCENARIO_DIR / "toy_shuttle.toml"


@pytest.fixture
def baltic_scenario_path() -> pathlib.Path:
    return SCENARIO_DIR / "baltic.toml"


@pytest.fixture
def fleet_solution() -> extract.FleetSolution:
    """A hand-built two-port solution; not an optimum."""
    return extract.FleetSolution(
        scenario="toy_shuttle",
        case="S1",
        mode="mixed",
        objective=1.25e7,
        cost_breakdown={"battery": 5e6, "deck_crew": 7.5e6},
        designs={
            "12": extract.DesignValues(
                length=120.5,
                breadth=22.25,
                draught=5.5,
                depth=14.0,
                superstructure_length=80.0,
                deck_plate=0.012,
                battery_capacity=55.5,
                max_shaft_power=6.25,
                enclosed_volume=2.5e4,
                gross_tonnage=5.9e3,
                pax_capacity=1.1,
                roro_capacity=1.8,
                steel_weight=2.1e3,
                displacement=9.8e3,
            )
        },
        services={
            "12": extract.ServiceValues(
                design="12",
                ports=(1, 2),
                frequency=4,
                fleet_size=2,
                battery_replacements=1.0,
                cell_life_years=31.5,
                speeds={"1-2": 12.5, "2-1": 12.25},
                shaft_power={"1-2": 3.5, "2-1": 3.25},
                admiralty_power={"1-2": 3.5, "2-1": 3.3},
            )
        },
        chargers={"1": 8.5, "2": 9.0},
        flows={"12:1-2:pax": 3.6},
        worst_violation=2e-9,
        bnb_nodes=7,
    )
