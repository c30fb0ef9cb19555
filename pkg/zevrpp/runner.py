"""Case runs and parameter sweeps.

A run assembles one case, solves it globally and re-validates the recovered
fleet. Failures that a sweep must survive (infeasible or node-limited
points, validation failures, bad parameter values) are returned as a
:class:`CaseRun` with an exit code instead of raised.
"""

from __future__ import annotations

import logging

import attrs
import numpy as np

from zevrpp import concurrency, utils
from zevrpp.errors import ModelError, ValidationFailure
from zevrpp.gp import branch_bound
from zevrpp.gp.problem import Status
from zevrpp.model import assemble, extract
from zevrpp.model.extract import FleetSolution
from zevrpp.model.scenario import Scenario
from zevrpp.vessel import surrogates
from zevrpp.vessel.coefficients import load_resistance_table
from zevrpp.vessel.surrogates import Surrogates

logger = logging.getLogger(__name__)

EXIT_OPTIMAL = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_VALIDATION = 3

_STATUS_EXIT = {
    Status.OPTIMAL: EXIT_OPTIMAL,
    Status.INFEASIBLE: EXIT_INFEASIBLE,
    Status.UNBOUNDED: EXIT_ERROR,
    Status.ITERATION_LIMIT: EXIT_ERROR,
    Status.NODE_LIMIT: EXIT_ERROR,
}


@attrs.frozen
class CaseRun:
    case_id: str
    status: Status | None
    """None when the case could not be assembled."""
    exit_code: int
    fleet: FleetSolution | None = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.exit_code == EXIT_OPTIMAL


@attrs.frozen
class SweepPoint:
    parameter: str
    value: float
    run: CaseRun


def scenario_fits(scenario: Scenario) -> Surrogates:
    return surrogates.build_surrogates(assemble.hull_form(scenario), load_resistance_table())


def run_case(scenario: Scenario, case_id: str, fits: Surrogates | None = None) -> CaseRun:
    """Assemble, solve and validate one case of ``scenario``."""
    case = scenario.case(case_id)
    model = assemble.assemble(scenario, case, fits)
    with utils.timer(f"solve of case {case_id}") as watch:
        solution = branch_bound.solve_migp(
            model.problem, scenario.tolerances, scenario.bnb_config
        )
    if not solution.is_optimal:
        message = f"Case {case_id} ended {solution.status.value} after {solution.bnb_nodes} nodes"
        logger.warning("%s", message)
        return CaseRun(case_id, solution.status, _STATUS_EXIT[solution.status], message=message)
    try:
        fleet = extract.extract_and_validate(model, solution)
    except ValidationFailure as e:
        logger.error("Case %s failed validation: %s", case_id, e)
        return CaseRun(case_id, solution.status, EXIT_VALIDATION, message=str(e))
    logger.info(
        "Case %s optimal: %.6g EUR/yr, %d nodes in %.1f s",
        case_id,
        fleet.objective,
        solution.bnb_nodes,
        watch.elapsed,
    )
    return CaseRun(case_id, solution.status, EXIT_OPTIMAL, fleet)


def sweep_values(low: float, high: float, steps: int) -> list[float]:
    if steps < 1:
        raise ValueError(f"A sweep needs at least one step, got {steps}")
    if steps == 1:
        return [float(low)]
    return [float(v) for v in np.linspace(low, high, steps)]


def sweep(
    scenario: Scenario,
    case_id: str,
    parameter: str,
    low: float,
    high: float,
    steps: int,
    *,
    fits: Surrogates | None = None,
    max_workers: int | None = None,
) -> list[SweepPoint]:
    """Solve ``case_id`` at every grid value of ``parameter``; failed points are kept, marked."""
    scenario.parameters[parameter]
    scenario.case(case_id)
    values = sweep_values(low, high, steps)
    shared_fits = fits if fits is not None else scenario_fits(scenario)

    def point(value: float) -> SweepPoint:
        try:
            run = run_case(scenario.with_parameter(parameter, value), case_id, shared_fits)
        except (ModelError, ValueError) as e:
            logger.warning("Sweep point %s=%g failed: %s", parameter, value, e)
            run = CaseRun(case_id, None, EXIT_ERROR, message=str(e))
        return SweepPoint(parameter, value, run)

    with utils.timer(f"sweep of {parameter} over {steps} points"):
        return concurrency.map_ordered(
            point, values, max_workers=max_workers, desc=f"sweep {parameter}", show_progress=True
        )
