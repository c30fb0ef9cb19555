"""Oracle suite: closed forms, exact coefficients, fits and the global solver.

Every check compares a value the model relies on against an independent
oracle (quadrature, rational arithmetic, enumeration). Strict checks decide
the exit code; informational checks record quoted claims that the model does
not depend on.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
from fractions import Fraction
from typing import Callable, Sequence

import attrs
import numpy as np

from zevrpp import concurrency, utils
from zevrpp.gp import barrier, branch_bound, constraint
from zevrpp.gp.expression import Registry, Variable
from zevrpp.gp.problem import BnbConfig, Problem, Status
from zevrpp.vessel import arrangement, hull, structures, surrogates
from zevrpp.vessel.coefficients import load_resistance_table
from zevrpp.vessel.hull import HullDimensions, HullForm, HullVars

logger = logging.getLogger(__name__)

BETA_GRID = (2.0, 4.0, 6.0, 8.0, 12.0)


class Kind(enum.StrEnum):
    STRICT = "strict"
    INFORMATIONAL = "informational"


@attrs.frozen
class OracleCheck:
    name: str
    kind: Kind
    value: float
    expected: float
    tolerance: float
    detail: str = ""

    @property
    def delta(self) -> float:
        """Relative difference, or absolute when the expected value is zero."""
        return utils.relative_difference(self.value, self.expected)

    @property
    def passed(self) -> bool:
        return self.delta <= self.tolerance

    def to_dict(self) -> dict[str, object]:
        return {
            "name": self.name,
            "kind": self.kind.value,
            "value": self.value,
            "expected": self.expected,
            "delta": self.delta,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "detail": self.detail,
        }


def _strict(
    name: str, value: float, expected: float, tolerance: float, detail: str = ""
) -> OracleCheck:
    return OracleCheck(name, Kind.STRICT, value, expected, tolerance, detail)


def _info(
    name: str, value: float, expected: float, tolerance: float, detail: str = ""
) -> OracleCheck:
    return OracleCheck(name, Kind.INFORMATIONAL, value, expected, tolerance, detail)


@attrs.frozen
class VerifyReport:
    checks: tuple[OracleCheck, ...]

    @property
    def failures(self) -> list[OracleCheck]:
        return [c for c in self.checks if c.kind is Kind.STRICT and not c.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict[str, object]:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def hydrostatic_checks(beta: float) -> list[OracleCheck]:
    form = HullForm(beta)
    dims = HullDimensions(100.0, 20.0, 5.0, 12.0, form)
    registry = Registry()
    hull_vars = HullVars(*(registry.continuous(n) for n in "LBTD"), form)
    front, deck = registry.continuous("front"), registry.continuous("deck")
    values = {
        hull_vars.length: dims.length,
        hull_vars.breadth: dims.breadth,
        hull_vars.draught: dims.draught,
        hull_vars.depth: dims.depth,
        front: 30.0,
        deck: 4.0,
    }
    tag = f"β={beta:g}"
    kb = hull.kb_fraction(beta)
    lcb = hull.lcb_fraction(beta)
    return [
        _strict(
            f"hydrostatics:block_coefficient:{tag}",
            hull.block_coefficient(beta),
            hull.block_coefficient_oracle(beta),
            1e-6,
        ),
        _strict(
            f"hydrostatics:waterplane_inertia:{tag}",
            hull.waterplane_inertia(dims.length, dims.breadth),
            hull.waterplane_inertia_oracle(dims),
            1e-8,
        ),
        _strict(
            f"hydrostatics:bulkhead_area:{tag}",
            arrangement.bulkhead_area(front, hull_vars, deck).evaluate(values),
            arrangement.bulkhead_area_oracle(30.0, dims, 4.0),
            1e-6,
        ),
        _strict(f"hydrostatics:kb_closed_form:{tag}", hull.kb_fraction_closed_form(beta), kb, 1e-6),
        _strict(
            f"hydrostatics:lcb_closed_form:{tag}", hull.lcb_fraction_closed_form(beta), lcb, 1e-6
        ),
        _info(
            f"hydrostatics:lcb_quoted:{tag}",
            hull.lcb_fraction_printed(beta),
            lcb,
            1e-6,
            "quoted closed form omits a factor of one half",
        ),
    ]


def structural_checks() -> list[OracleCheck]:
    def exact(name: str, value: Fraction, expected: Fraction) -> OracleCheck:
        return _strict(name, float(value), float(expected), 0.0, f"{value} against {expected}")

    return [
        exact("structures:neutral_axis", structures.neutral_axis_fraction(), Fraction(2, 5)),
        exact("structures:inertia", structures.inertia_coefficient(), Fraction(133, 150)),
        exact(
            "structures:max_shear_flow",
            structures.max_shear_flow_coefficient(),
            Fraction(53, 200),
        ),
    ]


def fit_checks() -> list[OracleCheck]:
    """Fit errors against their tolerances (strict) and quoted claims (informational)."""
    form = HullForm(6.0)
    table = load_resistance_table()
    fits = surrogates.build_surrogates(form, table)
    quoted_scale = surrogates.calibrate_froude_scale()
    return [
        _strict("fit:stability", fits.stability.rmse_log, 0.0, 0.03, "log-RMSE over B/T 2.5-6"),
        _info("fit:stability_claim", fits.stability.rmse_log, 0.0, 0.01),
        _strict("fit:critical_froude", fits.critical_froude.rmse_log, 0.0, 1e-3),
        _info("fit:critical_froude_claim", fits.critical_froude.rmse_log, 0.0, 1e-4),
        _strict("fit:standard_residual", fits.standard_residual.rmse_log, 0.0, 0.05),
        _info("fit:standard_residual_claim", fits.standard_residual.rmse_log, 0.0, 1e-3),
        _info(
            "fit:quoted_froude_scale",
            quoted_scale,
            0.286,
            0.02,
            f"max log error {surrogates.quoted_fit_error(quoted_scale):.2e}",
        ),
    ]


def toy_problem() -> tuple[Problem, Variable, Variable]:
    """min 1/x1 s.t. x2 ≥ 0.5/x1 + x1²/20, x2 ≤ 2/x1, x2 ≤ 3."""
    registry = Registry()
    x1, x2 = registry.continuous("x1"), registry.continuous("x2")
    constraints = (
        constraint.le(0.5 * x1**-1 + x1**2 / 20, x2.as_monomial(), "Toy:lower"),
        constraint.le(x2.as_monomial(), 2 * x1**-1, "Toy:upper"),
        constraint.le(x2.as_monomial(), 3.0, "Toy:cap"),
    )
    return Problem(x1**-1, constraints), x1, x2


def solver_checks() -> list[OracleCheck]:
    problem, x1, x2 = toy_problem()
    solution = barrier.solve_convex_relaxation(problem)
    optimum = 30 ** (1 / 3)
    return [
        _strict("solver:toy_x1", solution[x1], optimum, 1e-4),
        _strict("solver:toy_x2", solution[x2], 2 / optimum, 1e-4),
        _strict("solver:toy_kkt", solution.kkt_residual, 0.0, 1e-6),
    ]


def random_fleet_instance(rng: np.random.Generator) -> tuple[Problem, Variable, Variable]:
    """Frequency and fleet-size integers with capacity and availability limits."""
    registry = Registry()
    trips, vessels = registry.integer("trips"), registry.integer("vessels")
    capacity, speed = registry.continuous("capacity"), registry.continuous("speed")
    demand = rng.uniform(50, 200)
    distance = rng.uniform(5, 20)
    port_time = rng.uniform(0.5, 2)
    objective = (
        rng.uniform(0.5, 2) * vessels * capacity**0.8
        + rng.uniform(1e-3, 1e-2) * trips * capacity**0.3 * speed**2
        + rng.uniform(5, 20) * vessels
    )
    constraints = (
        constraint.le(demand * trips**-1 * capacity**-1, 1.0, "Capacity"),
        constraint.le(
            distance * trips * speed**-1 + port_time * trips, 48 * vessels, "Availability"
        ),
        constraint.le(speed, 20.0, "Speed"),
    )
    return Problem(objective, constraints, frozenset({trips, vessels})), trips, vessels


FLEET_UPPER = {"trips": 8, "vessels": 6}


def enumerate_fleet_instance(problem: Problem, trips: Variable, vessels: Variable) -> float:
    """Best objective over every integer assignment, each solved as a convex problem."""
    best = math.inf
    for n_trips, n_vessels in itertools.product(
        range(1, FLEET_UPPER["trips"] + 1), range(1, FLEET_UPPER["vessels"] + 1)
    ):
        fixed = problem.with_constraints(
            [constraint.eq(trips, float(n_trips)), constraint.eq(vessels, float(n_vessels))]
        )
        solution = barrier.solve_convex_relaxation(fixed)
        if solution.status is Status.OPTIMAL:
            best = min(best, solution.objective_value)
    return best


def branch_and_bound_checks(seeds: Sequence[int] = range(20)) -> list[OracleCheck]:
    config = BnbConfig(upper_bounds=FLEET_UPPER, relative_gap=1e-9)
    checks = []
    for seed in seeds:
        problem, trips, vessels = random_fleet_instance(np.random.default_rng(seed))
        solution = branch_bound.solve_migp(problem, bnb_config=config)
        value = solution.objective_value if solution.is_optimal else math.inf
        checks.append(
            _strict(
                f"branch_and_bound:seed={seed}",
                value,
                enumerate_fleet_instance(problem, trips, vessels),
                1e-8,
                f"{solution.bnb_nodes} nodes",
            )
        )
    return checks


SUITES: dict[str, Callable[[], list[OracleCheck]]] = {
    **{
        f"hydrostatics:β={beta:g}": (lambda beta=beta: hydrostatic_checks(beta))
        for beta in BETA_GRID
    },
    "structures": structural_checks,
    "fits": fit_checks,
    "solver": solver_checks,
    "branch_and_bound": branch_and_bound_checks,
}


def run_suite(
    names: Sequence[str] | None = None, *, max_workers: int | None = None
) -> VerifyReport:
    """Run the named suites (all by default) concurrently; checks keep suite order."""
    selected = list(SUITES) if names is None else list(names)
    unknown = [n for n in selected if n not in SUITES]
    if unknown:
        raise ValueError(f"Unknown oracle suites {unknown}; have {list(SUITES)}")
    with utils.timer(f"oracle suite ({len(selected)} groups)"):
        results = concurrency.map_ordered(
            lambda name: SUITES[name](), selected, max_workers=max_workers, desc="verify"
        )
    report = VerifyReport(tuple(c for group in results for c in group))
    for check in report.checks:
        if not check.passed:
            log = logger.error if check.kind is Kind.STRICT else logger.info
            log("%s: %.6g against %.6g (Δ=%.2e)", check.name, check.value, check.expected, check.delta)
    logger.info(
        "%d checks, %d strict failures", len(report.checks), len(report.failures)
    )
    return report
