"""Tests for the barrier solver and branch and bound."""

import itertools
import math

import attrs
import numpy as np
import pytest

from zevrpp import verify
from zevrpp.gp import barrier, branch_bound, constraint
from zevrpp.gp.barrier import LogSpaceResult
from zevrpp.gp.expression import Max, Monomial, Posynomial, Registry
from zevrpp.gp.problem import BnbConfig, LogSpaceProblem, Problem, Status, Tolerances

from tests.conftest import ToyProblem

_X1 = 30 ** (1 / 3)


def test_toy_problem_global_optimum(toy: ToyProblem) -> None:
    solution = barrier.solve_convex_relaxation(toy.problem)
    assert solution.status is Status.OPTIMAL
    assert solution[toy.x1] == pytest.approx(_X1, rel=1e-6)
    assert solution[toy.x2] == pytest.approx(2 / _X1, rel=1e-6)
    assert solution.objective_value == pytest.approx(1 / _X1, rel=1e-8)
    assert solution.kkt_residual <= 1e-8
    _, worst = constraint.worst_violation(toy.problem.constraints, solution.values)
    assert worst <= 1e-8


def test_kkt_residual_examples(toy: ToyProblem) -> None:
    solution = barrier.solve_convex_relaxation(toy.problem)
    assert barrier.kkt_residual(toy.problem, solution.values) <= 1e-6
    interior = barrier.kkt_residual(toy.problem, {toy.x1: 2.0, toy.x2: 1.0})
    assert interior == pytest.approx(0.5, abs=1e-9)

    registry = Registry()
    x = registry.continuous("x")
    bounded = Problem(x.as_monomial(), (constraint.ge(x, 5.0, "Bound:x"),))
    assert barrier.kkt_residual(bounded, {x: 5.0}) <= 1e-8


def test_kkt_residual_rejects_infeasible_point(toy: ToyProblem) -> None:
    with pytest.raises(ValueError, match="violates"):
        barrier.kkt_residual(toy.problem, {toy.x1: 3.0, toy.x2: 5.0})


def test_simple_bound() -> None:
    registry = Registry()
    x = registry.continuous("x")
    problem = Problem(x.as_monomial(), (constraint.ge(x, 5.0),))
    solution = barrier.solve_convex_relaxation(problem)
    assert solution.status is Status.OPTIMAL
    assert solution[x] == pytest.approx(5.0, rel=1e-8)


def test_symmetric_product_bound() -> None:
    registry = Registry()
    x1, x2 = registry.continuous("x1"), registry.continuous("x2")
    problem = Problem(x1 + x2, (constraint.ge(x1 * x2, 1.0),))
    solution = barrier.solve_convex_relaxation(problem)
    assert solution.objective_value == pytest.approx(2.0, rel=1e-8)
    assert solution[x1] == pytest.approx(1.0, rel=1e-4)
    assert solution[x2] == pytest.approx(1.0, rel=1e-4)


def test_monomial_equality_only() -> None:
    registry = Registry()
    x, y = registry.continuous("x"), registry.continuous("y")
    problem = Problem(x + y, (constraint.eq(x * y, 4.0),))
    solution = barrier.solve_convex_relaxation(problem)
    assert solution.status is Status.OPTIMAL
    assert solution[x] == pytest.approx(2.0, rel=1e-8)
    assert solution[y] == pytest.approx(2.0, rel=1e-8)


def test_infeasible_bounds_are_certified() -> None:
    registry = Registry()
    x = registry.continuous("x")
    problem = Problem(
        x.as_monomial(), (constraint.ge(x, 5.0), constraint.le(x, 2.0))
    )
    assert barrier.solve_convex_relaxation(problem).status is Status.INFEASIBLE


def test_inconsistent_equalities_are_infeasible() -> None:
    registry = Registry()
    x = registry.continuous("x")
    problem = Problem(x.as_monomial(), (constraint.eq(x, 2.0), constraint.eq(x, 3.0)))
    assert barrier.solve_convex_relaxation(problem).status is Status.INFEASIBLE


def test_unbounded_below() -> None:
    registry = Registry()
    x = registry.continuous("x")
    problem = Problem(x.as_monomial(), (constraint.le(x, 5.0),))
    assert barrier.solve_convex_relaxation(problem).status is Status.UNBOUNDED


def test_max_in_objective_and_constraints() -> None:
    registry = Registry()
    x, y = registry.continuous("x"), registry.continuous("y")
    problem = Problem(Max([x.as_monomial(), 2 * x**-1]), ())
    solution = barrier.solve_convex_relaxation(problem)
    assert solution.objective_value == pytest.approx(math.sqrt(2), rel=1e-7)
    assert set(solution.values) == {x}

    bounded = Problem(
        y.as_monomial(),
        (constraint.PosyLE1(Max([2 * y**-1, 3 * y**-1 + y / 100])),),
    )
    solution = barrier.solve_convex_relaxation(bounded)
    assert solution[y] == pytest.approx(50 * (1 - math.sqrt(1 - 12 / 100)), rel=1e-6)


def test_solve_is_deterministic(toy: ToyProblem) -> None:
    first = barrier.solve_convex_relaxation(toy.problem)
    second = barrier.solve_convex_relaxation(toy.problem)
    assert first.values == second.values
    assert first.objective_value == second.objective_value


def _constructed_problem(
    rng: np.random.Generator,
) -> tuple[Problem, float]:
    """A random program whose optimum is known by construction.

    Active posynomials are scaled to equal 1 at a chosen point and the
    monomial objective's exponents are set from nonnegative multipliers so
    that the KKT conditions hold there.
    """
    registry = Registry()
    n = 3
    variables = [registry.continuous(f"x{i}") for i in range(n)]
    u_star = rng.normal(scale=0.5, size=n)
    point = {v: math.exp(u) for v, u in zip(variables, u_star)}
    constraints = []
    objective_exponents = np.zeros(n)
    for i in range(n + 3):
        exponents = rng.normal(size=(3, n))
        terms = [
            Monomial(float(rng.lognormal()), zip(variables, row)) for row in exponents
        ]
        posy = Posynomial(terms)
        active = i < n + 1
        target = 1.0 if active else 0.5
        posy = posy.scaled(Monomial(target / posy.evaluate(point)))
        constraints.append(constraint.PosyLE1(posy, f"Random:{i}"))
        if active:
            weights = np.array([t.evaluate(point) for t in posy.terms])
            gradient = (weights / weights.sum()) @ exponents
            objective_exponents -= rng.uniform(0.5, 2.0) * gradient
    objective = Monomial(1.0, zip(variables, objective_exponents))
    return Problem(objective, tuple(constraints)), float(objective.evaluate(point))


def test_constructed_optima_are_recovered() -> None:
    rng = np.random.default_rng(2024)
    for _ in range(100):
        problem, optimum = _constructed_problem(rng)
        solution = barrier.solve_convex_relaxation(problem)
        assert solution.status is Status.OPTIMAL
        assert solution.objective_value == pytest.approx(optimum, rel=1e-6)


def test_migp_ceiling() -> None:
    registry = Registry()
    n = registry.integer("n")
    problem = Problem(n.as_monomial(), (constraint.ge(n, 2.3),), frozenset({n}))
    solution = branch_bound.solve_migp(problem)
    assert solution.status is Status.OPTIMAL
    assert solution[n] == 3.0


def test_migp_tie_breaks_to_smallest_integer() -> None:
    registry = Registry()
    n, x = registry.integer("n"), registry.continuous("x")
    problem = Problem(n * x, (constraint.ge(x, 10 * n**-1),), frozenset({n}))
    solution = branch_bound.solve_migp(problem, bnb_config=BnbConfig(integer_upper=10))
    assert solution.status is Status.OPTIMAL
    assert solution[n] == 1.0
    assert solution.objective_value == pytest.approx(10.0, rel=1e-8)


def test_migp_without_integers_delegates() -> None:
    registry = Registry()
    x = registry.continuous("x")
    problem = Problem(x.as_monomial(), (constraint.ge(x, 5.0),))
    solution = branch_bound.solve_migp(problem)
    assert solution[x] == pytest.approx(5.0, rel=1e-8)
    assert solution.bnb_nodes == 0


def _check_against_enumeration(seed: int) -> None:
    problem, trips, vessels = verify.random_fleet_instance(np.random.default_rng(seed))
    config = BnbConfig(upper_bounds=verify.FLEET_UPPER, relative_gap=1e-9)
    solution = branch_bound.solve_migp(problem, bnb_config=config)
    assert solution.status is Status.OPTIMAL
    assert solution.objective_value == pytest.approx(
        verify.enumerate_fleet_instance(problem, trips, vessels), rel=1e-8
    )
    assert solution[trips] == int(solution[trips])
    relaxation = barrier.solve_convex_relaxation(
        problem.with_constraints([constraint.le(trips, 8.0), constraint.le(vessels, 6.0)])
    )
    assert relaxation.objective_value <= solution.objective_value * (1 + 1e-9)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_migp_matches_enumeration(seed: int) -> None:
    _check_against_enumeration(seed)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(3, 23))
def test_migp_matches_enumeration_sweep(seed: int) -> None:
    _check_against_enumeration(seed)


def test_migp_with_a_skipped_node_is_not_optimal(monkeypatch: pytest.MonkeyPatch) -> None:
    registry = Registry()
    n = registry.integer("n")
    problem = Problem(n.as_monomial(), (constraint.ge(n, 2.3),), frozenset({n}))
    solve = branch_bound.solve_lowered
    calls = itertools.count(1)

    # Root, then the rounded seed, then the first child.
    def third_call_stalls(lp: LogSpaceProblem, tol: Tolerances) -> LogSpaceResult:
        result = solve(lp, tol)
        if next(calls) == 3:
            return attrs.evolve(result, status=Status.ITERATION_LIMIT)
        return result

    monkeypatch.setattr(branch_bound, "solve_lowered", third_call_stalls)
    solution = branch_bound.solve_migp(problem)

    assert solution.status is Status.ITERATION_LIMIT
    assert solution[n] == 3.0
    assert solution.lower_bound == pytest.approx(2.3, rel=1e-6)
