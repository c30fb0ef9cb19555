"""Branch and bound over barrier-solved convex relaxations.

Nodes are explored best-bound first. Branching adds ``n ≤ ⌊n̂⌋`` or
``n ≥ ⌈n̂⌉`` as monomial bounds on the most fractional integer variable,
and a variable whose bounds meet is fixed by a monomial equality.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math

import attrs
import numpy as np

from zevrpp.gp.barrier import LogSpaceResult, solve_convex_relaxation, solve_lowered, to_solution
from zevrpp.gp.problem import (
    BnbConfig,
    LogSpaceProblem,
    Problem,
    Solution,
    Status,
    Tolerances,
    lower,
)

logger = logging.getLogger(__name__)


@attrs.frozen
class _Node:
    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def bounded(self, lp: LogSpaceProblem, positions: tuple[int, ...]) -> LogSpaceProblem:
        lower_rows, upper_rows, fixed = {}, {}, {}
        for i, lo, hi in zip(positions, self.lo, self.hi):
            if lo == hi:
                fixed[i] = float(lo)
                continue
            if lo > 1:
                lower_rows[i] = float(lo)
            upper_rows[i] = float(hi)
        return lp.with_bounds(lower_rows, upper_rows, fixed)


@attrs.define
class _Incumbent:
    objective: float = math.inf
    integers: tuple[int, ...] = ()
    result: LogSpaceResult | None = None
    lp: LogSpaceProblem | None = None

    def offer(
        self,
        objective: float,
        integers: tuple[int, ...],
        result: LogSpaceResult,
        lp: LogSpaceProblem,
        tie_tolerance: float,
    ) -> bool:
        tie = math.isfinite(self.objective) and abs(
            objective - self.objective
        ) <= tie_tolerance * abs(self.objective)
        better = objective < self.objective and not tie
        if better or (tie and integers < self.integers):
            self.objective, self.integers, self.result, self.lp = (
                objective,
                integers,
                result,
                lp,
            )
            return True
        return False


def _solve_fixed(
    lp: LogSpaceProblem,
    positions: tuple[int, ...],
    integers: tuple[int, ...],
    tol: Tolerances,
) -> tuple[LogSpaceProblem, LogSpaceResult]:
    node_lp = _Node(integers, integers).bounded(lp, positions)
    return node_lp, solve_lowered(node_lp, tol)


def solve_migp(
    problem: Problem,
    tolerances: Tolerances = Tolerances(),
    bnb_config: BnbConfig = BnbConfig(),
) -> Solution:
    """Globally solve a mixed-integer log-convex problem.

    Among integer assignments whose objectives agree within the tie
    tolerance, the lexicographically smallest (by variable id) wins.
    """
    if not problem.integer_vars:
        return solve_convex_relaxation(problem, tolerances)
    lp = lower(problem)
    integer_vars = sorted(problem.integer_vars, key=lambda v: v.id)
    index = lp.index
    positions = tuple(index[v] for v in integer_vars)
    tie_tolerance = bnb_config.tie_tolerance
    incumbent = _Incumbent()

    def offer(integers: tuple[int, ...]) -> None:
        node_lp, result = _solve_fixed(lp, positions, integers, tolerances)
        if result.status is not Status.OPTIMAL:
            return
        objective = math.exp(result.log_objective)
        if incumbent.offer(objective, integers, result, node_lp, tie_tolerance):
            logger.info("New incumbent %.10g at %s", objective, integers)

    root = _Node(
        tuple(1 for _ in integer_vars),
        tuple(bnb_config.upper_for(v) for v in integer_vars),
    )
    counter = itertools.count()
    heap: list[tuple[float, int, _Node]] = [(-math.inf, next(counter), root)]
    nodes = 0
    skipped_bounds: list[float] = []
    root_status: Status | None = None

    def prunable(bound: float, node: _Node) -> bool:
        if bound >= incumbent.objective * (1 + tie_tolerance):
            return True
        if bound < incumbent.objective * (1 - bnb_config.relative_gap):
            return False
        # Within the gap: keep only nodes that may still win a tie.
        return not node.lo < incumbent.integers

    while heap:
        parent_bound, _, node = heapq.heappop(heap)
        if prunable(parent_bound, node):
            continue
        if nodes >= bnb_config.node_limit:
            heapq.heappush(heap, (parent_bound, next(counter), node))
            break
        nodes += 1
        result = solve_lowered(node.bounded(lp, positions), tolerances)
        if root_status is None:
            root_status = result.status
            if result.status is Status.OPTIMAL:
                seed = tuple(
                    min(hi, max(lo, math.ceil(math.exp(result.u[i]) - bnb_config.integrality)))
                    for i, lo, hi in zip(positions, node.lo, node.hi)
                )
                offer(seed)
        if result.status is Status.INFEASIBLE:
            continue
        if result.status is not Status.OPTIMAL:
            logger.warning("Node %d ended with status %s; skipped", nodes, result.status.value)
            skipped_bounds.append(parent_bound)
            continue
        bound = math.exp(result.log_lower_bound)
        if prunable(bound, node):
            continue

        values = np.exp(result.u[list(positions)])
        distance = np.abs(values - np.round(values))
        branch = int(np.argmax(distance))
        if distance[branch] <= bnb_config.integrality:
            rounded = tuple(int(round(v)) for v in values)
            offer(rounded)
            if prunable(bound, node):
                continue
            # Tied box: split off the assignments that sort before the rounded point.
            below = [j for j, (lo, k) in enumerate(zip(node.lo, rounded)) if lo < k]
            if not below:
                continue
            branch = below[0]
            split = rounded[branch] - 1
        else:
            split = math.floor(values[branch])
        left = _Node(node.lo, (*node.hi[:branch], split, *node.hi[branch + 1 :]))
        right = _Node((*node.lo[:branch], split + 1, *node.lo[branch + 1 :]), node.hi)
        for child in (left, right):
            heapq.heappush(heap, (bound, next(counter), child))

    if root_status is Status.UNBOUNDED:
        return Solution(Status.UNBOUNDED, {}, math.nan, bnb_nodes=nodes)
    if incumbent.result is None or incumbent.lp is None:
        status = Status.NODE_LIMIT if heap else (
            Status.ITERATION_LIMIT if skipped_bounds else Status.INFEASIBLE
        )
        logger.info("Branch and bound found no integer solution (%s)", status.value)
        return Solution(status, {}, math.nan, bnb_nodes=nodes)

    open_bounds = [b for b, _, n in heap if not prunable(b, n)]
    lower_bound = min([incumbent.objective, *open_bounds, *skipped_bounds])
    # A skipped subtree leaves the incumbent unproven.
    if open_bounds:
        status = Status.NODE_LIMIT
    elif skipped_bounds:
        status = Status.ITERATION_LIMIT
    else:
        status = Status.OPTIMAL
    gap = (incumbent.objective - lower_bound) / incumbent.objective
    logger.info(
        "Branch and bound: %d nodes, objective %.10g, gap %.2e, status %s",
        nodes,
        incumbent.objective,
        gap,
        status.value,
    )
    solution = to_solution(incumbent.lp, incumbent.result)
    values = dict(solution.values)
    for variable, k in zip(integer_vars, incumbent.integers):
        values[variable] = float(k)
    return attrs.evolve(
        solution, status=status, values=values, bnb_nodes=nodes, lower_bound=lower_bound
    )
