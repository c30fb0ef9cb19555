"""Log-barrier interior-point solver for lowered log-convex problems.

Centering uses damped Newton steps on the equality-constrained barrier
function with a backtracking line search. A phase-1 slack problem finds a
strictly feasible start, so callers never supply an initial point.
"""

from __future__ import annotations

import enum
import logging
import math
from typing import Callable, Mapping

import attrs
import numpy as np
import scipy.optimize
import scipy.sparse.linalg
from scipy import sparse

from zevrpp.gp.problem import (
    InequalityEval,
    LogSpaceProblem,
    Problem,
    Solution,
    Status,
    Tolerances,
    independent_rows,
    lower,
    project_affine,
)
from zevrpp.gp.expression import Variable

logger = logging.getLogger(__name__)

_DECREMENT_TOL = 1e-10
_ARMIJO = 0.01
_BACKTRACK = 0.5
_MIN_STEP = 1e-14
_MU = 10.0
_PHASE_ONE_MARGIN = 0.01
_QUADRATIC_REGION = 1e-6


class _Exit(enum.Enum):
    CONVERGED = enum.auto()
    STALLED = enum.auto()
    STOPPED = enum.auto()
    NEWTON_LIMIT = enum.auto()
    OUTER_LIMIT = enum.auto()
    UNBOUNDED = enum.auto()


@attrs.frozen(eq=False)
class _Program:
    """A smooth convex program ``min f(x) s.t. F(x) < 0, A x = b``."""

    objective: Callable[[np.ndarray], tuple[float, np.ndarray, sparse.spmatrix]]
    objective_value: Callable[[np.ndarray], float]
    inequality_values: Callable[[np.ndarray], np.ndarray]
    inequalities: Callable[[np.ndarray], InequalityEval]
    A: np.ndarray
    b: np.ndarray


@attrs.frozen(eq=False)
class LogSpaceResult:
    """Outcome of a barrier solve on a lowered problem.

    ``log_objective`` is ``log f0`` at ``u``; ``log_lower_bound`` is the
    barrier duality bound ``log f0 − m/t``.
    """

    status: Status
    u: np.ndarray
    log_objective: float
    log_lower_bound: float
    kkt_residual: float
    newton_steps: int


def _scatter_objective(
    lp: LogSpaceProblem,
) -> Callable[[np.ndarray], tuple[float, np.ndarray, sparse.spmatrix]]:
    support = lp.objective.support
    n = lp.n

    def objective(u: np.ndarray) -> tuple[float, np.ndarray, sparse.spmatrix]:
        value, g_local, H_local = lp.objective.local(u)
        g = np.zeros(n)
        g[support] = g_local
        rr, cc = np.meshgrid(support, support, indexing="ij")
        H = sparse.csr_matrix((H_local.ravel(), (rr.ravel(), cc.ravel())), shape=(n, n))
        return value, g, H

    return objective


def _newton_direction(
    H: sparse.spmatrix, grad: np.ndarray, A: np.ndarray
) -> np.ndarray:
    """Solve the equality-constrained Newton system with Jacobi scaling."""
    n = len(grad)
    k = A.shape[0]
    diag = np.abs(H.diagonal())
    floor = 1e-12 * max(float(diag.max(initial=0.0)), 1.0)
    d = 1.0 / np.sqrt(np.maximum(diag, floor))
    D = sparse.diags(d)
    Hs = (D @ H @ D).tocsc()
    As = sparse.csr_matrix(A * d[None, :]) if k else sparse.csr_matrix((0, n))
    rhs = np.concatenate([-d * grad, np.zeros(k)])
    for delta in (1e-10, 1e-6):
        if k:
            K = sparse.bmat(
                [
                    [Hs + delta * sparse.identity(n), As.T],
                    [As, -delta * sparse.identity(k)],
                ],
                format="csc",
            )
        else:
            K = (Hs + delta * sparse.identity(n)).tocsc()
        try:
            solution = scipy.sparse.linalg.splu(K).solve(rhs)
        except RuntimeError:
            continue
        if np.all(np.isfinite(solution)):
            return d * solution[:n]
    logger.debug("Sparse KKT factorization failed; using dense least squares")
    K_dense = np.block(
        [[Hs.toarray(), As.toarray().T], [As.toarray(), np.zeros((k, k))]]
    )
    solution, *_ = np.linalg.lstsq(K_dense, rhs, rcond=None)
    return d * solution[:n]


def _barrier_value(program: _Program, x: np.ndarray, t: float) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        F = program.inequality_values(x)
        if not np.all(np.isfinite(F)) or np.any(F >= 0):
            return math.inf
        value = t * program.objective_value(x) - float(np.sum(np.log(-F)))
    return value if math.isfinite(value) else math.inf


def _center(
    program: _Program,
    x: np.ndarray,
    t: float,
    tol: Tolerances,
    stop: Callable[[np.ndarray], bool] | None,
) -> tuple[np.ndarray, _Exit, int]:
    for step in range(1, tol.max_newton + 1):
        _, g0, H0 = program.objective(x)
        ev = program.inequalities(x)
        c = 1.0 / -ev.values
        J = ev.jacobian
        grad = t * g0 + J.T @ c
        H = t * H0 + ev.curvature(c) + J.T @ sparse.diags(c**2) @ J
        dx = _newton_direction(sparse.csr_matrix(H), grad, program.A)
        decrement = float(-grad @ dx)
        if decrement / 2 <= _DECREMENT_TOL:
            return x, _Exit.CONVERGED, step - 1
        phi = _barrier_value(program, x, t)
        alpha = 1.0
        while True:
            candidate = x + alpha * dx
            value = _barrier_value(program, candidate, t)
            if value <= phi - _ARMIJO * alpha * decrement:
                break
            # Near the center roundoff in the barrier value can exceed the
            # predicted decrease; a feasible full step is taken anyway.
            if alpha == 1.0 and decrement < _QUADRATIC_REGION and math.isfinite(value):
                break
            alpha *= _BACKTRACK
            if alpha < _MIN_STEP:
                return x, _Exit.STALLED, step
        x = candidate
        if np.max(np.abs(x), initial=0.0) > tol.unbounded_log:
            return x, _Exit.UNBOUNDED, step
        if stop is not None and stop(x):
            return x, _Exit.STOPPED, step
    return x, _Exit.NEWTON_LIMIT, tol.max_newton


def _run_barrier(
    program: _Program,
    x: np.ndarray,
    tol: Tolerances,
    *,
    stop: Callable[[np.ndarray], bool] | None = None,
    stop_outer: Callable[[np.ndarray, float], bool] | None = None,
) -> tuple[np.ndarray, float, _Exit, int]:
    m = len(program.inequality_values(x))
    t = 1.0
    total_steps = 0
    for outer in range(tol.max_outer):
        x, exit_, steps = _center(program, x, t, tol, stop)
        total_steps += steps
        logger.debug(
            "Barrier iteration %d: t=%.3e, %d Newton steps, %s", outer, t, steps, exit_.name
        )
        if exit_ is _Exit.STALLED and m / t <= tol.stall_gap:
            return x, t, _Exit.CONVERGED, total_steps
        if exit_ is not _Exit.CONVERGED:
            return x, t, exit_, total_steps
        if stop_outer is not None and stop_outer(x, t):
            return x, t, _Exit.STOPPED, total_steps
        if m == 0 or m / t <= tol.duality:
            return x, t, _Exit.CONVERGED, total_steps
        t *= _MU
    return x, t, _Exit.OUTER_LIMIT, total_steps


def _phase_one(
    lp: LogSpaceProblem, A: np.ndarray, b: np.ndarray, u0: np.ndarray, tol: Tolerances
) -> tuple[np.ndarray | None, int]:
    """Find ``u`` with every ``F_i(u) < 0``; ``None`` when certified infeasible.

    Solves ``min s  s.t.  F_i(u) ≤ s, s ≥ −1`` inside a box on ``u``.
    """
    n = lp.n
    radius = max(tol.log_bound, float(np.max(np.abs(u0), initial=0.0)) + 1.0)
    identity = sparse.identity(n, format="csr")
    slack_col = sparse.csr_matrix(np.full((lp.m, 1), -1.0))

    def values(x: np.ndarray) -> np.ndarray:
        u, s = x[:n], x[n]
        return np.concatenate(
            [lp.inequality_values(u) - s, [-1.0 - s], u - radius, -radius - u]
        )

    def inequalities(x: np.ndarray) -> InequalityEval:
        u, s = x[:n], x[n]
        ev = lp.inequalities(u)
        J = sparse.bmat(
            [
                [ev.jacobian, slack_col],
                [None, sparse.csr_matrix([[-1.0]])],
                [identity, None],
                [-identity, None],
            ],
            format="csr",
        )
        F = np.concatenate([ev.values - s, [-1.0 - s], u - radius, -radius - u])

        def curvature(c: np.ndarray) -> sparse.spmatrix:
            inner = sparse.csr_matrix(ev.curvature(c[: lp.m]))
            return sparse.block_diag([inner, sparse.csr_matrix((1, 1))], format="csr")

        return InequalityEval(F, J, curvature)

    def objective(x: np.ndarray) -> tuple[float, np.ndarray, sparse.spmatrix]:
        g = np.zeros(n + 1)
        g[n] = 1.0
        return float(x[n]), g, sparse.csr_matrix((n + 1, n + 1))

    program = _Program(
        objective=objective,
        objective_value=lambda x: float(x[n]),
        inequality_values=values,
        inequalities=inequalities,
        A=np.hstack([A, np.zeros((A.shape[0], 1))]),
        b=b,
    )
    u0 = np.clip(u0, -radius + 1.0, radius - 1.0)
    s0 = max(float(np.max(lp.inequality_values(u0))) + 1.0, 0.0)
    m_total = lp.m + 1 + 2 * n

    def feasible(x: np.ndarray) -> bool:
        return x[n] <= -_PHASE_ONE_MARGIN

    def certified_infeasible(x: np.ndarray, t: float) -> bool:
        return x[n] - m_total / t > 0

    x, _, exit_, steps = _run_barrier(
        program,
        np.append(u0, s0),
        tol,
        stop=feasible,
        stop_outer=certified_infeasible,
    )
    s = x[n]
    u = x[:n]
    if exit_ is _Exit.STOPPED and s < 0:
        logger.debug("Phase 1 found a strictly feasible point (s=%.3e)", s)
        return u, steps
    if exit_ is _Exit.CONVERGED and np.max(lp.inequality_values(u)) < 0:
        logger.debug("Phase 1 converged to a strictly feasible point (s=%.3e)", s)
        return u, steps
    logger.info("Phase 1 found no strictly feasible point (s=%.3e, exit %s)", s, exit_.name)
    return None, steps


def _central_kkt(lp: LogSpaceProblem, A: np.ndarray, u: np.ndarray, t: float) -> float:
    """Residual with the barrier multipliers ``λ_i = 1/(−t F_i)``."""
    _, g0, _ = _scatter_objective(lp)(u)
    r = g0
    complementarity = 0.0
    if lp.m:
        ev = lp.inequalities(u)
        lam = 1.0 / (-t * ev.values)
        r = r + ev.jacobian.T @ lam
        complementarity = float(np.max(np.abs(lam * ev.values)))
    if A.shape[0]:
        nu, *_ = np.linalg.lstsq(A.T, -r, rcond=None)
        r = r + A.T @ nu
    return max(float(np.max(np.abs(r), initial=0.0)), complementarity)


def _fitted_kkt(lp: LogSpaceProblem, A: np.ndarray, u: np.ndarray, active_tol: float) -> float:
    """Residual with multipliers fitted by bounded least squares on near-active rows."""
    _, g0, _ = _scatter_objective(lp)(u)
    columns = []
    active_values = np.zeros(0)
    if lp.m:
        ev = lp.inequalities(u)
        active = ev.values >= -active_tol
        active_values = ev.values[active]
        columns.append(ev.jacobian[active].toarray().T)
    if A.shape[0]:
        columns.append(A.T)
    M = np.hstack(columns) if columns else np.zeros((lp.n, 0))
    if M.shape[1] == 0:
        return float(np.max(np.abs(g0), initial=0.0))
    n_active = len(active_values)
    lower_bounds = np.concatenate(
        [np.zeros(n_active), np.full(M.shape[1] - n_active, -np.inf)]
    )
    fit = scipy.optimize.lsq_linear(M, -g0, bounds=(lower_bounds, np.inf), method="bvls")
    r = M @ fit.x + g0
    complementarity = float(
        np.max(np.abs(fit.x[:n_active] * active_values), initial=0.0)
    )
    return max(float(np.max(np.abs(r), initial=0.0)), complementarity)


def solve_lowered(lp: LogSpaceProblem, tol: Tolerances = Tolerances()) -> LogSpaceResult:
    """Solve a lowered problem; used directly by branch and bound."""
    A, b, consistent = independent_rows(lp.A_eq, lp.b_eq)
    nan = math.nan
    if not consistent:
        logger.info("Monomial equalities are inconsistent")
        return LogSpaceResult(Status.INFEASIBLE, lp.u_hint, nan, nan, nan, 0)
    u = project_affine(A, b, lp.u_hint)
    steps = 0
    if lp.m:
        with np.errstate(over="ignore", invalid="ignore"):
            F0 = lp.inequality_values(u)
        if not (np.all(np.isfinite(F0)) and np.max(F0) < 0):
            start, steps = _phase_one(lp, A, b, u, tol)
            if start is None:
                return LogSpaceResult(Status.INFEASIBLE, u, nan, nan, nan, steps)
            u = start

    program = _Program(
        objective=_scatter_objective(lp),
        objective_value=lp.objective_value,
        inequality_values=lp.inequality_values,
        inequalities=lp.inequalities,
        A=A,
        b=b,
    )
    u, t, exit_, phase_two_steps = _run_barrier(program, u, tol)
    steps += phase_two_steps
    log_obj = lp.objective_value(u)
    match exit_:
        case _Exit.CONVERGED:
            status = Status.OPTIMAL
        case _Exit.UNBOUNDED:
            status = Status.UNBOUNDED
        case _:
            status = Status.ITERATION_LIMIT
    kkt = nan
    if status is Status.OPTIMAL:
        kkt = _central_kkt(lp, A, u, t)
        if kkt > tol.kkt:
            kkt = min(kkt, _fitted_kkt(lp, A, u, active_tol=1e-6))
    return LogSpaceResult(status, u, log_obj, log_obj - lp.m / t, kkt, steps)


def to_solution(lp: LogSpaceProblem, result: LogSpaceResult) -> Solution:
    values = {
        v: float(np.exp(result.u[i])) for i, v in enumerate(lp.variables[: lp.n_original])
    }
    objective = math.exp(result.log_objective) if math.isfinite(result.log_objective) else math.nan
    lower_bound = (
        math.exp(result.log_lower_bound) if math.isfinite(result.log_lower_bound) else math.nan
    )
    return Solution(
        status=result.status,
        values=values,
        objective_value=objective,
        kkt_residual=result.kkt_residual,
        lower_bound=lower_bound,
        newton_steps=result.newton_steps,
    )


def solve_convex_relaxation(problem: Problem, tolerances: Tolerances = Tolerances()) -> Solution:
    """Solve ``problem`` treating integer variables as continuous values ≥ 1."""
    lp = lower(problem)
    result = solve_lowered(lp, tolerances)
    logger.debug(
        "Relaxation: %s after %d Newton steps, objective %.10g",
        result.status.value,
        result.newton_steps,
        math.exp(result.log_objective) if math.isfinite(result.log_objective) else math.nan,
    )
    return to_solution(lp, result)


def kkt_residual(problem: Problem, point: Mapping[Variable, float]) -> float:
    """Best stationarity plus complementarity residual of ``point`` in log space.

    Multipliers are fitted by nonnegative least squares over the constraints
    active within 1e-6. Raises ValueError for points violating any constraint
    by more than 1e-6.
    """
    lp = lower(problem)
    u = np.zeros(lp.n)
    for i, variable in enumerate(lp.variables[: lp.n_original]):
        try:
            value = point[variable]
        except KeyError:
            raise KeyError(f"No value assigned to variable '{variable.name}'") from None
        if not value > 0:
            raise ValueError(f"Variable '{variable.name}' must be positive, got {value}")
        u[i] = math.log(value)
    index = lp.index
    for aux, source in lp.aux_sources.items():
        u[index[aux]] = math.log(source.evaluate(point))

    if lp.m:
        F = lp.inequality_values(u)
        worst = int(np.argmax(F))
        if F[worst] > 1e-6:
            raise ValueError(f"Point violates constraint '{lp.labels[worst]}'")
    if lp.A_eq.shape[0]:
        eq_residual = np.abs(lp.A_eq @ u - lp.b_eq)
        worst = int(np.argmax(eq_residual))
        if eq_residual[worst] > 1e-6:
            raise ValueError(f"Point violates equality '{lp.eq_labels[worst]}'")
    return _fitted_kkt(lp, lp.A_eq, u, active_tol=1e-6)
