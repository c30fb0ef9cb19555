"""Problem and solution types, and lowering of a problem to log space.

Lowering turns every constraint into either a smooth convex inequality
``F_i(u) ≤ 0`` or a row of the linear system ``A u = b``:

* posynomial and monomial ``≤ 1`` constraints go into one vectorized
  log-sum-exp block;
* other log-convex expressions and log-affine bounds are kept as compiled
  closures;
* ``Max`` nodes are replaced by auxiliary variables bounded below by each
  argument;
* monomial equalities become linear equalities.
"""

from __future__ import annotations

import enum
import logging
import math
from typing import Callable, Iterable, Mapping, Sequence

import attrs
import numpy as np
import scipy.linalg
from scipy import sparse

from zevrpp.gp.constraint import (
    Constraint,
    MonoEQ1,
    MonoGE,
    PosyLE1,
    PosyLELog,
)
from zevrpp.gp.expression import (
    Compiled,
    Expression,
    ExpOfMonomial,
    Max,
    Monomial,
    Posynomial,
    Power,
    Product,
    Sum,
    Variable,
)

logger = logging.getLogger(__name__)

# Implicit integer bound n ≥ 1 − 1e-9; a variable fixed at 1 stays strictly interior.
_INTEGER_FLOOR = 1 - 1e-9


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration-limit"
    NODE_LIMIT = "node-limit"


@attrs.frozen
class Tolerances:
    """Barrier solver tolerances and iteration limits."""

    feasibility: float = 1e-8
    kkt: float = 1e-8
    # Target for the barrier surrogate gap m/t; relative in the objective.
    duality: float = 1e-9
    # Accept a stalled line search when the surrogate gap is already this small.
    stall_gap: float = 1e-6
    max_newton: int = 200
    max_outer: int = 80
    # Phase 1 searches inside |log x| ≤ log_bound.
    log_bound: float = 60.0
    # Phase 2 reports unbounded beyond this.
    unbounded_log: float = 300.0


@attrs.frozen
class BnbConfig:
    """Branch-and-bound limits.

    ``upper_bounds`` maps integer variable names to their own upper bound;
    every other integer variable is capped at ``integer_upper``.
    """

    integer_upper: int = 16
    upper_bounds: Mapping[str, int] = attrs.field(factory=dict)
    node_limit: int = 5000
    relative_gap: float = 1e-6
    integrality: float = 1e-6
    # Integer assignments whose objectives agree this closely are ties.
    tie_tolerance: float = 1e-8

    def upper_for(self, variable: Variable) -> int:
        return self.upper_bounds.get(variable.name, self.integer_upper)


@attrs.frozen(eq=False)
class Problem:
    """Minimize ``objective`` subject to ``constraints``.

    ``var_bounds`` are positive (lower, upper) hints used only to seed the
    starting point.
    """

    objective: Expression
    constraints: tuple[Constraint, ...]
    integer_vars: frozenset[Variable] = frozenset()
    var_bounds: Mapping[Variable, tuple[float, float]] = attrs.field(factory=dict)

    def __attrs_post_init__(self) -> None:
        for variable in self.integer_vars:
            if not variable.is_integer:
                raise ValueError(f"Variable '{variable.name}' is not declared integer")

    def variables(self) -> list[Variable]:
        found = set(self.objective.variables()) | set(self.integer_vars)
        for constraint in self.constraints:
            found |= constraint.variables()
        return sorted(found, key=lambda v: v.id)

    def with_constraints(self, extra: Iterable[Constraint]) -> Problem:
        return attrs.evolve(self, constraints=(*self.constraints, *extra))

    def census(self) -> dict[str, int]:
        """Constraint count per label group."""
        counts: dict[str, int] = {}
        for constraint in self.constraints:
            counts[constraint.group] = counts.get(constraint.group, 0) + 1
        return counts


@attrs.frozen(eq=False)
class Solution:
    status: Status
    values: Mapping[Variable, float]
    objective_value: float
    kkt_residual: float = math.nan
    bnb_nodes: int = 0
    lower_bound: float = math.nan
    newton_steps: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def __getitem__(self, variable: Variable) -> float:
        return self.values[variable]


@attrs.frozen(eq=False)
class InequalityEval:
    """Values and first derivatives of ``F(u) ≤ 0`` rows at one point.

    ``curvature(c)`` returns ``Σ c_i ∇²F_i`` as a sparse matrix.
    """

    values: np.ndarray
    jacobian: sparse.csr_matrix
    curvature: Callable[[np.ndarray], sparse.spmatrix]


@attrs.frozen(eq=False)
class PosyBlock:
    """Vectorized log-sum-exp rows: ``F_i(u) = log Σ_k exp(A_k u + log c_k)``."""

    terms: sparse.csr_matrix
    log_c: np.ndarray
    starts: np.ndarray
    segment: np.ndarray

    @classmethod
    def build(
        cls, rows: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray]], n: int
    ) -> PosyBlock:
        data, row_idx, col_idx, log_c, starts, segment = [], [], [], [], [], []
        offset = 0
        for i, (support, A, lc) in enumerate(rows):
            starts.append(offset)
            k, _ = A.shape
            nz_r, nz_c = np.nonzero(A)
            data.append(A[nz_r, nz_c])
            row_idx.append(nz_r + offset)
            col_idx.append(support[nz_c])
            log_c.append(lc)
            segment.append(np.full(k, i))
            offset += k
        terms = sparse.csr_matrix(
            (np.concatenate(data), (np.concatenate(row_idx), np.concatenate(col_idx))),
            shape=(offset, n),
        )
        return cls(
            terms,
            np.concatenate(log_c),
            np.array(starts, dtype=int),
            np.concatenate(segment).astype(int),
        )

    def __len__(self) -> int:
        return len(self.starts)

    def _softmax(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        z = self.terms @ u + self.log_c
        zmax = np.maximum.reduceat(z, self.starts)
        e = np.exp(z - zmax[self.segment])
        s = np.add.reduceat(e, self.starts)
        return zmax + np.log(s), e / s[self.segment]

    def values(self, u: np.ndarray) -> np.ndarray:
        return self._softmax(u)[0]

    def evaluate(self, u: np.ndarray) -> InequalityEval:
        F, p = self._softmax(u)
        T = len(p)
        weights = sparse.csr_matrix(
            (p, (self.segment, np.arange(T))), shape=(len(self), T)
        )
        G = (weights @ self.terms).tocsr()

        def curvature(c: np.ndarray) -> sparse.spmatrix:
            first = self.terms.T @ sparse.diags(p * c[self.segment]) @ self.terms
            return first - G.T @ sparse.diags(c) @ G

        return InequalityEval(F, G, curvature)


@attrs.frozen(eq=False)
class GenericBlock:
    """Rows evaluated through compiled closures."""

    rows: tuple[Compiled, ...]
    n: int

    def __len__(self) -> int:
        return len(self.rows)

    def values(self, u: np.ndarray) -> np.ndarray:
        return np.array([row.local(u)[0] for row in self.rows])

    def evaluate(self, u: np.ndarray) -> InequalityEval:
        parts = [row.local(u) for row in self.rows]
        values = np.array([p[0] for p in parts])
        jr, jc, jv = [], [], []
        for i, (row, (_, g, _)) in enumerate(zip(self.rows, parts)):
            jr.append(np.full(len(row.support), i))
            jc.append(row.support)
            jv.append(g)
        G = sparse.csr_matrix(
            (np.concatenate(jv), (np.concatenate(jr), np.concatenate(jc))),
            shape=(len(self.rows), self.n),
        )

        def curvature(c: np.ndarray) -> sparse.spmatrix:
            hr, hc, hv = [], [], []
            for c_i, row, (_, _, H) in zip(c, self.rows, parts):
                rr, cc = np.meshgrid(row.support, row.support, indexing="ij")
                hr.append(rr.ravel())
                hc.append(cc.ravel())
                hv.append(c_i * H.ravel())
            return sparse.csr_matrix(
                (np.concatenate(hv), (np.concatenate(hr), np.concatenate(hc))),
                shape=(self.n, self.n),
            )

        return InequalityEval(values, G, curvature)


def stack_evals(evals: Sequence[InequalityEval], n: int) -> InequalityEval:
    """Concatenate inequality rows from several blocks."""
    if not evals:
        return InequalityEval(
            np.zeros(0), sparse.csr_matrix((0, n)), lambda c: sparse.csr_matrix((n, n))
        )
    sizes = np.cumsum([0] + [len(e.values) for e in evals])

    def curvature(c: np.ndarray) -> sparse.spmatrix:
        total = sparse.csr_matrix((n, n))
        for e, lo, hi in zip(evals, sizes[:-1], sizes[1:]):
            total = total + e.curvature(c[lo:hi])
        return total

    return InequalityEval(
        np.concatenate([e.values for e in evals]),
        sparse.vstack([e.jacobian for e in evals]).tocsr(),
        curvature,
    )


@attrs.frozen(eq=False)
class LogSpaceProblem:
    """A lowered problem over ``u = log x``.

    ``variables`` lists the problem's own variables first, then the
    auxiliary variables introduced for ``Max`` nodes.
    """

    variables: tuple[Variable, ...]
    n_original: int
    objective: Compiled
    posy: PosyBlock | None
    generic: GenericBlock | None
    labels: tuple[str, ...]
    A_eq: np.ndarray
    b_eq: np.ndarray
    eq_labels: tuple[str, ...]
    u_hint: np.ndarray
    aux_sources: Mapping[Variable, Max]

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def m(self) -> int:
        return len(self.labels)

    @property
    def index(self) -> dict[Variable, int]:
        return {v: i for i, v in enumerate(self.variables)}

    def objective_value(self, u: np.ndarray) -> float:
        return self.objective.local(u)[0]

    def inequality_values(self, u: np.ndarray) -> np.ndarray:
        parts = [b.values(u) for b in (self.posy, self.generic) if b is not None]
        return np.concatenate(parts) if parts else np.zeros(0)

    def inequalities(self, u: np.ndarray) -> InequalityEval:
        return stack_evals(
            [b.evaluate(u) for b in (self.posy, self.generic) if b is not None], self.n
        )

    def with_bounds(
        self,
        lower: Mapping[int, float],
        upper: Mapping[int, float],
        fixed: Mapping[int, float],
    ) -> LogSpaceProblem:
        """Add ``x_i ≥ lo``, ``x_i ≤ hi`` and ``x_i = v`` rows by variable position."""
        rows = []
        labels = []
        for i, lo in sorted(lower.items()):
            rows.append((np.array([i]), np.array([[-1.0]]), np.array([math.log(lo)])))
            labels.append(f"Branch:{self.variables[i].name}>={lo:g}")
        for i, hi in sorted(upper.items()):
            rows.append((np.array([i]), np.array([[1.0]]), np.array([-math.log(hi)])))
            labels.append(f"Branch:{self.variables[i].name}<={hi:g}")
        posy = self.posy
        if rows:
            extra = PosyBlock.build(rows, self.n)
            if posy is None:
                posy = extra
            else:
                posy = PosyBlock(
                    sparse.vstack([posy.terms, extra.terms]).tocsr(),
                    np.concatenate([posy.log_c, extra.log_c]),
                    np.concatenate([posy.starts, extra.starts + posy.terms.shape[0]]),
                    np.concatenate([posy.segment, extra.segment + len(posy)]),
                )
        n_posy = len(self.posy) if self.posy is not None else 0
        new_labels = (*self.labels[:n_posy], *labels, *self.labels[n_posy:])
        A_eq, b_eq, eq_labels = self.A_eq, self.b_eq, self.eq_labels
        if fixed:
            fix_rows = np.zeros((len(fixed), self.n))
            fix_b = np.zeros(len(fixed))
            for r, (i, value) in enumerate(sorted(fixed.items())):
                fix_rows[r, i] = 1.0
                fix_b[r] = math.log(value)
            A_eq = np.vstack([A_eq, fix_rows])
            b_eq = np.concatenate([b_eq, fix_b])
            eq_labels = (
                *eq_labels,
                *(f"Branch:{self.variables[i].name}={v:g}" for i, v in sorted(fixed.items())),
            )
        return attrs.evolve(
            self,
            posy=posy,
            labels=new_labels,
            A_eq=A_eq,
            b_eq=b_eq,
            eq_labels=eq_labels,
        )


@attrs.define
class _Lowering:
    index: dict[Variable, int]
    next_id: int
    aux: list[Variable] = attrs.field(factory=list)
    aux_sources: dict[Variable, Max] = attrs.field(factory=dict)
    inequalities: list[tuple[PosyLE1 | PosyLELog, str]] = attrs.field(factory=list)

    def new_aux(self, source: Max) -> Variable:
        variable = Variable(self.next_id, f"max_aux[{len(self.aux)}]")
        self.next_id += 1
        self.index[variable] = len(self.index)
        self.aux.append(variable)
        self.aux_sources[variable] = source
        return variable

    def replace_max(self, expr: Expression, label: str) -> Expression:
        match expr:
            case Max(args=args):
                aux = self.new_aux(expr)
                for arg in args:
                    self.add_le1(arg / aux.as_monomial(), label)
                return aux.as_monomial()
            case Power(base=base, exponent=p) if base.contains_max():
                return Power(self.replace_max(base, label), p)
            case Product(factors=factors) if expr.contains_max():
                return Product(self.replace_max(f, label) for f in factors)
            case Sum(addends=addends) if expr.contains_max():
                return Sum(self.replace_max(a, label) for a in addends)
        return expr

    def add_le1(self, expr: Expression, label: str) -> None:
        if isinstance(expr, Max):
            for arg in expr.args:
                self.add_le1(arg, label)
            return
        self.inequalities.append((PosyLE1(self.replace_max(expr, label), label), label))


def _affine_row(mono: Monomial, index: Mapping[Variable, int], n: int) -> tuple[np.ndarray, float]:
    row = np.zeros(n)
    for variable, exponent in mono.exponents:
        row[index[variable]] += exponent
    return row, -math.log(mono.coefficient)


def lower(problem: Problem) -> LogSpaceProblem:
    """Lower ``problem`` to log space; see the module docstring."""
    variables = problem.variables()
    state = _Lowering(
        {v: i for i, v in enumerate(variables)},
        max((v.id for v in variables), default=-1) + 1,
    )
    equalities: list[MonoEQ1] = []
    for constraint in problem.constraints:
        match constraint:
            case MonoEQ1():
                equalities.append(constraint)
            case MonoGE():
                state.add_le1(constraint.as_posy_le1().expr, constraint.label)
            case PosyLE1(expr=expr, label=label):
                state.add_le1(expr, label)
            case PosyLELog():
                state.inequalities.append((constraint, constraint.label))
    for variable in sorted(problem.integer_vars, key=lambda v: v.id):
        state.add_le1(_INTEGER_FLOOR * variable**-1, f"Integer:{variable.name}>=1")
    objective = problem.objective
    if objective.contains_max():
        objective = state.replace_max(objective, "Objective")
    n = len(state.index)
    index = state.index

    posy_rows, posy_labels, generic_rows, generic_labels = [], [], [], []
    for constraint, label in state.inequalities:
        if isinstance(constraint, PosyLE1) and isinstance(constraint.expr, Monomial):
            support, a, log_c = constraint.expr.affine(index)
            posy_rows.append((support, a[None, :], np.array([log_c])))
            posy_labels.append(label)
        elif isinstance(constraint, PosyLE1) and isinstance(constraint.expr, Posynomial):
            posy_rows.append(constraint.expr.term_matrix(index))
            posy_labels.append(label)
        elif isinstance(constraint, PosyLE1):
            generic_rows.append(constraint.expr.compile(index))
            generic_labels.append(label)
        else:
            generic_rows.append(constraint.compile(index))
            generic_labels.append(label)

    A_eq = np.zeros((len(equalities), n))
    b_eq = np.zeros(len(equalities))
    for r, equality in enumerate(equalities):
        A_eq[r], b_eq[r] = _affine_row(equality.mono, index, n)

    hint = np.zeros(n)
    for variable, (lo, hi) in problem.var_bounds.items():
        if variable in index:
            hint[index[variable]] = 0.5 * (math.log(lo) + math.log(hi))
    hint_values = {v: math.exp(hint[i]) for v, i in index.items()}
    for aux, source in state.aux_sources.items():
        hint[index[aux]] = math.log(source.evaluate(hint_values))

    logger.debug(
        "Lowered problem: %d variables (%d auxiliary), %d posynomial rows, "
        "%d generic rows, %d equalities",
        n,
        len(state.aux),
        len(posy_rows),
        len(generic_rows),
        len(equalities),
    )
    return LogSpaceProblem(
        variables=(*variables, *state.aux),
        n_original=len(variables),
        objective=objective.compile(index),
        posy=PosyBlock.build(posy_rows, n) if posy_rows else None,
        generic=GenericBlock(tuple(generic_rows), n) if generic_rows else None,
        labels=(*posy_labels, *generic_labels),
        A_eq=A_eq,
        b_eq=b_eq,
        eq_labels=tuple(e.label for e in equalities),
        u_hint=hint,
        aux_sources=state.aux_sources,
    )


def independent_rows(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    """Drop linearly dependent equality rows; report whether the system is consistent."""
    if A.shape[0] == 0:
        return A, b, True
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    consistent = bool(np.max(np.abs(A @ x - b)) <= 1e-9 * max(1.0, np.max(np.abs(b))))
    _, R, perm = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > 1e-10 * max(diag[0], 1.0))) if len(diag) else 0
    keep = np.sort(perm[:rank])
    return A[keep], b[keep], consistent


def project_affine(A: np.ndarray, b: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Closest point to ``u`` on ``{A u = b}``."""
    if A.shape[0] == 0:
        return u.copy()
    delta, *_ = np.linalg.lstsq(A, A @ u - b, rcond=None)
    return u - delta
