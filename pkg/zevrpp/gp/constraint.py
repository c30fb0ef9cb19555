"""Constraint forms accepted by the solver and their builders.

Labels read ``"Group:detail"``; the group part drives constraint censuses and
report breakdowns.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Union

import attrs
import numpy as np

from zevrpp.gp.expression import (
    Compiled,
    Derivatives,
    Expression,
    Monomial,
    Number,
    Posynomial,
    Variable,
    as_monomial,
)


def _group(label: str) -> str:
    return label.split(":", 1)[0]


@attrs.frozen
class PosyLE1:
    """``expr(x) ≤ 1`` for a log-convex expression."""

    expr: Expression
    label: str = ""

    @property
    def group(self) -> str:
        return _group(self.label)

    def variables(self) -> frozenset[Variable]:
        return self.expr.variables()

    def violation(self, values: Mapping[Variable, float]) -> float:
        return max(0.0, self.expr.evaluate(values) - 1.0)


@attrs.frozen
class MonoEQ1:
    """``mono(x) = 1``; a linear equality in log space."""

    mono: Monomial
    label: str = ""

    @property
    def group(self) -> str:
        return _group(self.label)

    def variables(self) -> frozenset[Variable]:
        return self.mono.variables()

    def violation(self, values: Mapping[Variable, float]) -> float:
        return abs(self.mono.evaluate(values) - 1.0)


@attrs.frozen
class MonoGE:
    """``mono(x) ≥ bound``, stored as ``bound / mono ≤ 1``."""

    mono: Monomial
    bound: float
    label: str = ""

    def __attrs_post_init__(self) -> None:
        if not self.bound > 0:
            raise ValueError(f"MonoGE bound must be positive, got {self.bound}")

    @property
    def group(self) -> str:
        return _group(self.label)

    def as_posy_le1(self) -> PosyLE1:
        return PosyLE1(Monomial(self.bound) / self.mono, self.label)

    def variables(self) -> frozenset[Variable]:
        return self.mono.variables()

    def violation(self, values: Mapping[Variable, float]) -> float:
        return max(0.0, 1.0 - self.mono.evaluate(values) / self.bound)


@attrs.frozen
class PosyLELog:
    """``posy(x) ≤ constant + Σ w_j ln x_j`` with every ``w_j ≥ 0``.

    In log space the residual ``posy(exp u) − constant − w·u`` is convex, so
    the constraint is kept as is rather than log-transformed.
    """

    posy: Posynomial
    constant: float
    log_weights: tuple[tuple[Variable, float], ...]
    label: str = ""

    def __attrs_post_init__(self) -> None:
        if any(w < 0 for _, w in self.log_weights):
            raise ValueError("Log-term weights must be nonnegative")

    @property
    def group(self) -> str:
        return _group(self.label)

    def variables(self) -> frozenset[Variable]:
        return self.posy.variables() | {v for v, _ in self.log_weights}

    def rhs(self, values: Mapping[Variable, float]) -> float:
        return self.constant + sum(w * math.log(values[v]) for v, w in self.log_weights)

    def violation(self, values: Mapping[Variable, float]) -> float:
        rhs = self.rhs(values)
        return max(0.0, self.posy.evaluate(values) - rhs) / max(1.0, abs(rhs))

    def compile(self, index: Mapping[Variable, int]) -> Compiled:
        support, A, log_c = self.posy.term_matrix(index)
        weight_idx = np.array([index[v] for v, _ in self.log_weights], dtype=int)
        full = np.union1d(support, weight_idx).astype(int)
        pos = np.searchsorted(full, support)
        w = np.zeros(len(full))
        for (_, weight), i in zip(self.log_weights, weight_idx):
            w[np.searchsorted(full, i)] += weight
        constant = self.constant

        def local(u: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
            terms = np.exp(log_c + A @ u[support])
            g = -w.copy()
            g[pos] += A.T @ terms
            H = np.zeros((len(full), len(full)))
            H[np.ix_(pos, pos)] = (A.T * terms) @ A
            return float(terms.sum() - constant - w @ u[full]), g, H

        return Compiled(full, local)

    def derivatives(self, u: np.ndarray, index: Mapping[Variable, int]) -> Derivatives:
        return self.compile(index)(u)


Constraint = Union[PosyLE1, MonoEQ1, MonoGE, PosyLELog]


def le(
    lhs: Expression | Variable | Number,
    rhs: Monomial | Variable | Number,
    label: str = "",
) -> PosyLE1:
    """``lhs ≤ rhs`` with a log-convex left side and a monomial right side."""
    expr = lhs if isinstance(lhs, Expression) else as_monomial(lhs)
    return PosyLE1(expr / as_monomial(rhs), label)


def ge(
    lhs: Monomial | Variable | Number,
    rhs: Expression | Variable | Number,
    label: str = "",
) -> PosyLE1 | MonoGE:
    """``lhs ≥ rhs``; a constant right side yields a MonoGE."""
    if isinstance(rhs, (int, float)):
        return MonoGE(as_monomial(lhs), float(rhs), label)
    return le(rhs, lhs, label)


def eq(
    lhs: Monomial | Variable | Number,
    rhs: Monomial | Variable | Number,
    label: str = "",
) -> MonoEQ1:
    """Monomial equality ``lhs = rhs``."""
    return MonoEQ1(as_monomial(lhs) / as_monomial(rhs), label)


def le_log(
    posy: Posynomial | Monomial,
    constant: float,
    log_weights: Iterable[tuple[Variable, float]],
    label: str = "",
) -> PosyLELog:
    """``posy ≤ constant + Σ w ln x``."""
    if isinstance(posy, Monomial):
        posy = Posynomial((posy,))
    return PosyLELog(posy, float(constant), tuple(log_weights), label)


def worst_violation(
    constraints: Iterable[Constraint], values: Mapping[Variable, float]
) -> tuple[Constraint | None, float]:
    """Return the most violated constraint and its relative violation."""
    worst: Constraint | None = None
    worst_value = 0.0
    for constraint in constraints:
        if (v := constraint.violation(values)) > worst_value:
            worst, worst_value = constraint, v
    return worst, worst_value
