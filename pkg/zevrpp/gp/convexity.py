"""Randomized log-convexity check for expressions and constraints."""

import logging
from typing import Callable

import attrs
import numpy as np

from zevrpp.gp.constraint import Constraint, MonoEQ1, MonoGE, PosyLE1, PosyLELog
from zevrpp.gp.expression import Expression

logger = logging.getLogger(__name__)


@attrs.frozen
class ConvexityReport:
    samples: int
    failures: int
    worst_excess: float

    @property
    def passed(self) -> bool:
        return self.failures == 0


def _log_space_function(
    item: Expression | Constraint,
) -> tuple[Callable[[np.ndarray], float], int]:
    match item:
        case PosyLE1(expr=expr):
            target: Expression | PosyLELog = expr
        case MonoEQ1(mono=mono) | MonoGE(mono=mono):
            target = mono
        case PosyLELog():
            target = item
        case Expression():
            target = item
        case _:
            raise TypeError(f"Unsupported item: {type(item).__name__}")
    variables = sorted(target.variables(), key=lambda v: v.id)
    compiled = target.compile({v: i for i, v in enumerate(variables)})
    return (lambda u: compiled(u).value), len(variables)


def check_log_convex(
    item: Expression | Constraint,
    *,
    samples: int = 1000,
    seed: int = 0,
    spread: float = 1.0,
    tolerance: float = 1e-12,
) -> ConvexityReport:
    """Test ``F(θu + (1−θ)v) ≤ θF(u) + (1−θ)F(v)`` on random triples.

    Points are drawn around the origin of log space with standard deviation
    ``spread``; the slack allowed is ``tolerance`` scaled by the magnitude of
    the right-hand side.
    """
    F, n = _log_space_function(item)
    rng = np.random.default_rng(seed)
    failures = 0
    worst = -np.inf
    for _ in range(samples):
        u = rng.normal(scale=spread, size=n)
        v = rng.normal(scale=spread, size=n)
        theta = rng.uniform()
        lhs = F(theta * u + (1 - theta) * v)
        rhs = theta * F(u) + (1 - theta) * F(v)
        excess = lhs - rhs
        worst = max(worst, excess)
        if excess > tolerance * max(1.0, abs(rhs)):
            failures += 1
    if failures:
        logger.warning(
            "Log-convexity check failed on %d of %d samples (worst excess %.3e)",
            failures,
            samples,
            worst,
        )
    return ConvexityReport(samples, failures, float(worst))
