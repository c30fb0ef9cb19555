"""Least-squares fits of log-convex surrogates to positive samples.

A softmax-affine fit with K terms models the log-space data ``(y, g) =
(log x, log f)`` as

    g ≈ (1/α) · log Σ_k exp(α (a_k·y + b_k)),

which is convex in ``y``. Raised to the power α it is a posynomial in ``x``,
so ``f^α ≥ Σ_k exp(α b_k) · x^(α a_k)`` can be handed to the solver as is.
K = 1 is the monomial fit and is solved exactly by linear least squares.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, Iterable, Sequence

import attrs
import numpy as np
from scipy import optimize, special

from zevrpp import concurrency, utils
from zevrpp.errors import FitError
from zevrpp.gp.expression import Expression, Monomial, Posynomial, Power, Variable

logger = logging.getLogger(__name__)

_DEFAULT_RESTARTS = 12
_INITIAL_ALPHA = 5.0


def _as_points(values: np.ndarray | Sequence[float]) -> np.ndarray:
    return np.atleast_2d(np.asarray(values, float).T).T


def _as_values(values: np.ndarray | Sequence[float]) -> np.ndarray:
    return np.asarray(values, float).ravel()


@attrs.frozen(eq=False)
class FitData:
    """Positive samples ``(x_i, f_i)``; ``x`` has one row per sample."""

    x: np.ndarray = attrs.field(converter=_as_points)
    f: np.ndarray = attrs.field(converter=_as_values)

    def __attrs_post_init__(self) -> None:
        if self.x.shape[0] != self.f.shape[0]:
            raise ValueError(
                f"Got {self.x.shape[0]} sample points but {self.f.shape[0]} values"
            )
        if not (np.all(self.x > 0) and np.all(self.f > 0)):
            raise ValueError("Fit samples must be strictly positive")

    @classmethod
    def from_function(
        cls, fn: Callable[[np.ndarray], float], x: np.ndarray | Sequence[float]
    ) -> FitData:
        points = _as_points(x)
        return cls(points, [fn(p) for p in points])

    @property
    def size(self) -> int:
        return int(self.f.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.x.shape[1])

    @property
    def log_x(self) -> np.ndarray:
        return np.log(self.x)

    @property
    def log_f(self) -> np.ndarray:
        return np.log(self.f)


@attrs.frozen(eq=False)
class SoftmaxAffineFit:
    alpha: float
    a: np.ndarray
    b: np.ndarray
    rmse_log: float

    @property
    def terms(self) -> int:
        return int(self.b.shape[0])

    def predict_log(self, log_x: np.ndarray) -> np.ndarray:
        """Log-space prediction for log-space points (one row per point)."""
        return _predict(self.alpha, self.a, self.b, np.atleast_2d(log_x))

    def __call__(self, x: np.ndarray | Sequence[float] | float) -> np.ndarray:
        points = np.asarray(x, float).reshape(-1, self.a.shape[1])
        return np.exp(self.predict_log(np.log(points)))

    def posynomial(self, variables: Sequence[Variable]) -> Posynomial:
        """``Σ exp(α b_k) Π x^(α a_k)``, equal to the fitted function to the power α."""
        if len(variables) != self.a.shape[1]:
            raise ValueError(
                f"Fit has {self.a.shape[1]} inputs, got {len(variables)} variables"
            )
        return Posynomial(
            Monomial(
                math.exp(self.alpha * b_k),
                [(v, self.alpha * float(e)) for v, e in zip(variables, a_k)],
            )
            for a_k, b_k in zip(self.a, self.b)
        )

    def expression(self, variables: Sequence[Variable]) -> Expression:
        """The fitted function itself as a log-convex expression."""
        posy = self.posynomial(variables)
        if self.terms == 1:
            return posy.terms[0] ** (1 / self.alpha)
        return Power(posy, 1 / self.alpha)


@attrs.frozen(eq=False)
class PosynomialPowerFit:
    """``r^power ≥ Σ coefficients_k · Π x^exponents_k``."""

    power: float
    coefficients: np.ndarray
    exponents: np.ndarray
    rmse_log: float

    def posynomial(self, variables: Sequence[Variable]) -> Posynomial:
        return Posynomial(
            Monomial(float(c), [(v, float(e)) for v, e in zip(variables, row)])
            for c, row in zip(self.coefficients, self.exponents)
        )

    def __call__(self, x: np.ndarray | Sequence[float] | float) -> np.ndarray:
        points = np.asarray(x, float).reshape(-1, self.exponents.shape[1])
        posy = np.exp(np.log(points) @ self.exponents.T) @ self.coefficients
        return posy ** (1 / self.power)


def _predict(alpha: float, a: np.ndarray, b: np.ndarray, y: np.ndarray) -> np.ndarray:
    return special.logsumexp(alpha * (y @ a.T + b), axis=1) / alpha


def rmse_log(fit: SoftmaxAffineFit | PosynomialPowerFit, data: FitData) -> float:
    """Root-mean-square log-space residual of ``fit`` over ``data``."""
    residual = np.log(fit(data.x)) - data.log_f
    return float(np.sqrt(np.mean(residual**2)))


def _monomial_fit(data: FitData) -> SoftmaxAffineFit:
    design = np.column_stack([data.log_x, np.ones(data.size)])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise FitError(
            f"Monomial fit is rank deficient ({data.size} samples, {data.dimension} inputs)"
        )
    coeffs, *_ = np.linalg.lstsq(design, data.log_f, rcond=None)
    residual = design @ coeffs - data.log_f
    return SoftmaxAffineFit(
        alpha=1.0,
        a=coeffs[None, :-1].copy(),
        b=coeffs[-1:].copy(),
        rmse_log=float(np.sqrt(np.mean(residual**2))),
    )


@attrs.frozen(eq=False)
class _Seed:
    a: np.ndarray
    b: np.ndarray
    log_alpha: float


class _Objective:
    """Residuals and Jacobian over ``θ = (a, b, log α)``; α may be held fixed."""

    def __init__(self, data: FitData, terms: int, fixed_alpha: float | None) -> None:
        self.y = data.log_x
        self.g = data.log_f
        self.terms = terms
        self.n = data.dimension
        self.fixed_alpha = fixed_alpha

    def pack(self, seed: _Seed) -> np.ndarray:
        parts = [seed.a.ravel(), seed.b]
        if self.fixed_alpha is None:
            parts.append(np.array([seed.log_alpha]))
        return np.concatenate(parts)

    def unpack(self, theta: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        k, n = self.terms, self.n
        a = theta[: k * n].reshape(k, n)
        b = theta[k * n : k * n + k]
        alpha = self.fixed_alpha if self.fixed_alpha is not None else math.exp(theta[-1])
        return alpha, a, b

    def residuals(self, theta: np.ndarray) -> np.ndarray:
        alpha, a, b = self.unpack(theta)
        return _predict(alpha, a, b, self.y) - self.g

    def jacobian(self, theta: np.ndarray) -> np.ndarray:
        alpha, a, b = self.unpack(theta)
        z = self.y @ a.T + b
        w = special.softmax(alpha * z, axis=1)
        columns = [
            (w[:, :, None] * self.y[:, None, :]).reshape(len(self.g), -1),
            w,
        ]
        if self.fixed_alpha is None:
            f = special.logsumexp(alpha * z, axis=1) / alpha
            columns.append(((w * z).sum(axis=1) - f)[:, None])
        return np.hstack(columns)


def _slab_seed(data: FitData, terms: int, base: SoftmaxAffineFit) -> _Seed:
    """Split the samples into slabs along the widest log-coordinate; fit each slab affinely."""
    y = data.log_x
    axis = int(np.argmax(np.ptp(y, axis=0)))
    order = np.argsort(y[:, axis], kind="stable")
    a = np.tile(base.a[0], (terms, 1))
    b = np.full(terms, base.b[0])
    for k, chunk in enumerate(np.array_split(order, terms)):
        design = np.column_stack([y[chunk], np.ones(len(chunk))])
        if len(chunk) < design.shape[1] or np.linalg.matrix_rank(design) < design.shape[1]:
            continue
        coeffs, *_ = np.linalg.lstsq(design, data.log_f[chunk], rcond=None)
        a[k], b[k] = coeffs[:-1], coeffs[-1]
    return _Seed(a, b, math.log(_INITIAL_ALPHA))


def _random_seed(
    rng: np.random.Generator, data: FitData, terms: int, base: SoftmaxAffineFit
) -> _Seed:
    spread = max(float(np.std(data.log_f)), 1e-3)
    scale = 1.0 / np.maximum(np.std(data.log_x, axis=0), 1e-6)
    a = base.a[0] + rng.normal(size=(terms, data.dimension)) * spread * scale
    b = base.b[0] + rng.normal(size=terms) * spread
    return _Seed(a, b, float(rng.uniform(0.0, math.log(20.0))))


def _extend_seed(previous: SoftmaxAffineFit) -> _Seed:
    """``previous`` plus a duplicate of its last term; represents the same function."""
    shift = math.log(2.0) / previous.alpha
    a = np.vstack([previous.a, previous.a[-1:]])
    b = np.concatenate([previous.b, previous.b[-1:]])
    b[-2:] -= shift
    return _Seed(a, b, math.log(previous.alpha))


def _padded(previous: SoftmaxAffineFit) -> SoftmaxAffineFit:
    seed = _extend_seed(previous)
    return attrs.evolve(previous, a=seed.a, b=seed.b)


def _refine(
    objective: _Objective, seed: _Seed
) -> tuple[float, float, np.ndarray, np.ndarray] | None:
    theta0 = objective.pack(seed)
    if not np.all(np.isfinite(objective.residuals(theta0))):
        return None
    method = "lm" if len(objective.g) >= len(theta0) else "trf"
    try:
        result = optimize.least_squares(
            objective.residuals,
            theta0,
            jac=objective.jacobian,
            method=method,
            x_scale="jac",
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
            max_nfev=200 * len(theta0),
        )
    except (ValueError, np.linalg.LinAlgError) as e:
        logger.debug("Fit restart failed: %s", e)
        return None
    alpha, a, b = objective.unpack(result.x)
    residual = objective.residuals(result.x)
    if not np.all(np.isfinite(residual)) or not math.isfinite(alpha) or alpha <= 0:
        return None
    return float(np.sqrt(np.mean(residual**2))), alpha, a.copy(), b.copy()


def _best_of(
    data: FitData,
    terms: int,
    seeds: list[_Seed],
    fixed_alpha: float | None,
) -> SoftmaxAffineFit:
    objective = _Objective(data, terms, fixed_alpha)
    results = concurrency.map_ordered(lambda seed: _refine(objective, seed), seeds)
    candidates = [(r[0], i, r) for i, r in enumerate(results) if r is not None]
    if not candidates:
        raise FitError(f"No fit restart converged for K={terms} ({len(seeds)} restarts)")
    rmse, index, (_, alpha, a, b) = min(candidates, key=lambda c: (c[0], c[1]))
    logger.debug("K=%d best restart %d of %d, rmse_log %.3e", terms, index, len(seeds), rmse)
    return SoftmaxAffineFit(alpha=alpha, a=a, b=b, rmse_log=rmse)


def fit_softmax_affine(
    data: FitData,
    K: int,
    restarts: int = _DEFAULT_RESTARTS,
    *,
    seed: int = 0,
    fixed_alpha: float | None = None,
) -> SoftmaxAffineFit:
    """Best-of-restarts softmax-affine fit with ``K`` terms.

    Fits for ``1..K`` terms are computed in turn and each one seeds the next
    with a duplicated term, so the returned error never exceeds that of a
    smaller ``K``. Restart selection is by (rmse, restart index).
    """
    if K < 1:
        raise ValueError(f"Term count must be at least 1, got {K}")
    if data.size < K + 2:
        raise FitError(f"Need at least {K + 2} samples for K={K}, got {data.size}")
    with utils.timer(f"softmax-affine fit (K={K}, {data.size} samples)"):
        best = _monomial_fit(data)
        if fixed_alpha is not None:
            best = attrs.evolve(best, alpha=fixed_alpha)
        rng = np.random.default_rng(seed)
        for terms in range(2, K + 1):
            seeds = [_extend_seed(best), _slab_seed(data, terms, best)]
            seeds += [_random_seed(rng, data, terms, best) for _ in range(max(restarts - 2, 0))]
            if fixed_alpha is not None:
                seeds = [attrs.evolve(s, log_alpha=math.log(fixed_alpha)) for s in seeds]
            candidate = _best_of(data, terms, seeds, fixed_alpha)
            if candidate.rmse_log > best.rmse_log + 1e-12:
                logger.warning(
                    "K=%d fit (%.3e) did not improve on K=%d (%.3e); keeping the smaller fit",
                    terms,
                    candidate.rmse_log,
                    terms - 1,
                    best.rmse_log,
                )
                best = _padded(best)
            else:
                best = candidate
    logger.info("Fitted K=%d surrogate, rmse_log %.3e", K, best.rmse_log)
    return best


def fit_posynomial_power(
    data: FitData,
    K: int,
    power_search: Iterable[float] | None = None,
    *,
    restarts: int = _DEFAULT_RESTARTS,
    seed: int = 0,
) -> PosynomialPowerFit:
    """Fit ``f^α ≥ Σ c_k Π x^(e_k)``.

    The power is free unless ``power_search`` lists candidate powers, in which
    case each is held fixed in turn and the lowest error wins.
    """
    if power_search is None:
        fits = [fit_softmax_affine(data, K, restarts, seed=seed)]
    else:
        fits = [
            fit_softmax_affine(data, K, restarts, seed=seed, fixed_alpha=float(power))
            for power in power_search
        ]
        if not fits:
            raise ValueError("power_search must not be empty")
    best = min(fits, key=lambda f: f.rmse_log)
    return PosynomialPowerFit(
        power=best.alpha,
        coefficients=np.exp(best.alpha * best.b),
        exponents=best.alpha * best.a,
        rmse_log=best.rmse_log,
    )
