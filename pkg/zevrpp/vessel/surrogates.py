"""Log-convex surrogates used by the vessel model, and their persistence.

Three fits are needed:

* stability: a monomial in B/T for ``(KB + BM)/KB``;
* standard residual coefficient: a two-term softmax-affine fit in Fr;
* Froude-critical factor: a posynomial-power fit of ``ρ^ρ`` in ``ρ = Fr/Fr_crit``.
"""

from __future__ import annotations

import logging
import math
import pathlib
from typing import Any, Sequence

import attrs
import numpy as np
from scipy import optimize

from zevrpp import concurrency, json_utils, utils
from zevrpp.errors import FitError, ModelError
from zevrpp.gp import constraint, fit
from zevrpp.gp.constraint import Constraint
from zevrpp.gp.expression import Monomial, Posynomial
from zevrpp.gp.fit import FitData, PosynomialPowerFit, SoftmaxAffineFit
from zevrpp.vessel import hull
from zevrpp.vessel.coefficients import ResistanceTable
from zevrpp.vessel.hull import HullForm

logger = logging.getLogger(__name__)

STABILITY_RANGE = (2.5, 6.0)
CRITICAL_RATIO_RANGE = (1.0, 1.6)
_SAMPLES = 60

# Quoted posynomial-power bound in Fr, with Fr_crit folded into the coefficients.
QUOTED_CRITICAL_FROUDE = PosynomialPowerFit(
    power=0.02608,
    coefficients=np.array([0.1528, 0.9672]),
    exponents=np.array([[1.537], [-0.008538]]),
    rmse_log=math.nan,
)


def stability_data(form: HullForm, samples: int = _SAMPLES) -> FitData:
    ratios = np.linspace(*STABILITY_RANGE, samples)
    return FitData.from_function(lambda r: hull.stability_ratio(float(r[0]), form), ratios)


def standard_residual_data(
    table: ResistanceTable, block_coefficient: float, samples: int = _SAMPLES
) -> FitData:
    froude = np.linspace(*table.froude_range, samples)
    values = table.standard_coefficient(froude, block_coefficient)
    if np.any(values <= 0):
        raise FitError(
            f"Standard residual coefficient is not positive over Fr {table.froude_range} "
            f"at C_B={block_coefficient:.4f}"
        )
    return FitData(froude, values)


def critical_froude_data(samples: int = _SAMPLES) -> FitData:
    ratios = np.linspace(*CRITICAL_RATIO_RANGE, samples)
    return FitData(ratios, ratios**ratios)


def fit_stability(form: HullForm) -> SoftmaxAffineFit:
    return fit.fit_softmax_affine(stability_data(form), 1)


def fit_standard_residual(
    table: ResistanceTable, block_coefficient: float, *, terms: int = 2, seed: int = 0
) -> SoftmaxAffineFit:
    return fit.fit_softmax_affine(
        standard_residual_data(table, block_coefficient), terms, seed=seed
    )


def fit_critical_froude(*, terms: int = 2, seed: int = 0) -> PosynomialPowerFit:
    return fit.fit_posynomial_power(critical_froude_data(), terms, seed=seed)


def quoted_fit_error(froude_critical: float, samples: int = 201) -> float:
    """Largest log error of the quoted bound against ``ρ^ρ`` over the fit range."""
    ratios = np.linspace(*CRITICAL_RATIO_RANGE, samples)
    predicted = QUOTED_CRITICAL_FROUDE(ratios * froude_critical)
    return float(np.max(np.abs(np.log(predicted) - ratios * np.log(ratios))))


def calibrate_froude_scale(bounds: tuple[float, float] = (0.2, 0.4)) -> float:
    """The Fr_crit that best reconciles the quoted bound with ``ρ^ρ``."""
    result = optimize.minimize_scalar(quoted_fit_error, bounds=bounds, method="bounded")
    if not result.success:
        raise FitError(f"Froude scale calibration failed: {result.message}")
    logger.info(
        "Quoted critical-Froude bound matches ρ^ρ at Fr_crit=%.4f (max log error %.2e)",
        result.x,
        result.fun,
    )
    return float(result.x)


def monomial_of(surrogate: SoftmaxAffineFit, inputs: Sequence[Monomial]) -> Monomial:
    """A single-term fit evaluated on monomial inputs."""
    if surrogate.terms != 1:
        raise ModelError(f"Expected a monomial fit, got {surrogate.terms} terms")
    result = Monomial(math.exp(float(surrogate.b[0])))
    for x, e in zip(inputs, surrogate.a[0], strict=True):
        result = result * x ** float(e)
    return result


def _powered_terms(
    coefficients: Sequence[float], exponents: np.ndarray, inputs: Sequence[Monomial]
) -> Posynomial:
    terms = []
    for c, row in zip(coefficients, exponents):
        term = Monomial(float(c))
        for x, e in zip(inputs, row, strict=True):
            term = term * x ** float(e)
        terms.append(term)
    return Posynomial(terms)


def bound_constraint(
    surrogate: SoftmaxAffineFit | PosynomialPowerFit,
    inputs: Sequence[Monomial],
    bound: Monomial,
    label: str,
) -> Constraint:
    """``surrogate(inputs) ≤ bound`` written as a posynomial in the power domain."""
    if isinstance(surrogate, SoftmaxAffineFit):
        posy = _powered_terms(
            np.exp(surrogate.alpha * surrogate.b), surrogate.alpha * surrogate.a, inputs
        )
        power = surrogate.alpha
    else:
        posy = _powered_terms(surrogate.coefficients, surrogate.exponents, inputs)
        power = surrogate.power
    return constraint.le(posy, bound**power, label)


@attrs.frozen(eq=False)
class Surrogates:
    stability: SoftmaxAffineFit
    standard_residual: SoftmaxAffineFit
    critical_froude: PosynomialPowerFit
    froude_critical: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "stability": _softmax_to_dict(self.stability),
            "standard_residual": _softmax_to_dict(self.standard_residual),
            "critical_froude": {
                "power": self.critical_froude.power,
                "coefficients": self.critical_froude.coefficients,
                "exponents": self.critical_froude.exponents,
                "rmse_log": self.critical_froude.rmse_log,
            },
            "froude_critical": self.froude_critical,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Surrogates:
        try:
            critical = data["critical_froude"]
            return cls(
                stability=_softmax_from_dict(data["stability"]),
                standard_residual=_softmax_from_dict(data["standard_residual"]),
                critical_froude=PosynomialPowerFit(
                    power=float(critical["power"]),
                    coefficients=np.asarray(critical["coefficients"], float),
                    exponents=np.asarray(critical["exponents"], float),
                    rmse_log=float(critical["rmse_log"]),
                ),
                froude_critical=float(data["froude_critical"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ModelError(f"Malformed surrogate data: {e}") from e

    def write(self, path: pathlib.Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(json_utils.dumps_indented(self.to_dict()))


def _softmax_to_dict(surrogate: SoftmaxAffineFit) -> dict[str, Any]:
    return {
        "alpha": surrogate.alpha,
        "a": surrogate.a,
        "b": surrogate.b,
        "rmse_log": surrogate.rmse_log,
    }


def _softmax_from_dict(data: dict[str, Any]) -> SoftmaxAffineFit:
    return SoftmaxAffineFit(
        alpha=float(data["alpha"]),
        a=np.atleast_2d(np.asarray(data["a"], float)),
        b=np.asarray(data["b"], float),
        rmse_log=float(data["rmse_log"]),
    )


def read_surrogates(path: pathlib.Path) -> Surrogates:
    try:
        data = json_utils.loads(path.read_bytes())
    except FileNotFoundError as e:
        raise ModelError(f"Surrogate file not found: {path}") from e
    return Surrogates.from_dict(data)


@concurrency.threadsafe_cache
def build_surrogates(form: HullForm, table: ResistanceTable) -> Surrogates:
    """Fit every surrogate for one hull form; memoized per (form, table)."""
    with utils.timer(f"surrogate fits (β={form.beta:g}, {form.aft_reading})"):
        cb = form.block_coefficient
        surrogates = Surrogates(
            stability=fit_stability(form),
            standard_residual=fit_standard_residual(table, cb),
            critical_froude=fit_critical_froude(),
            froude_critical=table.froude_critical(cb),
        )
    logger.info(
        "Surrogate rmse_log: stability %.2e, standard residual %.2e, critical Froude %.2e",
        surrogates.stability.rmse_log,
        surrogates.standard_residual.rmse_log,
        surrogates.critical_froude.rmse_log,
    )
    return surrogates
