"""Parametric hull form: offsets, hydrostatics, stability and wetted area.

The hull is symmetric about the centreplane. The fore body (bow to midship)
narrows with the square root of the distance from the bow; the aft body keeps
the full breadth at the waterline and sharpens towards the keel as it nears
the stern. ``β`` controls the fullness of every section.

Closed forms are used in the optimization model; the ``*_oracle`` functions
integrate the offsets numerically and are what tests and verification compare
against.
"""

from __future__ import annotations

import enum
import logging
import math
from typing import Literal, Sequence

import attrs
from scipy import integrate

from zevrpp import concurrency
from zevrpp.errors import ModelError
from zevrpp.gp import constraint
from zevrpp.gp.constraint import Constraint
from zevrpp.gp.expression import Monomial, Posynomial, Variable, posy_sum

logger = logging.getLogger(__name__)

SIMPSON_WEIGHTS = (1.0, 3.0, 3.0, 1.0)
_CENTROID_AGREEMENT = 1e-6
_QUAD_OPTIONS = {"epsabs": 1e-13, "epsrel": 1e-11, "limit": 200}


class AftReading(enum.StrEnum):
    """How the aft exponent varies from midship (``s = 1``) to the stern (``s → 0``).

    ``ratio``: ``(z/T)^(1/(β s))``, the section pinches to the keel at the stern.
    ``scaled``: ``(z/T)^(s/β)``, the section widens to a full transom.
    """

    RATIO = "ratio"
    SCALED = "scaled"


def _positive(instance: object, attribute: attrs.Attribute[float], value: float) -> None:
    if not value > 0:
        raise ValueError(f"{attribute.name} must be positive, got {value}")


@attrs.frozen
class HullForm:
    beta: float = attrs.field(converter=float)
    aft_reading: AftReading = attrs.field(default=AftReading.RATIO, converter=AftReading)

    @beta.validator
    def _check_beta(self, attribute: attrs.Attribute[float], value: float) -> None:
        if not value >= 1:
            raise ModelError(f"Hull fullness β must be at least 1, got {value}")

    @property
    def block_coefficient(self) -> float:
        return block_coefficient(self.beta, self.aft_reading)

    @property
    def kb_fraction(self) -> float:
        return kb_fraction(self.beta, self.aft_reading)

    @property
    def lcb_fraction(self) -> float:
        return lcb_fraction(self.beta, self.aft_reading)


@attrs.frozen
class HullDimensions:
    length: float = attrs.field(converter=float, validator=_positive)
    breadth: float = attrs.field(converter=float, validator=_positive)
    draught: float = attrs.field(converter=float, validator=_positive)
    depth: float = attrs.field(converter=float, validator=_positive)
    form: HullForm = attrs.field(factory=lambda: HullForm(6.0))

    @property
    def displacement_volume(self) -> float:
        return self.form.block_coefficient * self.length * self.breadth * self.draught


@attrs.frozen
class HullVars:
    """Symbolic main dimensions with a fixed hull form."""

    length: Variable
    breadth: Variable
    draught: Variable
    depth: Variable
    form: HullForm

    def dimensions(self, values: dict[Variable, float]) -> HullDimensions:
        return HullDimensions(
            values[self.length],
            values[self.breadth],
            values[self.draught],
            values[self.depth],
            self.form,
        )


def _fore_shape(eta: float, zeta: float, beta: float) -> float:
    return math.sqrt(2 * eta) * zeta ** (1 / beta)


def _aft_shape(eta: float, zeta: float, beta: float, reading: AftReading) -> float:
    s = 1 - 2 * eta
    if reading is AftReading.SCALED:
        return float(zeta ** (s / beta))
    if s <= 0:
        return 1.0 if zeta >= 1 else 0.0
    exponent = 1 / (beta * s)
    # Underflows cleanly to zero near the stern.
    return float(zeta**exponent) if zeta > 0 else 0.0


def offset(
    section: Literal["fore", "aft"], y: float, z: float, hull: HullDimensions
) -> float:
    """Half-breadth at distance ``y`` from the bow (fore) or from midship (aft).

    ``y`` is in ``[0, L/2]``, the aft stern end excluded; ``z`` in ``[0, T]``.
    """
    L, B, T = hull.length, hull.breadth, hull.draught
    if not 0 <= z <= T:
        raise ValueError(f"z must lie in [0, T={T}], got {z}")
    if section == "fore":
        if not 0 <= y <= L / 2:
            raise ValueError(f"Fore y must lie in [0, L/2={L / 2}], got {y}")
        return B / 2 * _fore_shape(y / L, z / T, hull.form.beta)
    if section == "aft":
        if not 0 <= y < L / 2:
            raise ValueError(f"Aft y must lie in [0, L/2={L / 2}), got {y}")
        return B / 2 * _aft_shape(y / L, z / T, hull.form.beta, hull.form.aft_reading)
    raise ValueError(f"Unknown section {section!r}")


# Hydrostatics on the unit hull (L = B = T = 1): both sides together give a
# local breadth of ``shape(η, ζ)``.


def block_coefficient(beta: float, reading: AftReading = AftReading.RATIO) -> float:
    fore = beta / (3 * (beta + 1))
    if reading is AftReading.SCALED:
        return fore + beta / 2 * math.log((beta + 1) / beta)
    return fore + 0.5 - math.log(beta + 1) / (2 * beta)


def kb_fraction_closed_form(beta: float) -> float:
    """KB/T for the ratio reading."""
    num = beta / (3 * (2 * beta + 1)) + 0.25 - math.log(2 * beta + 1) / (8 * beta)
    return num / block_coefficient(beta, AftReading.RATIO)


def lcb_fraction_closed_form(beta: float) -> float:
    """LCB/L measured from the bow, for the ratio reading."""
    aft_area = 1 - math.log(beta + 1) / beta
    aft_moment = (2 * aft_area - 0.5 + aft_area / beta) / 4
    fore_moment = beta / (10 * (beta + 1))
    return (fore_moment + aft_moment) / block_coefficient(beta, AftReading.RATIO)


def lcb_fraction_printed(beta: float) -> float:
    """The commonly quoted LCB closed form; it omits a factor of one half."""
    ln = math.log(beta + 1)
    num = 2 * beta**3 / (5 * (beta + 1)) + 1.5 * beta**2 + beta - (2 * beta + 1) * ln
    den = 2 * beta**3 / (3 * (beta + 1)) + beta**2 - beta * ln
    return num / den


def _hull_moment(beta: float, reading: AftReading, weight: str) -> float:
    def fore(zeta: float, eta: float) -> float:
        value = _fore_shape(eta, zeta, beta)
        if weight == "z":
            return zeta * value
        if weight == "y":
            return eta * value
        return value

    def aft(zeta: float, eta: float) -> float:
        value = _aft_shape(eta, zeta, beta, reading)
        if weight == "z":
            return zeta * value
        if weight == "y":
            return (0.5 + eta) * value
        return value

    total = 0.0
    for part in (fore, aft):
        value, _ = integrate.dblquad(
            part, 0.0, 0.5, 0.0, 1.0, epsabs=1e-13, epsrel=1e-11
        )
        total += value
    return total


@concurrency.threadsafe_cache
def block_coefficient_oracle(beta: float, reading: AftReading = AftReading.RATIO) -> float:
    return _hull_moment(beta, reading, "volume")


def _report_centroid(name: str, beta: float, oracle: float, closed: float) -> None:
    delta = abs(oracle - closed)
    if delta > _CENTROID_AGREEMENT:
        logger.warning(
            "%s closed form %.6f differs from quadrature %.6f at β=%g (Δ=%.3e)",
            name,
            closed,
            oracle,
            beta,
            delta,
        )
    else:
        logger.debug("%s closed form agrees with quadrature at β=%g (Δ=%.1e)", name, beta, delta)


@concurrency.threadsafe_cache
def kb_fraction(beta: float, reading: AftReading = AftReading.RATIO) -> float:
    """Vertical centre of buoyancy over draught, by quadrature."""
    value = _hull_moment(beta, reading, "z") / block_coefficient_oracle(beta, reading)
    if reading is AftReading.RATIO:
        _report_centroid("KB/T", beta, value, kb_fraction_closed_form(beta))
    return value


@concurrency.threadsafe_cache
def lcb_fraction(beta: float, reading: AftReading = AftReading.RATIO) -> float:
    """Longitudinal centre of buoyancy from the bow over length, by quadrature."""
    value = _hull_moment(beta, reading, "y") / block_coefficient_oracle(beta, reading)
    if reading is AftReading.RATIO:
        _report_centroid("LCB/L", beta, value, lcb_fraction_closed_form(beta))
        logger.info(
            "Quoted LCB/L formula gives %.6f against %.6f by quadrature at β=%g",
            lcb_fraction_printed(beta),
            value,
            beta,
        )
    return value


def waterplane_inertia(length: float, breadth: float) -> float:
    """Transverse waterplane second moment; independent of ``β``."""
    return 7 * length * breadth**3 / 120


def waterplane_inertia_oracle(hull: HullDimensions) -> float:
    L, T = hull.length, hull.draught

    def cubed(y: float) -> float:
        if y <= L / 2:
            return offset("fore", y, T, hull) ** 3
        return offset("aft", min(y - L / 2, L / 2 * (1 - 1e-15)), T, hull) ** 3

    value, _ = integrate.quad(cubed, 0.0, L, points=[L / 2], **_QUAD_OPTIONS)
    return 2 / 3 * value


def metacentric_radius(hull: HullDimensions) -> float:
    """BM = I_wp / ∇."""
    B, T = hull.breadth, hull.draught
    return 7 * B**2 / (120 * hull.form.block_coefficient * T)


def stability_ratio(breadth_draught: float, form: HullForm) -> float:
    """``(KB + BM) / KB`` as a function of B/T; the target of the stability fit."""
    return 1 + 7 * breadth_draught**2 / (120 * form.block_coefficient * form.kb_fraction)


def displacement_volume(hull: HullVars) -> Monomial:
    return hull.form.block_coefficient * hull.length * hull.breadth * hull.draught


def bm_and_stability_constraint(
    hull: HullVars,
    ratio_fit: Monomial,
    kg_ratio: float,
    gm_margin: float,
) -> Constraint:
    """``KB · fit(B/T) ≥ GM_min + KG`` with ``KG = kg_ratio · D``.

    ``ratio_fit`` is the monomial surrogate of :func:`stability_ratio`
    already expressed in the hull variables.
    """
    required = Posynomial((Monomial(gm_margin), kg_ratio * hull.depth))
    available = hull.form.kb_fraction * hull.draught * ratio_fit
    return constraint.le(required, available, "Hydrostatics:stability")


def midship_arc_simpson(breadth: float, height: float, beta: float) -> float:
    """Girth of one side of the midship section from keel to ``height``."""
    return (breadth / 16) * sum(
        w * math.sqrt(1 + _gauge_coefficient(k, beta) * (height / breadth) ** 2)
        for k, w in enumerate(SIMPSON_WEIGHTS)
    )


def midship_arc_oracle(breadth: float, height: float, beta: float) -> float:
    scale = (2 / breadth) ** (2 * beta) * (height * beta) ** 2

    def integrand(x: float) -> float:
        return math.sqrt(1 + scale * x ** (2 * beta - 2))

    value, _ = integrate.quad(integrand, 0.0, breadth / 2, **_QUAD_OPTIONS)
    return value


def _gauge_coefficient(k: int, beta: float) -> float:
    # 0.0 ** 0.0 == 1.0 keeps the β = 1 slope at the keel.
    return 4 * beta**2 * (k / 3) ** (2 * beta - 2)


def simpson_arc(
    breadth: Variable,
    height: Variable,
    beta: float,
    gauges: Sequence[Variable],
    label: str,
) -> tuple[list[Constraint], Posynomial]:
    """Gauge constraints and the Simpson girth ``(B/16) Σ S_k √r_k``.

    Each gauge satisfies ``r_k ≥ 1 + c_k (height/B)²``; the girth is exact
    whenever the gauges are tight.
    """
    if len(gauges) != len(SIMPSON_WEIGHTS):
        raise ModelError(f"Simpson girth needs {len(SIMPSON_WEIGHTS)} gauges, got {len(gauges)}")
    constraints: list[Constraint] = []
    for k, gauge in enumerate(gauges):
        c = _gauge_coefficient(k, beta)
        if c == 0:
            constraints.append(constraint.MonoGE(gauge.as_monomial(), 1.0, f"{label}:gauge{k}"))
            continue
        slope = c * height**2 * breadth**-2
        constraints.append(
            constraint.le(Posynomial((Monomial(1.0), slope)), gauge, f"{label}:gauge{k}")
        )
    arc = posy_sum(
        (w / 16) * breadth * gauge**0.5 for w, gauge in zip(SIMPSON_WEIGHTS, gauges)
    )
    return constraints, arc


def wetted_area_constraints(
    hull: HullVars,
    area: Variable,
    gauges: Sequence[Variable],
    area_factor: float,
) -> list[Constraint]:
    """``A_S ≥ 2 φ_A L · girth(T)``."""
    constraints, arc = simpson_arc(
        hull.breadth, hull.draught, hull.form.beta, gauges, "Hydrodynamics:wetted"
    )
    wetted = arc.scaled(2 * area_factor * hull.length)
    constraints.append(constraint.le(wetted, area, "Hydrodynamics:wetted_area"))
    return constraints


def gross_tonnage(enclosed_volume: float) -> float:
    return (0.2 + 0.02 * math.log10(enclosed_volume)) * enclosed_volume


def gross_tonnage_approx(enclosed_volume: float, anchor: float = 1e5) -> float:
    """Posynomial form of :func:`gross_tonnage`, tangent in log space at ``anchor``."""
    exponent = 1 / (math.log10(anchor) * math.log(10))
    return 0.2 * enclosed_volume + 0.02 * math.log10(anchor) * enclosed_volume * (
        enclosed_volume / anchor
    ) ** exponent


def gross_tonnage_posynomial(enclosed_volume: Variable, anchor: float = 1e5) -> Posynomial:
    exponent = 1 / (math.log10(anchor) * math.log(10))
    return Posynomial(
        (
            0.2 * enclosed_volume.as_monomial(),
            Monomial(
                0.02 * math.log10(anchor) * anchor**-exponent,
                ((enclosed_volume, 1 + exponent),),
            ),
        )
    )
