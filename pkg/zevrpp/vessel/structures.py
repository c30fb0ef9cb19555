"""Midship girder section, rule design loads and strength constraints.

The section is idealized from six plate groups, all scaled by the top-deck
thickness ``p``. Section coefficients are carried as exact fractions; with
unit breadth, depth and thickness they give the neutral axis at ``2D/5`` and
the inertia ``133/150 · p B D²``.
"""

from __future__ import annotations

import math
from fractions import Fraction

import attrs
import numpy as np

from zevrpp.gp import constraint
from zevrpp.gp.constraint import Constraint
from zevrpp.gp.expression import Monomial, Variable
from zevrpp.vessel.hull import HullVars

SIDE_PLATE_RATIO = Fraction(1, 2)
"""Side plate thickness is ``B p / (2 D)``."""

STILLWATER_COEFFICIENT = 0.0472
WAVE_COEFFICIENT = 0.975
SAGGING_FACTOR = -1.1
WAVE_SHEAR_FACTOR_RANGE = (-0.92, 1.0)
WAVE_SHEAR_COEFFICIENT = 0.3
# Sinusoidal still-water moment: V(0.3L) = κ_V M_sw / L.
SHEAR_SHAPE = math.pi * math.cos(0.3 * math.pi)


@attrs.frozen
class SectionElement:
    """One plate group; ``area`` in units of ``B p`` and ``height`` in units of ``D``."""

    name: str
    count: int
    area: Fraction
    z: Fraction
    height: Fraction = Fraction(0)

    @property
    def own_inertia(self) -> Fraction:
        """Vertical plates only, in units of ``B p D²``."""
        return self.count * self.area * self.height**2 / 12


MIDSHIP_ELEMENTS = (
    SectionElement("bottom", 1, Fraction(3, 2), Fraction(0)),
    SectionElement("inner_bottom", 1, Fraction(1), Fraction(1, 10)),
    SectionElement("roro_deck", 1, Fraction(1), Fraction(1, 2)),
    SectionElement("top_deck", 1, Fraction(1), Fraction(1)),
    SectionElement("side_plate", 2, SIDE_PLATE_RATIO, Fraction(1, 2), Fraction(1)),
    SectionElement("bulkhead", 1, Fraction(1), Fraction(1, 2), Fraction(1)),
)


def neutral_axis_fraction() -> Fraction:
    area = sum(e.count * e.area for e in MIDSHIP_ELEMENTS)
    moment = sum(e.count * e.area * e.z for e in MIDSHIP_ELEMENTS)
    return Fraction(moment) / area


def inertia_coefficient() -> Fraction:
    z_na = neutral_axis_fraction()
    return sum(
        (e.count * e.area * (e.z - z_na) ** 2 + e.own_inertia for e in MIDSHIP_ELEMENTS),
        Fraction(0),
    )


@attrs.frozen
class ShearSegment:
    """Plate run ``start → end``; ``length_thickness`` in units of ``B p``."""

    start: str
    end: str
    length_thickness: Fraction
    z_start: Fraction
    z_end: Fraction
    inflow: tuple[str, ...]


# Open ends at the deck centrelines carry no flow.
SHEAR_SEGMENTS = (
    ShearSegment("A", "B", Fraction(1, 4), Fraction(1), Fraction(1), ("A",)),
    ShearSegment("B", "D", Fraction(1, 4), Fraction(1), Fraction(1, 2), ("B",)),
    ShearSegment("C", "D'", Fraction(1, 4), Fraction(1, 2), Fraction(1, 2), ("C",)),
    ShearSegment("D", "E", Fraction(1, 20), Fraction(1, 2), Fraction(2, 5), ("D", "D'")),
)


def shear_flow_chain() -> dict[str, Fraction]:
    """Shear flow at every node per unit shear force, in units of ``B p D / I``."""
    z_na = neutral_axis_fraction()
    flows: dict[str, Fraction] = {"A": Fraction(0), "C": Fraction(0)}
    for s in SHEAR_SEGMENTS:
        incoming = sum((flows[n] for n in s.inflow), Fraction(0))
        flows[s.end] = incoming - s.length_thickness / 2 * (s.z_start + s.z_end - 2 * z_na)
    return flows


def max_shear_flow_coefficient() -> Fraction:
    """``|q_E|`` in units of ``B p D / I``; 53/200."""
    return abs(shear_flow_chain()["E"])


@attrs.frozen
class GirderSection:
    breadth: Variable
    depth: Variable
    deck_plate: Variable

    @property
    def side_plate(self) -> Monomial:
        return float(SIDE_PLATE_RATIO) * self.breadth * self.deck_plate / self.depth

    @property
    def bulkhead_plate(self) -> Monomial:
        return 2 * self.side_plate

    @property
    def bottom_plate(self) -> Monomial:
        return (2 / 3) * self.deck_plate.as_monomial()

    @property
    def neutral_axis(self) -> Monomial:
        return float(neutral_axis_fraction()) * self.depth.as_monomial()

    @property
    def inertia(self) -> Monomial:
        return float(inertia_coefficient()) * self.deck_plate * self.breadth * self.depth**2

    @property
    def deck_modulus(self) -> Monomial:
        return self.inertia / (self.depth.as_monomial() * (1 - float(neutral_axis_fraction())))

    def shear_stress_per_force(self) -> Monomial:
        """Peak shear stress at the neutral axis per unit shear force."""
        return shear_flow_max(self) / self.side_plate


def section_properties(section: GirderSection) -> tuple[Monomial, Monomial, Monomial]:
    """Neutral axis height, second moment of area and deck section modulus."""
    return section.neutral_axis, section.inertia, section.deck_modulus


def shear_flow_max(section: GirderSection) -> Monomial:
    """Peak shear flow per unit shear force, at the neutral axis of the side shell."""
    return (
        float(max_shear_flow_coefficient())
        * section.breadth
        * section.deck_plate
        * section.depth
        / section.inertia
    )


@attrs.frozen
class DesignLoads:
    bending: Monomial
    shear: Monomial


def hogging_factor(block_coefficient: float) -> float:
    return 1.9 * block_coefficient / (block_coefficient + 0.7)


def rule_stillwater_moment(length: float, breadth: float, block_coefficient: float) -> float:
    return STILLWATER_COEFFICIENT * length**2 * breadth * (block_coefficient + 0.7)


def design_loads(hull: HullVars, load_scale: float) -> DesignLoads:
    """Worst of hogging and sagging, still water plus wave, times ``load_scale``."""
    cb = hull.form.block_coefficient
    wave = max(abs(SAGGING_FACTOR), hogging_factor(cb))
    shear_wave = max(abs(f) for f in WAVE_SHEAR_FACTOR_RANGE)
    fullness = load_scale * (cb + 0.7)
    L, B = hull.length, hull.breadth
    bending = (STILLWATER_COEFFICIENT + WAVE_COEFFICIENT * wave) * fullness * L**2 * B
    shear = (
        SHEAR_SHAPE * STILLWATER_COEFFICIENT + WAVE_SHEAR_COEFFICIENT * shear_wave
    ) * fullness * L * B
    return DesignLoads(bending, shear)


def strength_constraints(
    section: GirderSection,
    loads: DesignLoads,
    allowable_bending: float,
    allowable_shear: float,
) -> list[Constraint]:
    return [
        constraint.le(
            loads.bending / section.deck_modulus, allowable_bending, "Structures:bending"
        ),
        constraint.le(
            loads.shear * section.shear_stress_per_force(),
            allowable_shear,
            "Structures:shear",
        ),
    ]


def section_properties_oracle(
    breadth: float, depth: float, thickness: float
) -> tuple[float, float]:
    """Neutral axis height and inertia from element rectangles, own inertia included."""
    side = breadth * thickness / (2 * depth)
    # (count, width, height, centroid z)
    rects = np.array(
        [
            (1, breadth, 1.5 * thickness, 0.0),
            (1, breadth, thickness, depth / 10),
            (1, breadth, thickness, depth / 2),
            (1, breadth, thickness, depth),
            (2, side, depth, depth / 2),
            (1, 2 * side, depth, depth / 2),
        ]
    )
    count, width, height, z = rects.T
    area = count * width * height
    z_na = float(np.sum(area * z) / np.sum(area))
    inertia = float(np.sum(area * (z - z_na) ** 2 + count * width * height**3 / 12))
    return z_na, inertia


def shear_flow_oracle(breadth: float, depth: float, thickness: float) -> float:
    """``|q_E|`` per unit shear force from first moments of the upstream plate runs."""
    z_na, inertia = section_properties_oracle(breadth, depth, thickness)
    side = breadth * thickness / (2 * depth)
    # (length, thickness, centroid z)
    runs = [
        (breadth / 4, thickness, depth),
        (depth / 2, side, 0.75 * depth),
        (breadth / 4, thickness, depth / 2),
        (depth / 10, side, 0.45 * depth),
    ]
    return abs(sum(l * t * (z - z_na) for l, t, z in runs)) / inertia
