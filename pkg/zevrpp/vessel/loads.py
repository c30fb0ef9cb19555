"""Still-water load, shear and bending distributions along the hull.

Distributions are per metre in tonnes; shear is in tonnes and bending in
tonne-metres, measured from the bow.
"""

from __future__ import annotations

import csv
import logging
import pathlib
from typing import Sequence

import attrs
import numpy as np
from scipy import integrate

from zevrpp.vessel import hull
from zevrpp.vessel.hull import HullDimensions

logger = logging.getLogger(__name__)

_CLOSURE_WARNING = 0.01


@attrs.frozen(eq=False)
class LoadDistribution:
    stations: np.ndarray
    weight: np.ndarray
    buoyancy: np.ndarray
    shear: np.ndarray
    moment: np.ndarray

    @property
    def closure_error(self) -> float:
        """End shear and moment relative to their peaks; zero for a balanced ship."""
        shear_peak = float(np.max(np.abs(self.shear))) or 1.0
        moment_peak = float(np.max(np.abs(self.moment))) or 1.0
        return max(abs(self.shear[-1]) / shear_peak, abs(self.moment[-1]) / moment_peak)

    @property
    def max_moment(self) -> float:
        return float(np.max(np.abs(self.moment)))

    def write_csv(self, path: pathlib.Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["station_m", "weight_t_per_m", "buoyancy_t_per_m", "shear_t", "moment_tm"])
            for row in zip(self.stations, self.weight, self.buoyancy, self.shear, self.moment):
                writer.writerow([f"{v:.6g}" for v in row])


def integrate_loads(
    stations: np.ndarray | Sequence[float],
    weight: np.ndarray | Sequence[float],
    buoyancy: np.ndarray | Sequence[float],
) -> LoadDistribution:
    """Shear and moment by trapezoidal integration of ``weight − buoyancy`` from the bow."""
    y = np.asarray(stations, float)
    w = np.asarray(weight, float)
    b = np.asarray(buoyancy, float)
    if not (y.shape == w.shape == b.shape) or y.ndim != 1 or y.size < 2:
        raise ValueError("Stations, weight and buoyancy must be 1-D arrays of equal length ≥ 2")
    if np.any(np.diff(y) <= 0):
        raise ValueError("Stations must be strictly increasing")
    shear = integrate.cumulative_trapezoid(w - b, y, initial=0.0)
    moment = integrate.cumulative_trapezoid(shear, y, initial=0.0)
    distribution = LoadDistribution(y, w, b, shear, moment)
    if distribution.closure_error > _CLOSURE_WARNING:
        logger.warning(
            "Load distribution does not close: end shear/moment at %.2f%% of peak",
            100 * distribution.closure_error,
        )
    return distribution


@attrs.frozen
class WeightBlock:
    """Mass ``weight`` (t) spread evenly over ``[start, end]`` metres from the bow."""

    name: str
    weight: float
    start: float
    end: float

    def __attrs_post_init__(self) -> None:
        if not (self.weight >= 0 and self.start < self.end):
            raise ValueError(f"Invalid weight block {self}")


def section_area(y: float, dims: HullDimensions) -> float:
    """Immersed transverse section area at ``y`` metres from the bow."""
    L, B, T, beta = dims.length, dims.breadth, dims.draught, dims.form.beta
    if y <= L / 2:
        return B * T * beta / (beta + 1) * np.sqrt(2 * y / L)
    s = 1 - 2 * (y - L / 2) / L
    if dims.form.aft_reading is hull.AftReading.SCALED:
        return B * T * beta / (beta + s)
    return B * T * beta * s / (beta * s + 1)


def stillwater_distribution(
    dims: HullDimensions,
    blocks: Sequence[WeightBlock],
    *,
    water_density: float = 1.025,
    stations: int = 801,
) -> LoadDistribution:
    """Float the ship on its block weights.

    Blocks are scaled to the displacement and the remaining trimming moment
    is removed by a zero-force linear correction about the mean station.
    """
    if not blocks:
        raise ValueError("At least one weight block is needed")
    y = np.linspace(0.0, dims.length, stations)
    buoyancy = water_density * np.array([section_area(v, dims) for v in y])
    weight = np.zeros_like(y)
    for block in blocks:
        inside = (y >= block.start) & (y <= block.end)
        weight[inside] += block.weight / (block.end - block.start)
    total = integrate.trapezoid(weight, y)
    if total <= 0:
        raise ValueError("Weight blocks carry no weight")
    weight *= integrate.trapezoid(buoyancy, y) / total
    centre = integrate.trapezoid(y, y) / integrate.trapezoid(np.ones_like(y), y)
    lever = y - centre
    deficit = integrate.trapezoid((buoyancy - weight) * y, y)
    weight += deficit / integrate.trapezoid(lever * y, y) * lever
    if np.any(weight < 0):
        logger.warning("Trim correction makes the weight curve negative near the ends")
    return integrate_loads(y, weight, buoyancy)
