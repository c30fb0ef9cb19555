"""Empirical coefficient tables for residual resistance and cell ageing."""

from __future__ import annotations

import enum
import functools
import math
import pathlib

import numpy as np
import pydantic

from zevrpp import toml_utils

COEFFICIENT_DIR = toml_utils.DATA_DIR / "coefficients"


class Provenance(enum.StrEnum):
    PAPER = "paper"
    ASSUMED = "assumed"


class _Table(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid", frozen=True)

    provenance: Provenance
    source: str


class ResistanceTable(_Table):
    omega: tuple[
        tuple[float, float, float],
        tuple[float, float, float],
        tuple[float, float, float],
    ]
    froude_range: tuple[float, float]
    theta: tuple[float, float, float]
    psi: tuple[float, float]
    kappa: tuple[float, float, float, float]

    @pydantic.field_validator("froude_range")
    @classmethod
    def _check_range(cls, value: tuple[float, float]) -> tuple[float, float]:
        if not 0 < value[0] < value[1]:
            raise ValueError("froude_range must satisfy 0 < low < high")
        return value

    def standard_coefficient(self, froude: np.ndarray | float, cb: float) -> np.ndarray:
        fr = np.asarray(froude, float)
        powers = np.stack([np.ones_like(fr), fr, fr**2])
        rows = np.asarray(self.omega) @ powers
        return np.asarray(rows[0] + cb * rows[1] + cb**2 * rows[2])

    def froude_critical(self, cb: float) -> float:
        t1, t2, t3 = self.theta
        return t1 + t2 * cb + t3 * cb**2

    def critical_factor(self, froude: np.ndarray | float, cb: float) -> np.ndarray:
        ratio = np.asarray(froude, float) / self.froude_critical(cb)
        return np.maximum(1.0, ratio**ratio)

    def length_factor(self, length: float) -> float:
        return self.psi[0] * length ** self.psi[1]


class DegradationTable(_Table):
    chi1: float = pydantic.Field(gt=0)
    chi2: float = pydantic.Field(ge=0)
    chi3: float = pydantic.Field(ge=0)
    chi4: float = pydantic.Field(ge=0)
    activation_energy: float
    gas_constant: float = pydantic.Field(gt=0)
    cell_temperature: float = pydantic.Field(gt=0)
    phi_max: float = pydantic.Field(gt=0)
    cell_capacity_ah: float = pydantic.Field(gt=0)
    cell_voltage: float = pydantic.Field(gt=0)

    @property
    def thermal_energy(self) -> float:
        """``R_G · T^c`` in J/mol."""
        return self.gas_constant * self.cell_temperature

    @property
    def xi(self) -> float:
        """Charge-level and activation factor at a mean normalized charge of 0.5."""
        return (self.chi2 + 0.5 * self.chi3) * math.exp(
            -self.activation_energy / self.thermal_energy
        )


@functools.cache
def load_resistance_table(path: pathlib.Path | None = None) -> ResistanceTable:
    return toml_utils.load(path or COEFFICIENT_DIR / "resistance.toml", ResistanceTable)


@functools.cache
def load_degradation_table(path: pathlib.Path | None = None) -> DegradationTable:
    return toml_utils.load(path or COEFFICIENT_DIR / "degradation.toml", DegradationTable)
