"""Scenario files: ports, distances, demand, cases and parameter overrides.

A scenario is TOML validated by pydantic; every value is given in maritime
units (knots, nautical miles, hours, MWh, MW, EUR) and converted to SI here,
through :data:`UNIT_SCALE`. Model parameters default to
``data/parameters.toml``; a scenario's ``[parameters.<section>.<name>]``
tables override any of them.
"""

from __future__ import annotations

import enum
import logging
import pathlib
from typing import Any, Mapping

import attrs
import pydantic

from zevrpp import network, toml_utils
from zevrpp.errors import ModelError, ScenarioError
from zevrpp.gp.problem import BnbConfig, Tolerances
from zevrpp.network import Arc, Cargo, Demand, RoutePlan, Service
from zevrpp.vessel.coefficients import Provenance
from zevrpp.vessel.hull import AftReading

logger = logging.getLogger(__name__)

PARAMETERS_PATH = toml_utils.DATA_DIR / "parameters.toml"
SCENARIO_DIR = toml_utils.DATA_DIR / "scenarios"

KNOT = 1852 / 3600
NAUTICAL_MILE = 1852.0
MWH = 3.6e9
MW = 1e6

UNIT_SCALE: Mapping[str, float] = {
    "": 1.0,
    "m": 1.0,
    "m/s2": 1.0,
    "m2/s": 1.0,
    "m2/pax": 1.0,
    "m2/lm": 1.0,
    "MPa": 1.0,
    "t/m3": 1.0,
    "yr": 1.0,
    "EUR": 1.0,
    "EUR/t": 1.0,
    "EUR/GT": 1.0,
    "EUR/kpax": 1.0,
    "kn": KNOT,
    "nm": NAUTICAL_MILE,
    "h": 3600.0,
    "h/kpax": 3600.0,
    "h/klm": 3600.0,
    "MWh": MWH,
    "MW": MW,
    "m3/MWh": 1 / MWH,
    "t/MWh": 1 / MWH,
    "t/MW": 1 / MW,
    "EUR/MWh": 1 / MWH,
    "EUR/MW": 1 / MW,
}


class FleetMode(enum.StrEnum):
    BASELINE = "baseline"
    UNIFORM = "uniform"
    MIXED = "mixed"


class _Strict(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid", frozen=True)


class Param(_Strict):
    value: float
    provenance: Provenance
    unit: str = ""

    @pydantic.field_validator("unit")
    @classmethod
    def _known_unit(cls, value: str) -> str:
        if value not in UNIT_SCALE:
            raise ValueError(f"unknown unit {value!r}")
        return value

    @property
    def si(self) -> float:
        return self.value * UNIT_SCALE[self.unit]


class PortSpec(_Strict):
    id: int = pydantic.Field(ge=1)
    name: str
    port_charge: float = pydantic.Field(ge=0)
    """EUR per gross ton and call."""
    electricity_price: float = pydantic.Field(ge=0)
    """EUR per MWh."""
    provenance: Provenance = Provenance.ASSUMED


class DemandSpec(_Strict):
    """Demand per planning horizon, in thousands of passengers and lane-metres."""

    origin: int
    destination: int
    pax: float = pydantic.Field(ge=0)
    roro: float = pydantic.Field(ge=0)
    provenance: Provenance = Provenance.ASSUMED


class BaselinePin(_Strict):
    route: tuple[int, ...]
    frequency: int = pydantic.Field(ge=1)
    fleet_size: int = pydantic.Field(ge=1)
    length: float = pydantic.Field(gt=0)
    superstructure_length: float = pydantic.Field(gt=0)


class CaseSpec(_Strict):
    mode: FleetMode
    routes: tuple[tuple[int, ...], ...] = pydantic.Field(min_length=1)
    baseline: tuple[BaselinePin, ...] = ()
    description: str = ""


class OptionsSpec(_Strict):
    aft_reading: AftReading = AftReading.RATIO
    include_freshwater: bool = True
    room_count: int = pydantic.Field(default=3, ge=1)


class SolverSpec(_Strict):
    integer_upper: int = pydantic.Field(default=16, ge=1)
    upper_bounds: dict[str, int] = pydantic.Field(default_factory=dict)
    node_limit: int = pydantic.Field(default=5000, ge=1)
    relative_gap: float = pydantic.Field(default=1e-6, gt=0)
    max_newton: int = pydantic.Field(default=200, ge=1)
    max_outer: int = pydantic.Field(default=80, ge=1)


class ScenarioFile(_Strict):
    name: str
    description: str = ""
    ports: tuple[PortSpec, ...] = pydantic.Field(min_length=2)
    distances: dict[str, float]
    demand: tuple[DemandSpec, ...]
    cases: dict[str, CaseSpec] = pydantic.Field(min_length=1)
    parameters: dict[str, dict[str, Param]] = pydantic.Field(default_factory=dict)
    options: OptionsSpec = OptionsSpec()
    solver: SolverSpec = SolverSpec()


class _ParameterFile(pydantic.RootModel[dict[str, dict[str, Param]]]):
    pass


@attrs.frozen
class ParameterSet:
    """Parameters keyed ``section.name``, values in the units they were given in."""

    values: Mapping[str, Param]

    def __getitem__(self, path: str) -> Param:
        try:
            return self.values[path]
        except KeyError:
            raise ModelError(f"Unknown parameter '{path}'") from None

    def si(self, path: str) -> float:
        return self[path].si

    def with_value(self, path: str, value: float) -> ParameterSet:
        param = self[path]
        updated = param.model_copy(update={"value": float(value)})
        return ParameterSet({**self.values, path: updated})


def load_parameters(path: pathlib.Path = PARAMETERS_PATH) -> ParameterSet:
    sections = toml_utils.load(path, _ParameterFile).root
    return ParameterSet(
        {f"{section}.{name}": p for section, params in sections.items() for name, p in params.items()}
    )


@attrs.frozen
class Port:
    id: int
    name: str
    port_charge: float
    """EUR per gross ton and call."""
    electricity_price: float
    """EUR per J."""


@attrs.frozen
class Case:
    id: str
    mode: FleetMode
    plan: RoutePlan
    baseline: Mapping[str, BaselinePin] = attrs.field(factory=dict)
    description: str = ""


@attrs.frozen
class ModelOptions:
    aft_reading: AftReading = AftReading.RATIO
    include_freshwater: bool = True
    room_count: int = 3


@attrs.frozen(eq=False)
class Scenario:
    name: str
    source: str
    ports: tuple[Port, ...]
    distances: Mapping[Arc, float]
    """Metres, keyed ``(low, high)``."""
    base_demand: Demand
    cases: Mapping[str, Case]
    parameters: ParameterSet
    options: ModelOptions = ModelOptions()
    tolerances: Tolerances = Tolerances()
    bnb_config: BnbConfig = BnbConfig()

    @property
    def demand(self) -> Demand:
        """Demand scaled by ``operations.demand_scale``."""
        scale = self.parameters.si("operations.demand_scale")
        return {key: scale * value for key, value in self.base_demand.items()}

    def port(self, port_id: int) -> Port:
        return next(p for p in self.ports if p.id == port_id)

    def case(self, case_id: str) -> Case:
        try:
            return self.cases[case_id]
        except KeyError:
            raise ScenarioError(
                self.source, f"cases.{case_id}", f"unknown case; have {sorted(self.cases)}"
            ) from None

    def with_parameter(self, path: str, value: float) -> Scenario:
        return attrs.evolve(self, parameters=self.parameters.with_value(path, value))


def service_id(ports: tuple[int, ...]) -> str:
    return "".join(str(p) for p in ports)


def _parse_arc(file: str, key: str) -> Arc:
    try:
        i, j = (int(part) for part in key.split("-"))
    except ValueError:
        raise ScenarioError(file, f"distances.{key}", "expected a key of the form 'i-j'") from None
    if i == j:
        raise ScenarioError(file, f"distances.{key}", "a port has no distance to itself")
    return (min(i, j), max(i, j))


def _distances(file: str, spec: ScenarioFile, port_ids: set[int]) -> dict[Arc, float]:
    distances: dict[Arc, float] = {}
    for key, nm in spec.distances.items():
        arc = _parse_arc(file, key)
        if not set(arc) <= port_ids:
            raise ScenarioError(file, f"distances.{key}", "unknown port")
        if not nm > 0:
            raise ScenarioError(file, f"distances.{key}", "distance must be positive")
        if arc in distances:
            raise ScenarioError(file, f"distances.{key}", "duplicate port pair")
        distances[arc] = nm * NAUTICAL_MILE
    return distances


def _demand(file: str, spec: ScenarioFile, port_ids: set[int]) -> dict[tuple[int, int, Cargo], float]:
    demand: dict[tuple[int, int, Cargo], float] = {}
    for k, row in enumerate(spec.demand):
        where = f"demand.{k}"
        if row.origin not in port_ids or row.destination not in port_ids:
            raise ScenarioError(file, where, "unknown port")
        if row.origin == row.destination:
            raise ScenarioError(file, where, "origin equals destination")
        if (row.origin, row.destination, Cargo.PAX) in demand:
            raise ScenarioError(file, where, "duplicate origin-destination pair")
        demand[(row.origin, row.destination, Cargo.PAX)] = row.pax
        demand[(row.origin, row.destination, Cargo.RORO)] = row.roro
    asymmetric = sorted(
        (i, j, c)
        for (i, j, c), value in demand.items()
        if i < j and demand.get((j, i, c)) != value
    )
    if asymmetric:
        logger.info("Asymmetric demand on %d arcs: %s", len(asymmetric), asymmetric)
    return demand


def _case(
    file: str, case_id: str, spec: CaseSpec, ports: tuple[int, ...], distances: Mapping[Arc, float]
) -> Case:
    where = f"cases.{case_id}"
    services = tuple(Service(service_id(route), route) for route in spec.routes)
    if len({s.id for s in services}) != len(services):
        raise ScenarioError(file, f"{where}.routes", "duplicate route")
    plan = RoutePlan(ports, services, distances)
    try:
        network.build_index_sets(plan)
    except ModelError as e:
        raise ScenarioError(file, f"{where}.routes", str(e)) from e
    baseline: dict[str, BaselinePin] = {}
    for k, pin in enumerate(spec.baseline):
        sid = service_id(pin.route)
        if sid not in {s.id for s in services}:
            raise ScenarioError(file, f"{where}.baseline.{k}.route", "not one of the case routes")
        baseline[sid] = pin
    if spec.mode is FleetMode.BASELINE:
        missing = [s.id for s in services if s.id not in baseline]
        if missing:
            raise ScenarioError(file, f"{where}.baseline", f"no baseline values for routes {missing}")
    elif baseline:
        raise ScenarioError(file, f"{where}.baseline", "baseline values need mode 'baseline'")
    return Case(case_id, spec.mode, plan, baseline, spec.description)


def _overrides(file: str, defaults: ParameterSet, spec: ScenarioFile) -> ParameterSet:
    values = dict(defaults.values)
    for section, params in spec.parameters.items():
        for name, param in params.items():
            path = f"{section}.{name}"
            if path not in values:
                raise ScenarioError(file, f"parameters.{path}", "unknown parameter")
            if param.unit != values[path].unit:
                raise ScenarioError(
                    file,
                    f"parameters.{path}.unit",
                    f"expected unit {values[path].unit!r}, got {param.unit!r}",
                )
            values[path] = param
    return ParameterSet(values)


def _solver(spec: SolverSpec) -> tuple[Tolerances, BnbConfig]:
    tolerances = attrs.evolve(Tolerances(), max_newton=spec.max_newton, max_outer=spec.max_outer)
    config = BnbConfig(
        integer_upper=spec.integer_upper,
        upper_bounds=dict(spec.upper_bounds),
        node_limit=spec.node_limit,
        relative_gap=spec.relative_gap,
    )
    return tolerances, config


def build_scenario(
    file: str, data: Any, defaults: ParameterSet | None = None
) -> Scenario:
    """Validate parsed TOML and resolve it into a :class:`Scenario`."""
    spec = toml_utils.validate(file, data, ScenarioFile)
    port_ids = [p.id for p in spec.ports]
    if len(set(port_ids)) != len(port_ids):
        raise ScenarioError(file, "ports", "duplicate port id")
    ports = tuple(
        Port(p.id, p.name, p.port_charge, p.electricity_price / MWH) for p in spec.ports
    )
    distances = _distances(file, spec, set(port_ids))
    demand = _demand(file, spec, set(port_ids))
    cases = {
        case_id: _case(file, case_id, case, tuple(port_ids), distances)
        for case_id, case in spec.cases.items()
    }
    parameters = _overrides(file, defaults or load_parameters(), spec)
    tolerances, bnb_config = _solver(spec.solver)
    options = ModelOptions(
        spec.options.aft_reading, spec.options.include_freshwater, spec.options.room_count
    )
    if options.room_count % 2 == 0:
        raise ScenarioError(file, "options.room_count", "battery room count must be odd")
    return Scenario(
        name=spec.name,
        source=file,
        ports=ports,
        distances=distances,
        base_demand=demand,
        cases=cases,
        parameters=parameters,
        options=options,
        tolerances=tolerances,
        bnb_config=bnb_config,
    )


def load_scenario(path: pathlib.Path) -> Scenario:
    return build_scenario(str(path), toml_utils.read(path))
