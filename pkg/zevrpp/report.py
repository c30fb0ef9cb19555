"""Report tables for solved fleets and sweeps, as CSV, JSON or text.

Output is byte-stable: rows follow service and port order, numbers are
formatted with a fixed precision and JSON keys are sorted.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import pathlib
from typing import Mapping, Sequence

import tabulate

from zevrpp import json_utils, utils
from zevrpp.model.extract import FleetSolution
from zevrpp.runner import SweepPoint

logger = logging.getLogger(__name__)

Row = dict[str, str]


class ReportFormat(enum.StrEnum):
    CSV = "csv"
    JSON = "json"
    TABLE = "table"


def _num(value: float, digits: int = 6) -> str:
    return f"{value:.{digits}g}"


def design_rows(fleet: FleetSolution) -> list[Row]:
    """One row per service: schedule, main dimensions and battery."""
    rows = []
    for sid, service in fleet.services.items():
        design = fleet.designs[service.design]
        rows.append(
            {
                "case": fleet.case,
                "service": sid,
                "design": service.design,
                "N_rt": str(service.frequency),
                "N_vessel": str(service.fleet_size),
                "L [m]": f"{design.length:.1f}",
                "L_sup [m]": f"{design.superstructure_length:.1f}",
                "B [m]": f"{design.breadth:.2f}",
                "T [m]": f"{design.draught:.2f}",
                "V_GT": f"{design.gross_tonnage:.0f}",
                "E_batt [MWh]": f"{design.battery_capacity:.1f}",
                "t_cell [yr]": f"{service.cell_life_years:.1f}",
            }
        )
    return rows


def speed_rows(fleet: FleetSolution) -> list[Row]:
    """Outbound speed per route leg with the inbound speed in brackets, in knots."""
    rows = []
    for sid, service in fleet.services.items():
        for i, j in zip(service.ports, service.ports[1:]):
            rows.append(
                {
                    "case": fleet.case,
                    "service": sid,
                    "leg": f"{i}-{j}",
                    "speed [kn]": (
                        f"{service.speeds[f'{i}-{j}']:.1f} ({service.speeds[f'{j}-{i}']:.1f})"
                    ),
                }
            )
    return rows


def power_rows(fleet: FleetSolution) -> list[Row]:
    """Shaft power per directed leg against the admiralty-formula estimate."""
    rows = []
    for sid, service in fleet.services.items():
        for leg, shaft in service.shaft_power.items():
            admiralty = service.admiralty_power[leg]
            rows.append(
                {
                    "case": fleet.case,
                    "service": sid,
                    "leg": leg,
                    "speed [kn]": f"{service.speeds[leg]:.2f}",
                    "shaft [MW]": f"{shaft:.3f}",
                    "admiralty [MW]": f"{admiralty:.3f}",
                    "ratio": f"{admiralty / shaft:.3f}",
                }
            )
    return rows


def charger_rows(fleets: Sequence[FleetSolution]) -> list[Row]:
    """One row per case, one column per port, in MW; blank where a port is not called."""
    ports = sorted({p for f in fleets for p in f.chargers}, key=int)
    return [
        {"case": f.case, **{p: f"{f.chargers[p]:.1f}" if p in f.chargers else "" for p in ports}}
        for f in fleets
    ]


def cost_rows(fleets: Sequence[FleetSolution]) -> list[Row]:
    """Cost breakdown in million EUR per year; one column per case."""
    terms = list(dict.fromkeys(t for f in fleets for t in f.cost_breakdown))
    rows = [
        {"term": t, **{f.case: f"{f.cost_breakdown.get(t, 0.0) / 1e6:.3f}" for f in fleets}}
        for t in terms
    ]
    rows.append({"term": "total", **{f.case: f"{f.objective / 1e6:.3f}" for f in fleets}})
    return rows


def sweep_rows(points: Sequence[SweepPoint]) -> list[Row]:
    """Parameter value, status and cost, then key variables; failed points keep blanks."""
    rows: list[Row] = []
    for point in points:
        run = point.run
        row = {
            point.parameter: _num(point.value),
            "status": run.status.value if run.status is not None else "error",
            "exit_code": str(run.exit_code),
            "cost [MEUR/yr]": _num(run.fleet.objective / 1e6) if run.fleet else "",
        }
        if run.fleet is not None:
            for design_id, design in run.fleet.designs.items():
                row[f"{design_id}.L"] = _num(design.length)
                row[f"{design_id}.E_batt"] = _num(design.battery_capacity)
            for sid, service in run.fleet.services.items():
                row[f"{sid}.N_rt"] = str(service.frequency)
                row[f"{sid}.N_vessel"] = str(service.fleet_size)
            for term, value in run.fleet.cost_breakdown.items():
                row[f"cost.{term}"] = _num(value / 1e6)
        rows.append(row)
    columns = list(dict.fromkeys(k for r in rows for k in r))
    return [{c: r.get(c, "") for c in columns} for r in rows]


def fleet_tables(fleets: Sequence[FleetSolution]) -> dict[str, list[Row]]:
    return {
        "designs": [r for f in fleets for r in design_rows(f)],
        "speeds": [r for f in fleets for r in speed_rows(f)],
        "chargers": charger_rows(fleets),
        "costs": cost_rows(fleets),
        "power": [r for f in fleets for r in power_rows(f)],
    }


def to_csv(rows: Sequence[Row]) -> bytes:
    buffer = io.StringIO()
    if rows:
        writer = csv.DictWriter(buffer, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buffer.getvalue().encode()


def to_table(tables: Mapping[str, Sequence[Row]]) -> bytes:
    parts = []
    for name, rows in tables.items():
        parts.append(f"## {name}\n")
        parts.append(
            tabulate.tabulate(
                rows, headers="keys", tablefmt="simple", stralign="right", disable_numparse=True
            )
        )
        parts.append("\n\n")
    return "".join(parts).encode()


def render_fleets(fleets: Sequence[FleetSolution], fmt: ReportFormat) -> dict[str, bytes]:
    """File name to contents for one or more solved cases."""
    if fmt is ReportFormat.JSON:
        return {
            f"{utils.file_stem(f.scenario, f.case)}.json": (
                json_utils.dumps_indented(f.to_dict()) + b"\n"
            )
            for f in fleets
        }
    tables = fleet_tables(fleets)
    if fmt is ReportFormat.CSV:
        return {f"{name}.csv": to_csv(rows) for name, rows in tables.items()}
    return {"report.txt": to_table(tables)}


def render_sweep(points: Sequence[SweepPoint], fmt: ReportFormat) -> dict[str, bytes]:
    rows = sweep_rows(points)
    if fmt is ReportFormat.JSON:
        return {"sweep.json": json_utils.dumps_indented(rows) + b"\n"}
    if fmt is ReportFormat.CSV:
        return {"sweep.csv": to_csv(rows)}
    return {"sweep.txt": to_table({"sweep": rows})}


def write(files: Mapping[str, bytes], out_dir: pathlib.Path) -> list[pathlib.Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, content in files.items():
        path = out_dir / name
        path.write_bytes(content)
        written.append(path)
        logger.info("Wrote %s (%d bytes)", path, len(content))
    return written


def read_fleet(path: pathlib.Path) -> FleetSolution:
    return FleetSolution.from_dict(json_utils.loads(path.read_bytes()))
