#!/usr/bin/env python3
"""Fleet design tools: solve cases, sweep parameters, verify oracles, emit reports."""

import logging
import pathlib
import sys

import click

# Add the parent directory to Python path to find zevrpp module
sys.path.insert(0, str(pathlib.Path(__file__).parent.parent))

from zevrpp import json_utils, logging_utils, report, runner, verify
from zevrpp.errors import ModelError, ScenarioError
from zevrpp.model import assemble, scenario
from zevrpp.vessel import surrogates
from zevrpp.vessel.coefficients import load_resistance_table
from zevrpp.vessel.hull import HullForm
from zevrpp.vessel.surrogates import Surrogates

logger = logging.getLogger(__name__)

_FORMATS = click.Choice([f.value for f in report.ReportFormat])


def _emit(files: dict[str, bytes], out: pathlib.Path | None) -> None:
    if out is not None:
        report.write(files, out)
        return
    for name, content in files.items():
        if len(files) > 1:
            click.echo(f"# {name}")
        click.echo(content.decode(), nl=False)


def _load_scenario(path: pathlib.Path) -> scenario.Scenario:
    try:
        return scenario.load_scenario(path)
    except ScenarioError as e:
        logger.error("%s", e)
        sys.exit(runner.EXIT_ERROR)


def _load_fits(path: pathlib.Path | None) -> Surrogates | None:
    if path is None:
        return None
    try:
        return surrogates.read_surrogates(path)
    except ModelError as e:
        logger.error("%s", e)
        sys.exit(runner.EXIT_ERROR)


@click.group()
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=None,
    help="Overrides ZEVRPP_LOG_LEVEL",
)
def cli(log_level: str | None) -> None:
    """Zero-emission ro-pax fleet design and routing."""
    logging_utils.setup_logging(
        level=logging.getLevelName(log_level.upper()) if log_level else None
    )


@cli.command()
@click.option(
    "--scenario", "scenario_path", required=True, type=click.Path(path_type=pathlib.Path)
)
@click.option("--case", "case_ids", required=True, multiple=True, help="Case id; repeatable")
@click.option("--out", type=click.Path(path_type=pathlib.Path), help="Output directory")
@click.option("--format", "fmt", type=_FORMATS, default="table")
@click.option("--fits", type=click.Path(path_type=pathlib.Path), help="Surrogate fit JSON")
def run(
    scenario_path: pathlib.Path,
    case_ids: tuple[str, ...],
    out: pathlib.Path | None,
    fmt: str,
    fits: pathlib.Path | None,
) -> None:
    """Solve cases and report the optimal fleets."""
    loaded = _load_scenario(scenario_path)
    shared_fits = _load_fits(fits)
    runs = []
    for case_id in case_ids:
        try:
            runs.append(runner.run_case(loaded, case_id, shared_fits))
        except (ScenarioError, ModelError) as e:
            logger.error("%s", e)
            sys.exit(runner.EXIT_ERROR)
    fleets = [r.fleet for r in runs if r.fleet is not None]
    if fleets:
        _emit(report.render_fleets(fleets, report.ReportFormat(fmt)), out)
    for failed in (r for r in runs if not r.ok):
        logger.error("Case %s: %s", failed.case_id, failed.message)
    sys.exit(max(r.exit_code for r in runs))


@cli.command()
@click.option(
    "--scenario", "scenario_path", required=True, type=click.Path(path_type=pathlib.Path)
)
@click.option("--case", "case_id", required=True)
@click.option("--param", "parameter", required=True, help="Dotted parameter path")
@click.option("--range", "bounds", required=True, nargs=2, type=float)
@click.option("--steps", required=True, type=click.IntRange(min=1))
@click.option("--out", type=click.Path(path_type=pathlib.Path), help="Output directory")
@click.option("--format", "fmt", type=_FORMATS, default="csv")
@click.option("--fits", type=click.Path(path_type=pathlib.Path), help="Surrogate fit JSON")
def sweep(
    scenario_path: pathlib.Path,
    case_id: str,
    parameter: str,
    bounds: tuple[float, float],
    steps: int,
    out: pathlib.Path | None,
    fmt: str,
    fits: pathlib.Path | None,
) -> None:
    """Solve one case over a grid of parameter values; failed points are marked."""
    loaded = _load_scenario(scenario_path)
    try:
        points = runner.sweep(
            loaded, case_id, parameter, *bounds, steps, fits=_load_fits(fits)
        )
    except (ScenarioError, ModelError) as e:
        logger.error("%s", e)
        sys.exit(runner.EXIT_ERROR)
    _emit(report.render_sweep(points, report.ReportFormat(fmt)), out)
    failed = sum(not p.run.ok for p in points)
    if failed:
        logger.warning("%d of %d sweep points failed", failed, len(points))


@cli.command(name="verify")
@click.option("--suite", "suites", multiple=True, help="Suite name; repeatable, default all")
@click.option("--out", type=click.Path(path_type=pathlib.Path), help="Output file")
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="table")
def verify_command(suites: tuple[str, ...], out: pathlib.Path | None, fmt: str) -> None:
    """Run the oracle suite; exits 3 when a strict check fails."""
    try:
        result = verify.run_suite(list(suites) or None)
    except ValueError as e:
        logger.error("%s", e)
        sys.exit(runner.EXIT_ERROR)
    if fmt == "json":
        content = json_utils.dumps_indented(result.to_dict()) + b"\n"
    else:
        rows = [{k: str(v) for k, v in c.to_dict().items()} for c in result.checks]
        content = report.to_table({"oracles": rows})
    if out is not None:
        out.write_bytes(content)
        logger.info("Wrote %s", out)
    else:
        click.echo(content.decode(), nl=False)
    sys.exit(runner.EXIT_OPTIMAL if result.passed else runner.EXIT_VALIDATION)


@cli.command(name="report")
@click.option(
    "--solution",
    "solutions",
    required=True,
    multiple=True,
    type=click.Path(exists=True, path_type=pathlib.Path),
    help="Saved fleet solution JSON; repeatable",
)
@click.option("--format", "fmt", type=_FORMATS, default="table")
@click.option("--out", type=click.Path(path_type=pathlib.Path), help="Output directory")
def report_command(
    solutions: tuple[pathlib.Path, ...], fmt: str, out: pathlib.Path | None
) -> None:
    """Re-emit reports from saved fleet solutions."""
    try:
        fleets = [report.read_fleet(path) for path in solutions]
    except ModelError as e:
        logger.error("%s", e)
        sys.exit(runner.EXIT_ERROR)
    _emit(report.render_fleets(fleets, report.ReportFormat(fmt)), out)


@cli.command()
@click.option(
    "--scenario",
    "scenario_path",
    type=click.Path(path_type=pathlib.Path),
    help="Take the hull form from this scenario instead of the defaults",
)
@click.option("--out", type=click.Path(path_type=pathlib.Path), help="Output JSON file")
def fit(scenario_path: pathlib.Path | None, out: pathlib.Path | None) -> None:
    """Refit the surrogates from the bundled coefficient tables."""
    if scenario_path is not None:
        form = assemble.hull_form(_load_scenario(scenario_path))
    else:
        parameters = scenario.load_parameters()
        form = HullForm(parameters.si("hull.beta"))
    fits = surrogates.build_surrogates(form, load_resistance_table())
    if out is not None:
        fits.write(out)
        logger.info("Wrote %s", out)
    else:
        click.echo(json_utils.dumps_indented(fits.to_dict()).decode())


if __name__ == "__main__":
    cli()
