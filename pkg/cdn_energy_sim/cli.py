import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, NoReturn, Optional

import click

from . import __version__, engine
from .config import LOG_FORMATS, Settings, load_settings
from .errors import (
    ConfigurationError,
    ReportWriteError,
    ScenarioError,
    ScenarioValidationError,
    SimulationInvariantError,
    SweepError,
)
from .logging import get_logger, setup_logging
from .report import write_report
from .scenario import apply_seed, load_document, parse_scenario
from .sweep import SweepSpec, run_sweep
from .utils import format_float, parse_list, parse_value

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2

logger = get_logger(__name__)


def _fail(message: str, code: int) -> NoReturn:
    click.echo(message, err=True)
    sys.exit(code)


def _report_scenario_error(exc: ScenarioError) -> NoReturn:
    if isinstance(exc, ScenarioValidationError):
        for issue in exc.issues:
            click.echo(str(issue), err=True)
    else:
        click.echo(str(exc), err=True)
    sys.exit(EXIT_VALIDATION)


def _document_seed(document: Dict[str, Any]) -> Any:
    simulation = document.get("simulation")
    if isinstance(simulation, dict):
        return simulation.get("seed", 0)
    return 0


def _load(path: str, seed: Optional[int] = None) -> Dict[str, Any]:
    try:
        document = load_document(path)
    except OSError as exc:
        _fail(f"Cannot read scenario {path}: {exc.strerror or exc}", EXIT_IO)
    except ScenarioError as exc:
        _report_scenario_error(exc)
    if seed is not None:
        document = apply_seed(document, seed)
    return document


@click.group()
@click.version_option(__version__, prog_name="cdn-energy-sim")
@click.option("--debug", is_flag=True, help="Enable debug logging")
@click.option(
    "--log-format",
    type=click.Choice(LOG_FORMATS),
    default=None,
    help="Log record format on stderr",
)
@click.option(
    "--env-file", default=None, help="Path to a .env file with runtime settings"
)
@click.pass_context
def main(
    ctx: click.Context, debug: bool, log_format: Optional[str], env_file: Optional[str]
) -> None:
    """Simulate the energy consumption of content delivery over a CDN."""
    try:
        settings = load_settings(env_file)
    except ConfigurationError as exc:
        _fail(f"Invalid settings: {', '.join(exc.invalid_keys)}", EXIT_VALIDATION)
    if debug:
        settings = replace(settings, log_level="DEBUG")
    if log_format:
        settings = replace(settings, log_format=log_format)
    setup_logging(settings.debug, settings.log_format, settings.log_level)
    ctx.obj = settings


@main.command()
@click.argument("scenario", type=click.Path(dir_okay=False))
def validate(scenario: str) -> None:
    """Check a scenario document and report every problem in it."""
    document = _load(scenario)
    try:
        parse_scenario(document)
    except ScenarioError as exc:
        _report_scenario_error(exc)
    click.echo("OK")


@main.command()
@click.argument("scenario", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the scenario's seed")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option(
    "--requests-csv", is_flag=True, help="Also write the per-request audit trail"
)
@click.option(
    "--top-k", type=click.IntRange(min=1), default=None, help="Contents in the summary"
)
@click.pass_obj
def simulate(
    settings: Settings,
    scenario: str,
    seed: Optional[int],
    out_dir: str,
    requests_csv: bool,
    top_k: Optional[int],
) -> None:
    """Run one simulation and write its report into OUT."""
    document = _load(scenario, seed)
    try:
        parsed = parse_scenario(document)
    except ScenarioError as exc:
        _report_scenario_error(exc)

    try:
        report = engine.run(parsed, record_requests=requests_csv)
        write_report(
            report, out_dir, requests_csv=requests_csv, top_k=top_k or settings.top_k
        )
    except ReportWriteError as exc:
        _fail(str(exc), EXIT_IO)
    except SimulationInvariantError as exc:
        logger.error("Simulation aborted", extra={"invariant": exc.invariant})
        _fail(str(exc), EXIT_IO)

    click.echo(
        f"total_wh={format_float(report.ledger.total_wh)} "
        f"requests={report.request_count} "
        f"hit_rate={format_float(report.hit_rate)}"
    )


@main.command()
@click.argument("scenario", type=click.Path(dir_okay=False))
@click.option("--param", "param_path", required=True, help="Dotted path into the scenario")
@click.option("--values", required=True, help="Comma-separated values (JSON literals)")
@click.option(
    "--seeds", default=None, help="Comma-separated seeds [default: the scenario's own seed]"
)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--jobs", type=click.IntRange(min=1), default=None, help="Worker processes")
@click.pass_obj
def sweep(
    settings: Settings,
    scenario: str,
    param_path: str,
    values: str,
    seeds: Optional[str],
    out_dir: str,
    jobs: Optional[int],
) -> None:
    """Run the cross product of parameter values and seeds."""
    document = _load(scenario)
    if seeds is None:
        seeds = str(_document_seed(document))
    try:
        seed_list = [int(seed) for seed in parse_list(seeds)]
    except ValueError:
        _fail(f"Seeds must be integers: {seeds}", EXIT_VALIDATION)
    try:
        spec = SweepSpec(
            param_path=param_path,
            values=[parse_value(value) for value in parse_list(values)],
            seeds=seed_list,
        )
        results = run_sweep(
            document,
            spec,
            out_dir=out_dir,
            jobs=jobs or settings.jobs,
            top_k=settings.top_k,
        )
    except SweepError as exc:
        _fail(str(exc), EXIT_VALIDATION)
    except ReportWriteError as exc:
        _fail(str(exc), EXIT_IO)

    failed = [result for result in results if not result.ok]
    click.echo(
        f"runs={len(results)} failed={len(failed)} table={Path(out_dir) / 'sweep.csv'}"
    )
    if failed:
        sys.exit(EXIT_IO)


if __name__ == "__main__":
    main()
