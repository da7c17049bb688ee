"""
heatflow command line.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure.
"""

import logging
import sys
import uuid
from typing import Any, Dict, Optional

import click
import pandas as pd

from src.artifact_writer import write_artifact
from src.db_manager import RunArchive
from src.errors import ConfigError, HeatFlowError
from src.figure_runner import RUNNERS
from src.scenario_config import load_scenario
from src.selftest import DEFAULT_SEED, run_selftest

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def configure_logging(verbose: int):
    level = logging.DEBUG if verbose > 1 else logging.INFO if verbose == 1 else logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    logging.captureWarnings(True)


def _fail(message: str, code: int):
    click.secho(message, fg="red", err=True)
    sys.exit(code)


def scenario_options(func):
    """Options shared by every scenario subcommand."""
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="Scenario file (JSON or YAML)."),
        click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Output file; stdout when omitted."),
        click.option("--dt", type=float, help="Integrator / sampling step (1/Delta)."),
        click.option("--t-end", "t_end", type=float, help="Simulation horizon (1/Delta)."),
        click.option("--theta-points", "theta_points", type=int, help="Number of theta grid points on [0, pi]."),
        click.option("--gamma", "gammas", type=float, multiple=True, help="Measurement strength (repeatable)."),
        click.option("--format", "fmt", type=click.Choice(["csv", "json"]), help="Artifact format."),
        click.option("--gnuplot-script", "gnuplot", is_flag=True, help="Also write a gnuplot script next to the CSV."),
        click.option("--workers", type=int, help="Thread pool size for sweeps."),
        click.option("--archive", "archive_path", type=click.Path(dir_okay=False), help="Append the run to a DuckDB archive."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def flag_overrides(command: str, **flags) -> Dict[str, Any]:
    """Map CLI flags onto scenario fields (None means not given)."""
    overrides: Dict[str, Any] = {
        "dt": flags.get("dt"),
        "t_end": flags.get("t_end"),
        "theta_points": flags.get("theta_points"),
        "workers": flags.get("workers"),
        "output": {
            "path": flags.get("out_path"),
            "format": flags.get("fmt"),
            "gnuplot_script": flags.get("gnuplot") or None,
        },
    }
    gammas = list(flags.get("gammas") or [])
    if gammas:
        if command in ("fig4a", "fig4b"):
            if len(gammas) > 1:
                raise ConfigError([f"gamma: {command} takes a single measurement strength"])
            overrides["gamma"] = gammas[0]
        elif command == "run":
            raise ConfigError(["gamma: set measurement.gamma in the scenario file"])
        else:
            overrides["gammas"] = gammas
    return overrides


def run_command(command: str, config_path: Optional[str], archive_path: Optional[str], **flags):
    """Load, run, write and optionally archive one scenario."""
    try:
        scenario = load_scenario(command, config_path, flag_overrides(command, **flags))
    except ConfigError as exc:
        _fail("configuration error:\n  " + "\n  ".join(exc.messages), EXIT_CONFIG)

    try:
        result = RUNNERS[command](scenario)
    except HeatFlowError as exc:
        _fail(f"numerical failure: {exc}", EXIT_NUMERICAL)

    output = scenario.output
    if output.gnuplot_script and output.path is None:
        _fail("--gnuplot-script needs --out", EXIT_CONFIG)
    text = write_artifact(result, output.path, output.format, output.gnuplot_script)
    if output.path is None:
        click.echo(text, nl=False)
    else:
        click.secho(f"{command}: wrote {output.path}", fg="green", err=True)

    if archive_path:
        run_id = f"{command}-{uuid.uuid4().hex[:12]}"
        archive = RunArchive(archive_path)
        try:
            archive.initialize_schema()
            archive.save_run(run_id, command, result.params, result.frame)
        finally:
            archive.close()
        click.secho(f"archived as {run_id}", fg="green", err=True)

    if "error" in result.frame.columns:
        _fail(f"{command}: some points failed, see the 'error' column", EXIT_NUMERICAL)


@click.group()
@click.option("-v", "--verbose", count=True, help="-v for INFO, -vv for DEBUG logging.")
def heatflow(verbose):
    """Heat flow from a continuous measurement into dissipative qubit and Lambda systems."""
    configure_logging(verbose)


def _scenario_command(name: str, help_text: str):
    @heatflow.command(name=name, help=help_text)
    @scenario_options
    def command(config_path, archive_path, **flags):
        run_command(name, config_path, archive_path, **flags)
    return command


fig2b = _scenario_command("fig2b", "Steady-state heat current versus theta for several gamma.")
fig4a = _scenario_command("fig4a", "Transient heat current from <sigma_x> = 1.")
fig4b = _scenario_command("fig4b", "Transient heat current from the measurement-free steady state.")
qex = _scenario_command("qex", "Excess heat versus theta.")
lambda_ = _scenario_command("lambda", "Lambda-model steady-state heat current versus gamma.")
run = _scenario_command("run", "Custom N-level Lindblad scenario (requires --config).")


@heatflow.command()
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True, help="Random seed.")
def selftest(seed):
    """Run the cross-validation checks."""
    try:
        report = run_selftest(seed)
    except HeatFlowError as exc:
        _fail(f"numerical failure: {exc}", EXIT_NUMERICAL)
    click.echo(report.to_string(index=False, float_format=lambda v: f"{v:.3e}"))
    if not report["passed"].all():
        failed = ", ".join(report.loc[~report["passed"], "check"])
        _fail(f"selftest failed: {failed}", EXIT_NUMERICAL)
    click.secho("all checks passed", fg="green", bold=True)


@heatflow.command()
@click.option("--archive", "archive_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--limit", type=int, default=10, show_default=True)
def history(archive_path, limit):
    """List recent archived runs."""
    archive = RunArchive(archive_path)
    try:
        archive.initialize_schema()
        frame: pd.DataFrame = archive.query_run_history(limit)
    finally:
        archive.close()
    if frame.empty:
        click.echo("no archived runs")
    else:
        click.echo(frame.to_string(index=False))


def main():
    heatflow(prog_name="heatflow")
