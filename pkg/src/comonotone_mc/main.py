"""
comonotone-mc - CLI Interface
=============================

Batch driver for the verification experiments.

Usage:
    comonotone-mc run config/experiments/barrier_gbm.json
    comonotone-mc run config/experiments/comonotony_sweep.json --paths 20000 --seed 7 --workers 4
    comonotone-mc list

Exit status: 0 when every verdict is consistent, 2 on any violation, 1 on a usage or config error.
"""

from pathlib import Path
from typing import Optional
import logging
import sys

import click

from . import __version__
from .config import load_settings
from .errors import ComonotoneError
from .inputs.experiment_config import load_experiment
from .inputs.registry import list_registry
from .outputs.csv_report import ReportWriter, format_rows
from .runner import run_experiment

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
USAGE_ERRORS = (ComonotoneError, FileNotFoundError)


def _configure_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root = logging.getLogger("comonotone_mc")
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.WARNING)


@click.group()
@click.version_option(version=__version__)
def cli():
    """comonotone-mc - Monte Carlo checks of the functional co-monotony principle and its consequences."""


@cli.command()
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--paths", "n_paths", type=int, default=None, help="Number of simulated paths (overrides the config)")
@click.option("--seed", type=int, default=None, help="Master seed (overrides the config)")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Output directory")
@click.option("--workers", type=int, default=None, envvar="COMONOTONE_WORKERS", show_envvar=True,
              help="Worker threads; results do not depend on it")
@click.option("--xlsx", is_flag=True, help="Also write report.xlsx")
@click.option("--settings", "settings_path", type=click.Path(dir_okay=False), default=None,
              help="Application settings file (default config/config.json)")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging on stderr")
def run(config: str, n_paths: Optional[int], seed: Optional[int], out_dir: Optional[str], workers: Optional[int],
        xlsx: bool, settings_path: Optional[str], verbose: bool):
    """Run one experiment config and write report.csv and curves.csv."""
    _configure_logging(verbose)
    try:
        settings = load_settings(settings_path)
        experiment = load_experiment(config).with_overrides(n_paths=n_paths, seed=seed, output=out_dir,
                                                            workers=workers)
        result = run_experiment(experiment, settings)
    except USAGE_ERRORS as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)

    output = Path(experiment.output or Path(settings.output_dir) / experiment.name)
    ReportWriter(str(output)).write(result.rows, result.curves)
    if xlsx:
        from .outputs.excel_export import ExcelExporter
        ExcelExporter(settings_path).generate_report(
            {"name": experiment.name, "kind": experiment.kind, "seed": experiment.seed,
             "n_paths": experiment.n_paths, "description": experiment.description},
            result.rows, result.curves, str(output / "report.xlsx"))

    counts = result.summary()
    click.echo(f"{experiment.name}: {len(result.rows)} rows "
               + ", ".join(f"{count} {verdict}" for verdict, count in counts.items())
               + f" -> {output}")
    failures = result.failures
    if failures:
        click.echo(f"{len(failures)} failing row(s):", err=True)
        click.echo(format_rows(failures), err=True, nl=False)
    sys.exit(result.exit_code)


@cli.command(name="list")
def list_cmd():
    """List registered processes, functionals, convex test functions and barrier kinds."""
    click.echo(list_registry(), nl=False)


if __name__ == "__main__":
    cli()
