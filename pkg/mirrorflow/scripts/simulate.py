"""Commands to run an experiment or the traffic demo from an experiment file."""

import pathlib
from typing import Callable, Optional

import click

from mirrorflow.appdir import get_experiment_path
from mirrorflow.errors import ConfigError, NumericalAbort
from mirrorflow.experiment import ExperimentConfig
from mirrorflow.runner import RunResult, run_experiment, run_traffic_demo
from mirrorflow.scripts.errors import ConfigurationError, NumericalAbortError


HELP = {
    "seed": "Seed of the Brownian source, replaces 'ensemble.seed'.",
    "out": "Output directory, replaces 'output.directory'.",
    "threads": "Number of worker processes, replaces 'ensemble.threads'.",
}
PATH_COLOR = "yellow"


@click.command()
@click.argument("experiment")
@click.option("--seed", type=click.IntRange(min=0), help=HELP["seed"])
@click.option("--out", help=HELP["out"])
@click.option("--threads", type=click.IntRange(min=1), help=HELP["threads"])
def simulate_command(experiment, seed, out, threads) -> None:
    """Simulate the ensemble described by an EXPERIMENT file and write its results.

    The EXPERIMENT argument is first used to look for a file with the specified
    filepath. If no file is found, the mirrorflow app directory and then the default
    experiments are searched for a file with the corresponding name.
    """
    config = load_experiment(experiment, seed, out, threads)
    _echo_result("Simulating experiment:", experiment, _run(run_experiment, config))


@click.command()
@click.argument("experiment")
@click.option("--seed", type=click.IntRange(min=0), help=HELP["seed"])
@click.option("--out", help=HELP["out"])
@click.option("--threads", type=click.IntRange(min=1), help=HELP["threads"])
def traffic_demo_command(experiment, seed, out, threads) -> None:
    """Compare a decreasing and a constant sensitivity on the traffic EXPERIMENT.

    The experiment must describe a traffic problem. EXPERIMENT is resolved like in the
    simulate command.
    """
    config = load_experiment(experiment, seed, out, threads)
    _echo_result("Running traffic demo:", experiment, _run(run_traffic_demo, config))


def load_experiment(
    experiment: str,
    seed: Optional[int] = None,
    out: Optional[str] = None,
    threads: Optional[int] = None,
) -> ExperimentConfig:
    """Locate and load an experiment file and apply the command line overrides."""
    try:
        experiment_path = get_experiment_path(experiment)
    except FileNotFoundError as error:
        raise ConfigurationError(
            f"Invalid value for 'EXPERIMENT': {_format_filename(experiment)}"
            " does not exist."
        ) from error
    try:
        config = ExperimentConfig.load(experiment_path)
        return config.with_overrides(seed=seed, directory=out, threads=threads)
    except ValueError as error:
        raise ConfigurationError(str(error)) from error


def _run(runner: Callable[[ExperimentConfig], RunResult], config) -> RunResult:
    try:
        return runner(config)
    except ConfigError as error:
        raise ConfigurationError(f"Invalid experiment, {error}") from error
    except NumericalAbort as error:
        raise NumericalAbortError(f"Simulation aborted, {error}") from error


def _echo_result(title: str, experiment: str, result: RunResult) -> None:
    click.echo(title)
    click.echo("-" * len(title))
    click.echo(f"Experiment:       {_format_filename(experiment)}")
    click.echo(f"Output directory: {_format_filename(result.directory)}")
    for filepath in result.files:
        click.echo(f"  {_format_filename(filepath)}")


def _format_filename(filename: str) -> str:
    return click.style(
        pathlib.Path(click.format_filename(filename)).as_posix(), fg=PATH_COLOR
    )
