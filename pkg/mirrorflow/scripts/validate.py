"""Command to validate a YAML experiment file."""

import click
import yaml
import pathlib

from mirrorflow.appdir import get_experiment_path
from mirrorflow.errors import ConfigError
from mirrorflow.experiment import ExperimentConfig, resolve_experiment
from mirrorflow.scripts.errors import ConfigurationError
from mirrorflow.validate import (
    ErrorLevel,
    ValidationError,
    ValidationErrorType,
    validate_document_entry_types,
    validate_experiment_content,
    validate_experiment_file_integrity,
)

PATH_COLOR = "yellow"
ERROR_COLORS = {
    ErrorLevel.INFO: "cyan",
    ErrorLevel.WARNING: "bright_blue",
    ErrorLevel.ERROR: "bright_red",
    ErrorLevel.CRITICAL: "red",
}


@click.command()
@click.argument("experiment")
def validate_command(experiment: str):
    """Validate an EXPERIMENT file and print the detected issues to the console.

    The file is checked in stages: YAML syntax, parameter types, consistency of the
    sections and finally the construction of all simulation components. A stage only
    runs if the previous ones found no serious issue. EXPERIMENT is resolved like in
    the simulate command.
    """
    try:
        experiment_path = get_experiment_path(experiment)
    except FileNotFoundError as error:
        raise ConfigurationError(
            f"Invalid value for 'EXPERIMENT': {_format_filename(experiment)}"
            " does not exist."
        ) from error
    click.echo(f"Validating YAML experiment file: {_format_filename(experiment_path)}")

    if errors := validate_experiment_file_integrity(experiment_path):
        _echo_errors("Error loading YAML file, validation cannot proceed.", errors)
        return
    with open(experiment_path, "r", encoding="utf-8") as file:
        document = yaml.safe_load(file)
    if errors := validate_document_entry_types(document):
        _echo_errors("Type errors detected, validation cannot proceed.", errors)
        return

    errors = validate_experiment_content(document)
    if not _serious(errors):
        errors.extend(_resolution_errors(document))
    if _serious(errors):
        _echo_errors("Errors detected, the experiment cannot be simulated.", errors)
    elif errors:
        title = "Only non-serious issues detected, experiment can be simulated."
        _echo_errors(title, errors)
    else:
        click.echo("Experiment is valid and can be simulated.")


def _resolution_errors(document: dict) -> list[ValidationError]:
    """Build the experiment components and report the first failing field."""
    try:
        resolve_experiment(ExperimentConfig.from_dict(document))
    except ConfigError as error:
        return [
            ValidationError(
                ValidationErrorType.INVALID_VALUE,
                ErrorLevel.ERROR,
                error.field,
                error.description,
            )
        ]
    return []


def _serious(errors: list[ValidationError]) -> bool:
    return any(error.error_level > ErrorLevel.WARNING for error in errors)


def _echo_errors(title: str, errors: list[ValidationError]) -> None:
    click.echo(title)
    for error in errors:
        level, message = error.message.split(" ", maxsplit=1)
        color = ERROR_COLORS[error.error_level]
        click.echo(f"  {click.style(level, fg=color)} {message}")


def _format_filename(filename: str) -> str:
    return click.style(
        pathlib.Path(click.format_filename(filename)).as_posix(), fg=PATH_COLOR
    )
