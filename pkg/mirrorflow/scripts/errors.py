"""Click exceptions carrying the exit codes of the mirrorflow commands."""

import click


class AcceptanceFailure(click.ClickException):
    exit_code = 1


class ConfigurationError(click.ClickException):
    exit_code = 2


class NumericalAbortError(click.ClickException):
    exit_code = 3
