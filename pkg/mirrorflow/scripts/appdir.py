"""Command to locate the app directory and install the default experiments."""

import os

import click
import pathlib

import mirrorflow.appdir


HELP = {
    "setup": "Create the app directory and copy the default experiment files.",
    "overwrite": (
        "Overwrite existing experiment files when creating the app directory with the "
        "'--setup' option."
    ),
    "reveal": "Reveal the app directory in the file explorer.",
    "experiments": "List the experiment files in the app directory.",
}
PATH_COLOR = "yellow"


@click.command()
@click.option("--setup", is_flag=True, default=False, help=HELP["setup"])
@click.option("--overwrite", is_flag=True, default=False, help=HELP["overwrite"])
@click.option("-r", "--reveal", is_flag=True, default=False, help=HELP["reveal"])
@click.option(
    "-e", "--experiments", is_flag=True, default=False, help=HELP["experiments"]
)
def appdir_command(setup, overwrite, reveal, experiments) -> None:
    """Locate the app directory, optionally create it and copy default experiments."""
    appdir = mirrorflow.appdir.locate_appdir()
    if setup:
        verb = "found at" if os.path.isdir(appdir) else "created at"
        click.echo(f"MirrorFlow app directory {verb}: {_format_filename(appdir)}")
        if overwrite:
            click.echo("Copying default experiments, overwriting existing files")
        else:
            click.echo("Copying missing default experiments")
        mirrorflow.appdir.setup_appdir(overwrite_experiments=overwrite)
    elif not os.path.isdir(appdir):
        click.echo(
            "MirrorFlow app directory not found, run `mirrorflow appdir --setup` "
            "to create the app directory."
        )
        return

    if not any([setup, reveal, experiments]):
        click.echo(_format_filename(appdir))
    if reveal:
        click.launch(appdir)
    if experiments:
        click.echo("Experiment files in the app directory:")
        for experiment in mirrorflow.appdir.get_appdir_experiments():
            click.echo(f"  {_format_filename(experiment)}")


def _format_filename(filename: str) -> str:
    return click.style(
        pathlib.Path(click.format_filename(filename)).as_posix(), fg=PATH_COLOR
    )
