"""Command to run the acceptance suites."""

import os
import pathlib

import click

from mirrorflow.acceptance import (
    DEFAULT_SEED,
    REPORT_FILE,
    SUITES,
    failed_checks,
    run_acceptance,
)
from mirrorflow.errors import NumericalAbort
from mirrorflow.scripts.errors import AcceptanceFailure, NumericalAbortError


HELP = {
    "out": "Directory of the acceptance report, by default the current directory.",
    "seed": "Base seed of the suites.",
    "threads": "Number of worker processes used by the ensembles.",
    "xlsx": "Also write the report as an Excel workbook.",
}
PATH_COLOR = "yellow"


@click.command()
@click.argument("suite", default="all", type=click.Choice(["all", *SUITES]))
@click.option("--out", default=".", help=HELP["out"])
@click.option(
    "--seed", default=DEFAULT_SEED, type=click.IntRange(min=0), help=HELP["seed"]
)
@click.option("--threads", default=1, type=click.IntRange(min=1), help=HELP["threads"])
@click.option("--xlsx", is_flag=True, default=False, help=HELP["xlsx"])
def acceptance_command(suite, out, seed, threads, xlsx) -> None:
    """Run the acceptance SUITE, or all suites, and write the acceptance report.

    Exits with status 1 if any check fails.
    """
    click.echo(f"Running acceptance suite: {suite}")
    click.echo("-------------------------")
    try:
        report = run_acceptance(suite, out, seed=seed, threads=threads, xlsx=xlsx)
    except NumericalAbort as error:
        raise NumericalAbortError(f"Simulation aborted, {error}") from error

    for row in report.itertuples(index=False):
        status = click.style("passed", fg="green") if row.passed else click.style(
            "FAILED", fg="bright_red"
        )
        comparison = f"{row.measured:.6g} {row.condition} {row.target:.6g}"
        click.echo(f"  {status} {row.check}: {comparison}")
    click.echo(f"Report file: {_format_filename(os.path.join(out, REPORT_FILE))}")
    if failures := failed_checks(report):
        raise AcceptanceFailure(
            f"{len(failures)} check(s) failed: {', '.join(failures)}"
        )


def _format_filename(filename: str) -> str:
    return click.style(
        pathlib.Path(click.format_filename(filename)).as_posix(), fg=PATH_COLOR
    )
