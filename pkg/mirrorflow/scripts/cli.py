"""Command line interface for mirrorflow."""
import logging

import click

from mirrorflow.scripts.acceptance import acceptance_command
from mirrorflow.scripts.appdir import appdir_command
from mirrorflow.scripts.simulate import simulate_command, traffic_demo_command
from mirrorflow.scripts.validate import validate_command


@click.group()
@click.option(
    "-v", "--verbose", is_flag=True, default=False, help="Log progress messages."
)
def cli(verbose):
    """Command line interface for mirrorflow."""
    if verbose:
        logging.basicConfig(
            level=logging.INFO, format="%(asctime)s %(name)s %(levelname)s: %(message)s"
        )


cli.add_command(simulate_command, name="simulate")
cli.add_command(traffic_demo_command, name="traffic-demo")
cli.add_command(acceptance_command, name="acceptance")
cli.add_command(validate_command, name="validate")
cli.add_command(appdir_command, name="appdir")

if __name__ == "__main__":
    cli()
