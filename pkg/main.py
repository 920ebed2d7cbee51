"""
main.py
-------
Entry point of the sunpump command line.
It configures logging and registers every command handler on one click group.
"""

from typing import Optional

import click

from handlers.compare_handler import mppt_compare_command
from handlers.pwm_handler import pwm_wave_command
from handlers.simulate_handler import simulate_command
from handlers.sweep_handler import iv_sweep_command
from utils.logger import setup_logging


@click.group()
@click.option("--log-level", default=None, help="Overrides SUNPUMP_LOG_LEVEL (DEBUG, INFO, WARNING ...).")
def cli(log_level: Optional[str]) -> None:
    """Solar-tracked PV water-pumping simulator."""
    setup_logging(log_level)


cli.add_command(simulate_command)
cli.add_command(iv_sweep_command)
cli.add_command(mppt_compare_command)
cli.add_command(pwm_wave_command)


if __name__ == "__main__":
    cli()
