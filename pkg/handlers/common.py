"""
handlers/common.py
------------------
Shared pieces of the CLI commands: exit-code mapping and the options several commands use.

Exit codes:
    0  success
    1  configuration error (unreadable file, unknown key, violated field invariant)
    2  solver failure (non-convergence or a step that could not be evaluated)
"""

import functools
from pathlib import Path
from typing import Callable

import click

from logic.errors import ConfigError, StepFailure, SunPumpError
from logic.hydraulics import PRESETS
from service.scenario_store import list_builtin
from utils.config import settings
from utils.logger import logger

EXIT_CONFIG = 1
EXIT_SOLVER = 2


def handle_errors(fn: Callable) -> Callable:
    """Turn domain errors into the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return fn(*args, **kwargs)
        except ConfigError as e:
            logger.error("❌ configuration error: {}", e)
            click.echo(f"configuration error: {e}", err=True)
            ctx.exit(EXIT_CONFIG)
        except StepFailure as e:
            logger.error("❌ simulation failed at step {}: {}", e.step_index, e.cause)
            click.echo(f"solver failure: {e}", err=True)
            ctx.exit(EXIT_SOLVER)
        except SunPumpError as e:
            logger.error("❌ solver failure: {}", e)
            click.echo(f"solver failure: {e}", err=True)
            ctx.exit(EXIT_SOLVER)

    return wrapper


config_option = click.option(
    "--config",
    "config_path",
    required=True,
    help=f"Scenario YAML file, or the name of a bundled scenario ({', '.join(list_builtin())}).",
)
preset_option = click.option(
    "--preset",
    type=click.Choice(sorted(PRESETS)),
    default=None,
    help="Threshold preset; keys written in the scenario file still win.",
)
jobs_option = click.option(
    "--jobs",
    type=click.IntRange(min=1),
    default=settings.DEFAULT_JOBS,
    show_default=True,
    help="Worker processes for independent runs.",
)


def out_option(default: str) -> Callable:
    return click.option(
        "--out",
        "out_path",
        type=click.Path(dir_okay=False, path_type=Path),
        default=default,
        show_default=True,
        help="Output CSV path.",
    )
