"""`mppt-compare`: the same scenario under every MPPT controller."""

from pathlib import Path
from typing import Optional

import click

from handlers.common import config_option, handle_errors, jobs_option, out_option, preset_option
from service.comparison_service import COMPARISON_COLUMNS, ControllerSummary, compare_controllers
from service.scenario_store import load_scenario
from utils.csv_utils import write_csv
from utils.logger import logger


def format_row(s: ControllerSummary) -> str:
    eff = "n/a" if s.efficiency is None else f"{100.0 * s.efficiency:.2f}%"
    var = "n/a" if s.v_ref_variance is None else f"{s.v_ref_variance:.4g}"
    hits = [c for c in s.reconverge_cycles if c is not None]
    if not s.reconverge_cycles:
        recon = "-"
    else:
        worst = max(hits) if hits else "n/a"
        recon = f"{len(hits)}/{len(s.reconverge_cycles)} events, worst {worst} cycles"
    return f"{s.controller:<12} cycles={s.cycles:<6} efficiency={eff:<8} variance={var:<10} reconverge: {recon}"


@click.command("mppt-compare")
@config_option
@out_option("mppt_compare.csv")
@preset_option
@jobs_option
@handle_errors
def mppt_compare_command(config_path: str, out_path: Path, preset: Optional[str], jobs: int) -> None:
    """Write per-cycle v_ref, delivered and reference MPP power for each controller."""
    scenario = load_scenario(config_path, preset)
    rows, summaries = compare_controllers(scenario, jobs=jobs)
    written = write_csv(out_path, [r.model_dump() for r in rows], COMPARISON_COLUMNS)
    logger.info("💾 {} comparison rows written to {}", written, out_path)
    for summary in summaries:
        click.echo(format_row(summary))
