"""`simulate`: run one scenario and write its trace."""

from pathlib import Path
from typing import Optional

import click

from handlers.common import config_option, handle_errors, out_option, preset_option
from service.scenario_store import dump_resolved, load_scenario
from service.simulation_service import TRACE_COLUMNS, RunSummary, simulate
from utils.csv_utils import write_csv
from utils.logger import logger


def resolved_path(out_path: Path) -> Path:
    return out_path.with_suffix(".resolved.yaml")


def format_summary(summary: RunSummary) -> str:
    eff = "n/a" if summary.mppt_efficiency is None else f"{100.0 * summary.mppt_efficiency:.2f} %"
    return "\n".join(
        [
            f"records:          {summary.records}",
            f"final SOC:        {summary.final_soc_pct:.3f} %",
            f"pump 1 on-time:   {summary.pump1_on_s:.1f} s",
            f"pump 2 on-time:   {summary.pump2_on_s:.1f} s",
            f"panel energy:     {summary.panel_wh:.4f} Wh",
            f"stored energy:    {summary.stored_wh:.4f} Wh",
            f"load energy:      {summary.load_wh:.4f} Wh",
            f"curtailed energy: {summary.curtailed_wh:.4f} Wh",
            f"water to soil:    {summary.delivered_l:.4f} L",
            f"MPPT efficiency:  {eff}",
        ]
    )


@click.command("simulate")
@config_option
@out_option("trace.csv")
@click.option(
    "--decimate",
    type=click.IntRange(min=1),
    default=1,
    show_default=True,
    help="Keep every n-th record in the CSV.",
)
@preset_option
@handle_errors
def simulate_command(config_path: str, out_path: Path, decimate: int, preset: Optional[str]) -> None:
    """Run a scenario; write the trace CSV and <out>.resolved.yaml."""
    scenario = load_scenario(config_path, preset)
    records, summary = simulate(scenario)
    rows = [r.model_dump() for r in records[::decimate]]
    written = write_csv(out_path, rows, TRACE_COLUMNS)
    dump = dump_resolved(scenario, resolved_path(out_path))
    logger.info("💾 {} rows written to {} (resolved config: {})", written, out_path, dump)
    click.echo(format_summary(summary))
