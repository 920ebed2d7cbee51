"""`pwm-wave`: sample the pump PWM signal."""

from pathlib import Path

import click
import numpy as np

from handlers.common import handle_errors, out_option
from logic.hydraulics import pwm_wave
from utils.csv_utils import write_csv
from utils.units import format_sig

WAVE_COLUMNS = ["t_s", "level"]


def sample_wave(duty: float, freq: float, periods: int, samples_per_period: int) -> list[dict[str, float]]:
    """Samples at k / (freq·samples_per_period) over whole periods."""
    n = periods * samples_per_period
    times = np.arange(n) / (freq * samples_per_period)
    return [{"t_s": float(t), "level": pwm_wave(duty, freq, float(t))} for t in times]


@click.command("pwm-wave")
@click.option("--duty", type=click.FloatRange(0.0, 1.0), required=True)
@click.option("--freq-hz", type=click.FloatRange(min=0, min_open=True), default=1.0, show_default=True)
@click.option("--periods", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--samples-per-period", type=click.IntRange(min=1), default=100, show_default=True)
@out_option("pwm.csv")
@handle_errors
def pwm_wave_command(duty: float, freq_hz: float, periods: int, samples_per_period: int, out_path: Path) -> None:
    """Write t_s, level columns and print the sampled mean."""
    rows = sample_wave(duty, freq_hz, periods, samples_per_period)
    write_csv(out_path, rows, WAVE_COLUMNS)
    mean = sum(r["level"] for r in rows) / len(rows)
    click.echo(f"duty={format_sig(duty)} mean={format_sig(mean)}")
