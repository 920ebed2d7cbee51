"""`iv-sweep`: sample the array IV curve at one or more irradiances."""

from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from handlers.common import handle_errors, jobs_option, out_option
from logic.errors import ConfigError, DomainError
from logic.pv_model import DEFAULT_ARRAY, IvCurve, OperatingEnv, find_mpp, iv_sweep
from utils.csv_utils import write_csv
from utils.logger import logger
from utils.units import celsius_to_kelvin, format_sig

CURVE_COLUMNS = ["v", "i", "p"]


def sweep_at(irradiance: float, temp_c: float, points: int) -> IvCurve:
    env = OperatingEnv(irradiance=irradiance, cell_temp=celsius_to_kelvin(temp_c))
    return iv_sweep(DEFAULT_ARRAY, env, points)


def curve_path(out_path: Path, irradiance: float, many: bool) -> Path:
    if not many:
        return out_path
    return out_path.with_name(f"{out_path.stem}_g{format_sig(irradiance)}{out_path.suffix}")


@click.command("iv-sweep")
@click.option(
    "--irradiance",
    "irradiances",
    type=click.FloatRange(min=0),
    multiple=True,
    default=[1000.0],
    show_default=True,
    help="Irradiance in W/m²; repeat for several curves.",
)
@click.option("--temp-c", type=float, default=25.0, show_default=True, help="Cell temperature in °C.")
@click.option("--points", type=click.IntRange(min=2), default=500, show_default=True)
@out_option("iv.csv")
@jobs_option
@handle_errors
def iv_sweep_command(irradiances: tuple[float, ...], temp_c: float, points: int, out_path: Path, jobs: int) -> None:
    """Write v, i, p columns and print the maximum power point of each curve."""
    try:
        celsius_to_kelvin(temp_c)
    except DomainError as e:
        raise ConfigError(str(e), key="temp_c") from e
    n = len(irradiances)
    if jobs > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, n)) as pool:
            curves = list(pool.map(sweep_at, irradiances, [temp_c] * n, [points] * n))
    else:
        curves = [sweep_at(g, temp_c, points) for g in irradiances]

    for g, curve in zip(irradiances, curves):
        target = curve_path(out_path, g, n > 1)
        write_csv(target, [pt.model_dump() for pt in curve.points], CURVE_COLUMNS)
        mpp = find_mpp(curve)
        logger.info("💾 IV curve at {} W/m² written to {}", format_sig(g), target)
        click.echo(
            f"G={format_sig(g)} W/m2 T={format_sig(temp_c)} C: "
            f"Vmpp={format_sig(mpp.v)} V Impp={format_sig(mpp.i)} A Pmpp={format_sig(mpp.p)} W"
        )
