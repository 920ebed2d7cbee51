import csv
import textwrap

import pytest
from click.testing import CliRunner

from main import cli
from service.simulation_service import TRACE_COLUMNS
from utils.logger import logger


@pytest.fixture(autouse=True)
def reset_logger():
    yield
    logger.remove()


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def scenario_file(tmp_path, text: str):
    path = tmp_path / "scenario.yaml"
    path.write_text(textwrap.dedent(text).lstrip(), encoding="utf-8")
    return path


SHORT = """
duration_s: 10
dt_s: 0.1
tank2:
  volume_l: 0.69
"""


def read_rows(path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


class TestSimulate:
    def test_writes_trace_and_resolved_config(self, runner, tmp_path):
        out = tmp_path / "trace.csv"
        result = runner.invoke(
            cli, ["simulate", "--config", str(scenario_file(tmp_path, SHORT)), "--out", str(out), "--decimate", "3"]
        )
        assert result.exit_code == 0, result.output
        lines = out.read_text(encoding="utf-8").split("\n")
        assert lines[0] == ",".join(TRACE_COLUMNS)
        assert len(read_rows(out)) == 34
        assert (tmp_path / "trace.resolved.yaml").exists()
        assert "records:" in result.stdout

    def test_resolved_config_reproduces_trace(self, runner, tmp_path):
        first = tmp_path / "a" / "trace.csv"
        second = tmp_path / "b" / "trace.csv"
        config = scenario_file(tmp_path, SHORT)
        assert runner.invoke(cli, ["simulate", "--config", str(config), "--out", str(first)]).exit_code == 0
        resolved = first.with_suffix(".resolved.yaml")
        assert runner.invoke(cli, ["simulate", "--config", str(resolved), "--out", str(second)]).exit_code == 0
        assert first.read_bytes() == second.read_bytes()

    def test_relay_columns_are_integers(self, runner, tmp_path):
        out = tmp_path / "trace.csv"
        runner.invoke(cli, ["simulate", "--config", str(scenario_file(tmp_path, SHORT)), "--out", str(out)])
        rows = read_rows(out)
        assert {r["pump1_relay"] for r in rows} <= {"0", "1"}
        assert rows[0]["pump1_relay"] == "1"

    @pytest.mark.parametrize(
        "text, where",
        [
            ("thresholds:\n  tank_on_pct: 90\n", "[thresholds, line 2]"),
            ("battery:\n  colour: red\n", "[battery.colour, line 2]"),
            ("duration_s: 5\nbattery: [1\n", "line "),
        ],
    )
    def test_config_errors_exit_1(self, runner, tmp_path, text, where):
        result = runner.invoke(cli, ["simulate", "--config", str(scenario_file(tmp_path, text)), "--out", str(tmp_path / "t.csv")])
        assert result.exit_code == 1
        assert "configuration error" in result.stderr
        assert where in result.stderr
        assert not (tmp_path / "t.csv").exists()

    def test_missing_file_exit_1(self, runner, tmp_path):
        result = runner.invoke(cli, ["simulate", "--config", str(tmp_path / "missing.yaml")])
        assert result.exit_code == 1

    def test_step_failure_exit_2(self, runner, tmp_path):
        config = scenario_file(
            tmp_path,
            """
            duration_s: 1
            env:
              sun_elevation_deg: 45
            tracker:
              tilt_mode: servo
              pulse_map:
                angle_max_deg: 30
            """,
        )
        result = runner.invoke(cli, ["simulate", "--config", str(config), "--out", str(tmp_path / "t.csv")])
        assert result.exit_code == 2
        assert "step 0" in result.stderr


class TestIvSweep:
    def test_prints_mpp_of_written_curve(self, runner, tmp_path):
        out = tmp_path / "iv.csv"
        result = runner.invoke(cli, ["iv-sweep", "--irradiance", "1000", "--points", "200", "--out", str(out)])
        assert result.exit_code == 0, result.output
        rows = read_rows(out)
        assert len(rows) == 200
        best = max(rows, key=lambda r: float(r["p"]))
        assert f"Pmpp={best['p']} W" in result.stdout
        assert f"Vmpp={best['v']} V" in result.stdout

    def test_pmpp_grows_with_irradiance(self, runner, tmp_path):
        def pmpp(g: str) -> float:
            result = runner.invoke(cli, ["iv-sweep", "--irradiance", g, "--out", str(tmp_path / f"{g}.csv")])
            return float(result.stdout.split("Pmpp=")[1].split()[0])

        assert pmpp("600") < pmpp("1000")

    def test_dark_curve(self, runner, tmp_path):
        out = tmp_path / "dark.csv"
        assert runner.invoke(cli, ["iv-sweep", "--irradiance", "0", "--out", str(out)]).exit_code == 0
        assert all(abs(float(r["i"])) < 1e-2 for r in read_rows(out))

    def test_temperature_below_absolute_zero_exit_1(self, runner, tmp_path):
        result = runner.invoke(cli, ["iv-sweep", "--temp-c=-300", "--out", str(tmp_path / "iv.csv")])
        assert result.exit_code == 1
        assert "configuration error" in result.stderr
        assert "temp_c" in result.stderr
        assert not (tmp_path / "iv.csv").exists()

    def test_several_irradiances_in_parallel(self, runner, tmp_path):
        out = tmp_path / "iv.csv"
        result = runner.invoke(
            cli,
            ["iv-sweep", "--irradiance", "600", "--irradiance", "1000", "--points", "50", "--jobs", "2", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        assert (tmp_path / "iv_g600.csv").exists()
        assert (tmp_path / "iv_g1000.csv").exists()
        assert result.stdout.count("Pmpp=") == 2


class TestMpptCompare:
    def test_empty_scenario(self, runner, tmp_path):
        out = tmp_path / "cmp.csv"
        config = scenario_file(tmp_path, "duration_s: 0\n")
        result = runner.invoke(cli, ["mppt-compare", "--config", str(config), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert out.read_text(encoding="utf-8") == "controller,cycle,time_s,g_wm2,v_ref,panel_p,mpp_p\n"
        assert result.stdout.count("cycles=0") == 3

    def test_short_run(self, runner, tmp_path):
        out = tmp_path / "cmp.csv"
        result = runner.invoke(cli, ["mppt-compare", "--config", str(scenario_file(tmp_path, SHORT)), "--out", str(out)])
        assert result.exit_code == 0, result.output
        rows = read_rows(out)
        assert len(rows) == 30
        assert [r["controller"] for r in rows[::10]] == ["po_standard", "po_printed", "ic"]


class TestPwmWave:
    @pytest.mark.parametrize("duty, mean", [("0.25", "0.25"), ("0", "0"), ("1", "1")])
    def test_mean_equals_duty(self, runner, tmp_path, duty, mean):
        out = tmp_path / "pwm.csv"
        result = runner.invoke(cli, ["pwm-wave", "--duty", duty, "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert f"mean={mean}" in result.stdout
        assert len(read_rows(out)) == 1000


class TestHelp:
    def test_config_help_lists_bundled_scenarios(self, runner):
        result = runner.invoke(cli, ["simulate", "--help"])
        assert result.exit_code == 0
        for name in ("standard", "steady_stc", "irradiance_step", "dark"):
            assert name in result.stdout
