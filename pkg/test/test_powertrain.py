import pytest

from logic.errors import DomainError
from logic.powertrain import (
    BatteryState,
    ChargeRelayConfig,
    battery_step,
    charge_relay,
    charge_update,
    open_circuit_voltage,
    terminal_voltage,
)


class TestCoulombCounting:
    def test_one_amp_hour(self):
        state = BatteryState(soc=50.0, capacity=7.0)
        assert battery_step(state, 1.0, 3600.0).soc == pytest.approx(50.0 + 100.0 / 7.0)

    def test_discharge(self):
        state = BatteryState(soc=50.0, capacity=10.0)
        assert battery_step(state, -2.0, 1800.0).soc == pytest.approx(40.0)

    def test_full_battery_curtails(self):
        update = charge_update(BatteryState(soc=100.0, capacity=7.0), 1.0, 3600.0)
        assert update.battery.soc == 100.0
        assert update.curtailed_ah == pytest.approx(1.0)
        assert update.deficit_ah == 0.0

    def test_empty_battery_deficit(self):
        update = charge_update(BatteryState(soc=1.0, capacity=10.0), -1.0, 3600.0)
        assert update.battery.soc == 0.0
        assert update.deficit_ah == pytest.approx(0.9)

    def test_ledger_balances(self):
        state = BatteryState(soc=99.5, capacity=2.0)
        update = charge_update(state, 3.0, 60.0)
        delivered_ah = 3.0 * 60.0 / 3600.0
        gained_ah = (update.battery.soc - state.soc) * state.capacity / 100.0
        assert gained_ah + update.curtailed_ah == pytest.approx(delivered_ah)

    def test_non_positive_dt(self):
        with pytest.raises(DomainError):
            charge_update(BatteryState(), 1.0, 0.0)

    def test_soc_bounds_validated(self):
        with pytest.raises(ValueError):
            BatteryState(soc=120.0)


class TestVoltage:
    @pytest.mark.parametrize("soc, expected", [(0.0, 11.4), (50.0, 12.0), (100.0, 12.6)])
    def test_open_circuit(self, soc, expected):
        assert open_circuit_voltage(BatteryState(soc=soc)) == pytest.approx(expected)

    def test_load_drops_voltage(self):
        state = BatteryState(soc=50.0, r_internal=0.05)
        assert terminal_voltage(state, 3.0) == pytest.approx(12.0 - 0.15)

    def test_charging_raises_voltage(self):
        state = BatteryState(soc=50.0)
        assert terminal_voltage(state, -1.0) > open_circuit_voltage(state)


class TestLoadRelay:
    cfg = ChargeRelayConfig(soc_reconnect=20.0, soc_cutoff=10.0)

    def test_cutoff(self):
        assert charge_relay(BatteryState(soc=9.9), self.cfg, True) is False

    def test_holds_inside_band(self):
        assert charge_relay(BatteryState(soc=15.0), self.cfg, True) is True
        assert charge_relay(BatteryState(soc=15.0), self.cfg, False) is False

    def test_reconnect(self):
        assert charge_relay(BatteryState(soc=20.0), self.cfg, False) is True

    def test_band_order(self):
        with pytest.raises(ValueError):
            ChargeRelayConfig(soc_reconnect=10.0, soc_cutoff=20.0)

    def test_aliases(self):
        cfg = ChargeRelayConfig.model_validate({"soc_reconnect_pct": 30, "soc_cutoff_pct": 5})
        assert (cfg.soc_reconnect, cfg.soc_cutoff) == (30.0, 5.0)
