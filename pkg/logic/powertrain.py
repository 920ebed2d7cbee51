"""
logic/powertrain.py
-------------------
12 V lead-acid battery and the load-disconnect relay.

Features:
- Coulomb-counting state of charge, clamped to [0, 100] %
- Linear open-circuit voltage law (±5 % around nominal) with an ohmic drop under load
- Hysteretic low-voltage disconnect for the pump loads
"""

from typing import Final, NamedTuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from logic.errors import DomainError

SECONDS_PER_HOUR: Final[float] = 3600.0

_FROZEN = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)


# ---------- Models ----------
class BatteryState(BaseModel):
    model_config = _FROZEN

    soc: float = Field(50.0, ge=0, le=100, alias="soc_pct")
    capacity: float = Field(7.0, gt=0, alias="capacity_ah")
    v_nominal: float = Field(12.0, gt=0, alias="v_nominal_v")
    r_internal: float = Field(0.05, ge=0, alias="r_internal_ohm")


class ChargeRelayConfig(BaseModel):
    model_config = _FROZEN

    soc_reconnect: float = Field(20.0, ge=0, le=100, alias="soc_reconnect_pct")
    soc_cutoff: float = Field(10.0, ge=0, le=100, alias="soc_cutoff_pct")

    @model_validator(mode="after")
    def _check_band(self) -> "ChargeRelayConfig":
        if not self.soc_cutoff < self.soc_reconnect:
            raise ValueError(
                f"soc_cutoff ({self.soc_cutoff}) must be below soc_reconnect ({self.soc_reconnect})"
            )
        return self


class ChargeUpdate(NamedTuple):
    """Battery after one step plus the charge the SOC clamp threw away (Ah)."""

    battery: BatteryState
    curtailed_ah: float
    deficit_ah: float


# ---------- Operations ----------
def charge_update(state: BatteryState, net_current: float, dt: float) -> ChargeUpdate:
    """Coulomb count over `dt`; positive current charges."""
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    unclamped = state.soc + 100.0 * (net_current * dt / SECONDS_PER_HOUR) / state.capacity
    soc = min(max(unclamped, 0.0), 100.0)
    curtailed_ah = max(unclamped - 100.0, 0.0) * state.capacity / 100.0
    deficit_ah = max(-unclamped, 0.0) * state.capacity / 100.0
    return ChargeUpdate(state.model_copy(update={"soc": soc}), curtailed_ah, deficit_ah)


def battery_step(state: BatteryState, net_current: float, dt: float) -> BatteryState:
    return charge_update(state, net_current, dt).battery


def open_circuit_voltage(state: BatteryState) -> float:
    return state.v_nominal * (0.95 + 0.1 * state.soc / 100.0)


def terminal_voltage(state: BatteryState, load_current: float) -> float:
    """OCV minus the ohmic drop; a negative load current (charging) raises the voltage."""
    return open_circuit_voltage(state) - load_current * state.r_internal


def charge_relay(state: BatteryState, cfg: ChargeRelayConfig, loads_on: bool) -> bool:
    """Loads drop out below the cutoff and come back only at the reconnect level."""
    if loads_on:
        return state.soc >= cfg.soc_cutoff
    return state.soc >= cfg.soc_reconnect
