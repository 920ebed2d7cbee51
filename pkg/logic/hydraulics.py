"""
logic/hydraulics.py
-------------------
Two-tank irrigation plant: level sensing, soil moisture, relay pumps and PWM speed control.

Features:
- Ultrasonic level geometry (distance from the lid shrinks as the tank fills)
- Soil classification Wet / Humid / Dry on raw sensor counts
- Hysteretic relay controllers for the transfer pump (tank 2 level) and the irrigation pump (soil)
- Duty taper from full speed to 50 % between the taper start and the off threshold
- PWM square wave whose period average equals the duty
- Mass-conserving step: tank 1 -> tank 2 -> soil, with soil evaporation
"""

import math
from enum import Enum
from typing import Final, NamedTuple

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from logic.errors import DomainError
from utils.units import ADC_FULL_SCALE, soil_pct_to_raw, soil_raw_to_pct

TAPER_FLOOR: Final[float] = 0.5
SECONDS_PER_MINUTE: Final[float] = 60.0

_FROZEN = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)


class SoilClass(str, Enum):
    WET = "wet"
    HUMID = "humid"
    DRY = "dry"


class PumpTarget(str, Enum):
    TANK = "tank"
    SOIL = "soil"


# ---------- Models ----------
class TankState(BaseModel):
    model_config = _FROZEN

    volume: float = Field(ge=0, alias="volume_l")
    capacity: float = Field(13.8, gt=0, alias="capacity_l")
    height: float = Field(0.3, gt=0, alias="height_m")

    @model_validator(mode="after")
    def _check_volume(self) -> "TankState":
        if self.volume > self.capacity:
            raise ValueError(f"volume {self.volume} L exceeds capacity {self.capacity} L")
        return self

    @property
    def level_pct(self) -> float:
        return 100.0 * self.volume / self.capacity

    @property
    def free_space(self) -> float:
        return self.capacity - self.volume


class SoilState(BaseModel):
    """Plant-side moisture; the sensor reading is derived, so the two never disagree."""

    model_config = _FROZEN

    moisture_fraction: float = Field(ge=0, le=1)

    @computed_field
    @property
    def raw(self) -> float:
        return ADC_FULL_SCALE * (1.0 - self.moisture_fraction)

    @property
    def pct(self) -> float:
        return 100.0 * self.moisture_fraction

    @classmethod
    def from_raw(cls, raw: float) -> "SoilState":
        if not 0.0 <= raw <= ADC_FULL_SCALE:
            raise DomainError(f"soil reading {raw!r} outside [0, {ADC_FULL_SCALE:g}]")
        return cls(moisture_fraction=1.0 - raw / ADC_FULL_SCALE)


class PumpSpec(BaseModel):
    model_config = _FROZEN

    max_flow: float = Field(4.0, gt=0, alias="max_flow_l_min")
    max_speed: float = Field(3500.0, gt=0, alias="max_speed_rpm")
    rated_current: float = Field(3.0, ge=0, alias="rated_current_a")


class PumpState(BaseModel):
    model_config = _FROZEN

    relay_on: bool = False
    duty: float = Field(0.0, ge=0, le=1)
    spec: PumpSpec = Field(default_factory=PumpSpec)

    @property
    def speed(self) -> float:
        """rpm; zero whenever the relay is open."""
        return self.duty * self.spec.max_speed if self.relay_on else 0.0

    @property
    def flow(self) -> float:
        """L/min, proportional to speed."""
        return self.speed / self.spec.max_speed * self.spec.max_flow

    @property
    def current(self) -> float:
        """Battery draw in A."""
        return self.duty * self.spec.rated_current if self.relay_on else 0.0


class ThresholdConfig(BaseModel):
    model_config = _FROZEN

    tank_on_pct: float = Field(10.0, ge=0, le=100)
    tank_off_pct: float = Field(85.0, ge=0, le=100)
    soil_wet: float = Field(500.0, ge=0, le=ADC_FULL_SCALE, alias="soil_wet_raw")
    soil_dry: float = Field(750.0, ge=0, le=ADC_FULL_SCALE, alias="soil_dry_raw")
    taper_start_tank_pct: float = Field(60.0, ge=0, le=100)
    taper_start_soil: float = Field(soil_pct_to_raw(50.0), ge=0, le=ADC_FULL_SCALE, alias="taper_start_soil_raw")

    @model_validator(mode="after")
    def _check_order(self) -> "ThresholdConfig":
        if not self.tank_on_pct < self.taper_start_tank_pct < self.tank_off_pct:
            raise ValueError(
                "tank thresholds must satisfy tank_on_pct < taper_start_tank_pct < tank_off_pct "
                f"(got {self.tank_on_pct}, {self.taper_start_tank_pct}, {self.tank_off_pct})"
            )
        if not self.soil_wet < self.soil_dry:
            raise ValueError(f"soil_wet ({self.soil_wet}) must be below soil_dry ({self.soil_dry})")
        if not self.soil_wet < self.taper_start_soil <= self.soil_dry:
            raise ValueError("taper_start_soil must lie in (soil_wet, soil_dry]")
        return self


PRESETS: Final[dict[str, ThresholdConfig]] = {
    "system-model": ThresholdConfig(),
    "results": ThresholdConfig(
        tank_on_pct=20.0,
        tank_off_pct=90.0,
        soil_wet=soil_pct_to_raw(90.0),
        soil_dry=soil_pct_to_raw(30.0),
    ),
}


class SoilPlant(BaseModel):
    """Soil response to delivered water and evaporation."""

    model_config = _FROZEN

    k_soil: float = Field(0.02, ge=0, alias="k_soil_per_l")
    k_evap: float = Field(2e-4, ge=0, alias="k_evap_per_s")


class HydraulicsUpdate(NamedTuple):
    tank1: TankState
    tank2: TankState
    soil: SoilState
    transferred_l: float
    delivered_l: float


# ---------- Sensing & control ----------
def ultrasonic_level(tank: TankState) -> tuple[float, float]:
    """(distance from the lid in m, level in %)."""
    fill = tank.volume / tank.capacity
    return tank.height * (1.0 - fill), 100.0 * fill


def pump1_controller(level_pct: float, relay_on: bool, cfg: ThresholdConfig) -> bool:
    if level_pct < cfg.tank_on_pct:
        return True
    if level_pct >= cfg.tank_off_pct:
        return False
    return relay_on


def soil_class(raw: float, cfg: ThresholdConfig) -> SoilClass:
    if raw < cfg.soil_wet:
        return SoilClass.WET
    if raw > cfg.soil_dry:
        return SoilClass.DRY
    return SoilClass.HUMID


def pump2_controller(soil: SoilState, relay_on: bool, cfg: ThresholdConfig) -> bool:
    cls = soil_class(soil.raw, cfg)
    if cls is SoilClass.DRY:
        return True
    if cls is SoilClass.WET:
        return False
    return relay_on


def pump_duty(
    measure_pct: float,
    relay_on: bool,
    cfg: ThresholdConfig,
    target: PumpTarget = PumpTarget.TANK,
) -> float:
    """
    Full speed up to the taper start, then linear down to 50 % at the off threshold.

    `measure_pct` is the tank 2 level for the transfer pump and the soil moisture percent
    for the irrigation pump; soil thresholds are mapped from counts to percent.
    """
    if not relay_on:
        return 0.0
    if target is PumpTarget.TANK:
        start, stop = cfg.taper_start_tank_pct, cfg.tank_off_pct
    else:
        start, stop = soil_raw_to_pct(cfg.taper_start_soil), soil_raw_to_pct(cfg.soil_wet)
    if measure_pct <= start:
        return 1.0
    fraction = min((measure_pct - start) / (stop - start), 1.0)
    return 1.0 - (1.0 - TAPER_FLOOR) * fraction


def pwm_wave(duty: float, freq: float, t: float) -> int:
    """1 while the phase within the period is below `duty`, else 0."""
    if freq <= 0:
        raise DomainError(f"PWM frequency must be positive, got {freq!r}")
    phase = (t * freq) % 1.0
    return 1 if phase < duty else 0


# ---------- Plant ----------
def hydraulics_step(
    tank1: TankState,
    tank2: TankState,
    soil: SoilState,
    pumps: tuple[PumpState, PumpState],
    dt: float,
    plant: SoilPlant | None = None,
) -> HydraulicsUpdate:
    """
    Advance the water path by `dt` seconds.

    Pump 1 moves water tank 1 -> tank 2 (limited by what tank 1 holds and tank 2 can take);
    pump 2 then moves water tank 2 -> soil. Water is never created or destroyed: the
    delivered volume is returned for the caller's ledger.
    """
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    plant = plant or SoilPlant()
    pump1, pump2 = pumps

    transferred = min(pump1.flow * dt / SECONDS_PER_MINUTE, tank1.volume, tank2.free_space)
    v1 = tank1.volume - transferred
    v2 = tank2.volume + transferred

    delivered = min(pump2.flow * dt / SECONDS_PER_MINUTE, v2)
    v2 -= delivered

    moisture = (soil.moisture_fraction + plant.k_soil * delivered) * math.exp(-plant.k_evap * dt)
    moisture = min(max(moisture, 0.0), 1.0)

    return HydraulicsUpdate(
        tank1=tank1.model_copy(update={"volume": max(v1, 0.0)}),
        tank2=tank2.model_copy(update={"volume": min(max(v2, 0.0), tank2.capacity)}),
        soil=SoilState(moisture_fraction=moisture),
        transferred_l=transferred,
        delivered_l=delivered,
    )
