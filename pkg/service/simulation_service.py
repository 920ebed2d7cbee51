"""
service/simulation_service.py
-----------------------------
Fixed-step closed-loop engine composing the PV array, MPPT, battery, tracker and
irrigation plant.

Features:
- Piecewise-linear environment schedules (irradiance, temperature, sun, actuator target)
- Fixed evaluation order per step; controllers read the previous step's sensors
- MPPT updated every `mppt_period_s`, physics every `dt_s`
- Conservation ledger (water, charge, energy) carried in the world state
- Deterministic: per-step sensor noise is seeded from (seed, step index)

Usage:
    records = run(scenario)                  # list[TraceRecord]
    for world, record in iter_steps(scenario):
        ...                                  # step-by-step access to the ledger
"""

import math
from typing import Iterator, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from logic.errors import StepFailure, SunPumpError, Unachievable
from logic.hydraulics import (
    PumpSpec,
    PumpState,
    PumpTarget,
    SoilPlant,
    SoilState,
    TankState,
    ThresholdConfig,
    hydraulics_step,
    pump1_controller,
    pump2_controller,
    pump_duty,
)
from logic.mppt import (
    MAX_DUTY,
    ConverterTopology,
    MpptConfig,
    MpptState,
    Topology,
    duty_for_target,
    mppt_step,
)
from logic.powertrain import (
    SECONDS_PER_HOUR,
    BatteryState,
    ChargeRelayConfig,
    charge_relay,
    charge_update,
    open_circuit_voltage,
    terminal_voltage,
)
from logic.pv_model import OperatingEnv, PvArraySpec, array_current, locate_mpp
from logic.tracker import (
    MotionCommand,
    PidState,
    SunModel,
    TiltMode,
    TrackerConfig,
    TrackerPose,
    angle_to_pulse_width,
    azimuth_deg,
    elevation_step,
    incidence_cosine,
    ldr_readings,
    servo_tilt_step,
    stepper_step,
    tracker_decide,
)
from utils.logger import logger
from utils.units import celsius_to_kelvin

_STRICT = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

Schedule = list[tuple[float, float]]


# ---------- Scenario ----------
class EnvProfile(BaseModel):
    """Knot lists of (time_s, value); a bare number means a constant schedule."""

    model_config = _STRICT

    irradiance_wm2: Schedule = Field(default_factory=lambda: [(0.0, 1000.0)])
    cell_temp_c: Schedule = Field(default_factory=lambda: [(0.0, 25.0)])
    sun_azimuth_deg: Schedule = Field(default_factory=lambda: [(0.0, 180.0)])
    sun_elevation_deg: Schedule = Field(default_factory=lambda: [(0.0, 45.0)])
    elevation_target_mm: Schedule = Field(default_factory=lambda: [(0.0, 0.0)])

    @field_validator("*", mode="before")
    @classmethod
    def _constant(cls, value):
        if isinstance(value, (int, float)):
            return [(0.0, float(value))]
        return value

    @field_validator("*")
    @classmethod
    def _increasing(cls, value: Schedule) -> Schedule:
        if not value:
            raise ValueError("a schedule needs at least one knot")
        times = [t for t, _ in value]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("schedule times must be strictly increasing")
        return value

    @field_validator("cell_temp_c")
    @classmethod
    def _above_absolute_zero(cls, value: Schedule) -> Schedule:
        for _, temp_c in value:
            celsius_to_kelvin(temp_c)
        return value


class ConverterConfig(BaseModel):
    model_config = _STRICT

    topology: Topology = Topology.IDEAL_BUCK
    efficiency: float = Field(0.95, gt=0, le=1)


class InitialState(BaseModel):
    model_config = _STRICT

    pose: TrackerPose = Field(default_factory=TrackerPose)
    v_ref: float = Field(17.0, alias="v_ref_v")
    loads_on: bool = True
    pump1_on: bool = False
    pump2_on: bool = False


class Scenario(BaseModel):
    model_config = _STRICT

    duration_s: float = Field(600.0, ge=0)
    dt_s: float = Field(0.1, gt=0)
    mppt_period_s: float = Field(1.0, gt=0)
    seed: int = 0
    env: EnvProfile = Field(default_factory=EnvProfile)
    pv: PvArraySpec = Field(default_factory=PvArraySpec)
    mppt: MpptConfig = Field(default_factory=MpptConfig)
    converter: ConverterConfig = Field(default_factory=ConverterConfig)
    battery: BatteryState = Field(default_factory=BatteryState)
    relay: ChargeRelayConfig = Field(default_factory=ChargeRelayConfig)
    thresholds: ThresholdConfig = Field(default_factory=ThresholdConfig)
    pump1: PumpSpec = Field(default_factory=PumpSpec)
    pump2: PumpSpec = Field(default_factory=PumpSpec)
    tank1: TankState = Field(default_factory=lambda: TankState(volume=13.8))
    tank2: TankState = Field(default_factory=lambda: TankState(volume=6.9))
    soil: SoilState = Field(default_factory=lambda: SoilState(moisture_fraction=0.4))
    plant: SoilPlant = Field(default_factory=SoilPlant)
    tracker: TrackerConfig = Field(default_factory=TrackerConfig)
    initial: InitialState = Field(default_factory=InitialState)

    @model_validator(mode="after")
    def _check_timing(self) -> "Scenario":
        if self.duration_s > 0 and self.dt_s > self.duration_s:
            raise ValueError(f"dt_s ({self.dt_s}) must not exceed duration_s ({self.duration_s})")
        return self

    @property
    def step_count(self) -> int:
        """ceil(duration / dt), tolerant of binary rounding in the quotient."""
        return max(0, math.ceil(self.duration_s / self.dt_s - 1e-9))

    @property
    def mppt_every(self) -> int:
        return max(1, round(self.mppt_period_s / self.dt_s))


# ---------- World & trace ----------
class Ledger(BaseModel):
    """Cumulative totals used by the conservation checks."""

    model_config = ConfigDict(frozen=True)

    delivered_l: float = 0.0
    net_charge_ah: float = 0.0
    curtailed_ah: float = 0.0
    deficit_ah: float = 0.0
    panel_wh: float = 0.0
    stored_wh: float = 0.0
    load_wh: float = 0.0
    curtailed_wh: float = 0.0
    blocked_steps: int = 0


class WorldState(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: int = 0
    battery: BatteryState
    tank1: TankState
    tank2: TankState
    soil: SoilState
    pumps: tuple[PumpState, PumpState]
    pose: TrackerPose
    mppt: MpptState
    pid: PidState = Field(default_factory=PidState)
    loads_on: bool = True
    ledger: Ledger = Field(default_factory=Ledger)


class TraceRecord(BaseModel):
    """One row of the trace; field order is the CSV column order."""

    model_config = ConfigDict(frozen=True)

    time_s: float
    g_wm2: float
    t_k: float
    panel_v: float
    panel_i: float
    panel_p: float
    v_ref: float
    duty: float
    soc_pct: float
    batt_v: float
    tank1_pct: float
    tank2_pct: float
    soil_raw: float
    soil_pct: float
    pump1_relay: bool
    pump1_duty: float
    pump1_rpm: float
    pump2_relay: bool
    pump2_duty: float
    pump2_rpm: float
    azimuth_deg: float
    tilt_deg: float
    elevation_mm: float
    curtailed_wh: float


TRACE_COLUMNS: list[str] = list(TraceRecord.model_fields)


class EnvSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    g: float
    t_k: float
    sun: SunModel
    elevation_target_mm: float


# ---------- Environment ----------
def _interp(schedule: Schedule, t: float) -> float:
    times, values = zip(*schedule)
    return float(np.interp(t, times, values))


def env_at(profile: EnvProfile, t: float) -> EnvSample:
    """Linear interpolation between knots, held flat beyond the ends."""
    g = max(0.0, _interp(profile.irradiance_wm2, t))
    elevation = min(max(_interp(profile.sun_elevation_deg, t), 0.0), 90.0)
    return EnvSample(
        g=g,
        t_k=celsius_to_kelvin(_interp(profile.cell_temp_c, t)),
        sun=SunModel(azimuth_deg=_interp(profile.sun_azimuth_deg, t), elevation_deg=elevation, g=g),
        elevation_target_mm=_interp(profile.elevation_target_mm, t),
    )


# ---------- Engine ----------
def initial_world(scenario: Scenario) -> WorldState:
    init = scenario.initial
    return WorldState(
        battery=scenario.battery,
        tank1=scenario.tank1,
        tank2=scenario.tank2,
        soil=scenario.soil,
        pumps=(
            PumpState(relay_on=init.pump1_on, spec=scenario.pump1),
            PumpState(relay_on=init.pump2_on, spec=scenario.pump2),
        ),
        pose=init.pose,
        mppt=MpptState.start(init.v_ref, scenario.mppt),
        loads_on=init.loads_on,
    )


def _move_tracker(world: WorldState, scenario: Scenario, sample: EnvSample) -> tuple[TrackerPose, PidState]:
    cfg = scenario.tracker
    dt = scenario.dt_s
    quad = ldr_readings(sample.sun, world.pose, noise_seed=[scenario.seed, world.step], cfg=cfg)
    cmd = tracker_decide(quad, cfg.tolerance)
    pid = world.pid
    if cfg.tilt_mode is TiltMode.SERVO:
        pose = stepper_step(world.pose, MotionCommand(cmd.azimuth, 0), cfg.stepper, cfg.tilt_rate, dt)
        target_pw = angle_to_pulse_width(sample.sun.elevation_deg, cfg.pulse_map)
        pose, pid = servo_tilt_step(pose, pid, target_pw, cfg, dt)
    else:
        pose = stepper_step(world.pose, cmd, cfg.stepper, cfg.tilt_rate, dt)
    pose = elevation_step(pose, sample.elevation_target_mm, cfg.elevation_rate, dt, cfg.stroke)
    return pose, pid


def _operate_panel(
    scenario: Scenario, env: OperatingEnv, v: float, battery_v: float
) -> tuple[float, float, bool]:
    """(current, converter duty, blocked) with the panel held at `v`."""
    topology = ConverterTopology(kind=scenario.converter.topology)
    try:
        duty = duty_for_target(v, battery_v, topology)
    except Unachievable:
        duty = MAX_DUTY if topology.kind is Topology.IDEAL_BUCK else 0.0
        return 0.0, duty, True
    # blocking diode: the panel never sinks current
    return max(array_current(scenario.pv, env, v), 0.0), duty, False


def sim_step(world: WorldState, scenario: Scenario, t: float) -> tuple[WorldState, TraceRecord]:
    dt = scenario.dt_s
    th = scenario.thresholds

    # (1) environment, (2) tracker
    sample = env_at(scenario.env, t)
    pose, pid = _move_tracker(world, scenario, sample)

    # (3) panel operating point at the converter-imposed voltage
    g_poa = sample.g * incidence_cosine(sample.sun, pose, scenario.tracker.stepper)
    env = OperatingEnv(irradiance=g_poa, cell_temp=sample.t_k)
    ocv = open_circuit_voltage(world.battery)
    v = world.mppt.v_ref
    i, duty, blocked = _operate_panel(scenario, env, v, ocv)
    p = v * i

    # (4) MPPT on its own cadence
    mppt = world.mppt
    if world.step % scenario.mppt_every == 0:
        mppt = mppt_step(mppt, v, i, scenario.mppt)

    # (5) relays and duties from the previous step's sensors
    loads_on = charge_relay(world.battery, scenario.relay, world.loads_on)
    level2 = world.tank2.level_pct
    pump1_on = pump1_controller(level2, world.pumps[0].relay_on, th)
    pump2_on = pump2_controller(world.soil, world.pumps[1].relay_on, th)
    duty1 = pump_duty(level2, pump1_on, th, PumpTarget.TANK) if loads_on else 0.0
    duty2 = pump_duty(world.soil.pct, pump2_on, th, PumpTarget.SOIL) if loads_on else 0.0
    pumps = (
        PumpState(relay_on=pump1_on, duty=duty1, spec=scenario.pump1),
        PumpState(relay_on=pump2_on, duty=duty2, spec=scenario.pump2),
    )
    if pump1_on != world.pumps[0].relay_on or pump2_on != world.pumps[1].relay_on:
        logger.debug(
            "relays at t={:.2f}s: pump1={} (tank2 {:.2f}%), pump2={} (soil raw {:.1f})",
            t, pump1_on, level2, pump2_on, world.soil.raw,
        )

    # (6) water
    hyd = hydraulics_step(world.tank1, world.tank2, world.soil, pumps, dt, scenario.plant)

    # (7) battery
    charge_current = scenario.converter.efficiency * p / ocv
    load_current = pumps[0].current + pumps[1].current
    net = charge_current - load_current
    update = charge_update(world.battery, net, dt)
    batt_v = terminal_voltage(world.battery, load_current - charge_current)
    if update.curtailed_ah > 0:
        logger.debug("battery full at t={:.2f}s: {:.3g} Ah curtailed", t, update.curtailed_ah)

    hours = dt / SECONDS_PER_HOUR
    led = world.ledger
    ledger = Ledger(
        delivered_l=led.delivered_l + hyd.delivered_l,
        net_charge_ah=led.net_charge_ah + net * hours,
        curtailed_ah=led.curtailed_ah + update.curtailed_ah,
        deficit_ah=led.deficit_ah + update.deficit_ah,
        panel_wh=led.panel_wh + p * hours,
        stored_wh=led.stored_wh + net * ocv * hours,
        load_wh=led.load_wh + load_current * ocv * hours,
        curtailed_wh=led.curtailed_wh + update.curtailed_ah * ocv,
        blocked_steps=led.blocked_steps + int(blocked),
    )

    new_world = WorldState(
        step=world.step + 1,
        battery=update.battery,
        tank1=hyd.tank1,
        tank2=hyd.tank2,
        soil=hyd.soil,
        pumps=pumps,
        pose=pose,
        mppt=mppt,
        pid=pid,
        loads_on=loads_on,
        ledger=ledger,
    )

    # (8) record
    record = TraceRecord(
        time_s=world.step * dt,
        g_wm2=g_poa,
        t_k=sample.t_k,
        panel_v=v,
        panel_i=i,
        panel_p=p,
        v_ref=mppt.v_ref,
        duty=duty,
        soc_pct=update.battery.soc,
        batt_v=batt_v,
        tank1_pct=hyd.tank1.level_pct,
        tank2_pct=hyd.tank2.level_pct,
        soil_raw=hyd.soil.raw,
        soil_pct=hyd.soil.pct,
        pump1_relay=pump1_on,
        pump1_duty=duty1,
        pump1_rpm=pumps[0].speed,
        pump2_relay=pump2_on,
        pump2_duty=duty2,
        pump2_rpm=pumps[1].speed,
        azimuth_deg=azimuth_deg(pose, scenario.tracker.stepper),
        tilt_deg=pose.tilt_deg,
        elevation_mm=pose.elevation_mm,
        curtailed_wh=ledger.curtailed_wh,
    )
    return new_world, record


def iter_steps(scenario: Scenario) -> Iterator[tuple[WorldState, TraceRecord]]:
    """Yield (world after the step, record) for every step of the scenario."""
    world = initial_world(scenario)
    warned = False
    for k in range(scenario.step_count):
        t = k * scenario.dt_s
        try:
            world, record = sim_step(world, scenario, t)
        except SunPumpError as e:
            raise StepFailure(k, t, e) from e
        if world.ledger.blocked_steps and not warned:
            logger.warning(
                "⚠️ converter cannot reach the battery from v_ref={:.3g} V ({}); no charge transferred",
                record.panel_v,
                scenario.converter.topology.value,
            )
            warned = True
        yield world, record


def run(scenario: Scenario) -> list[TraceRecord]:
    """Run the whole scenario and return one record per step."""
    logger.info("▶️ simulating {} steps (dt={} s)", scenario.step_count, scenario.dt_s)
    records = [record for _, record in iter_steps(scenario)]
    logger.info("✅ simulation finished ({} records)", len(records))
    return records


# ---------- Summary ----------
class RunSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    records: int
    final_soc_pct: float
    pump1_on_s: float
    pump2_on_s: float
    panel_wh: float
    stored_wh: float
    load_wh: float
    curtailed_wh: float
    delivered_l: float
    mppt_efficiency: Optional[float]


def mppt_efficiency(scenario: Scenario, records: list[TraceRecord], n_points: int = 100) -> Optional[float]:
    """Delivered over reference MPP power, summed over the MPPT update steps."""
    every = scenario.mppt_every
    cache: dict[tuple[float, float], float] = {}
    delivered = reference = 0.0
    for k, record in enumerate(records):
        if k % every or record.g_wm2 <= 0:
            continue
        key = (record.g_wm2, record.t_k)
        if key not in cache:
            env = OperatingEnv(irradiance=record.g_wm2, cell_temp=record.t_k)
            cache[key] = locate_mpp(scenario.pv, env, n_points).p
        delivered += record.panel_p
        reference += cache[key]
    return delivered / reference if reference > 0 else None


def simulate(scenario: Scenario) -> tuple[list[TraceRecord], RunSummary]:
    """`run` plus the end-of-run totals printed by the CLI."""
    logger.info("▶️ simulating {} steps (dt={} s)", scenario.step_count, scenario.dt_s)
    world = initial_world(scenario)
    records: list[TraceRecord] = []
    for world, record in iter_steps(scenario):
        records.append(record)
    led = world.ledger
    summary = RunSummary(
        records=len(records),
        final_soc_pct=world.battery.soc,
        pump1_on_s=sum(r.pump1_relay for r in records) * scenario.dt_s,
        pump2_on_s=sum(r.pump2_relay for r in records) * scenario.dt_s,
        panel_wh=led.panel_wh,
        stored_wh=led.stored_wh,
        load_wh=led.load_wh,
        curtailed_wh=led.curtailed_wh,
        delivered_l=led.delivered_l,
        mppt_efficiency=mppt_efficiency(scenario, records),
    )
    logger.info("✅ simulation finished ({} records)", len(records))
    return records, summary
