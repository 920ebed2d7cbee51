"""
logic/tracker.py
----------------
Sun tracker: four-quadrant light sensing, the positioning decision, axis kinematics and
the servo (pulse-width + PID) path for the tilt axis.

Features:
- Cosine-response LDR model with quadrant normals tipped along the two drive directions
- Averages-and-deadband decision producing one azimuth step / tilt direction per cycle
- Stepper azimuth (200 steps/rev, 1.8°), rate-limited DC-motor tilt, linear-actuator elevation
- Linear pulse-width <-> angle map and a clamped-integral PID controller

Geometry: x east, y north, z up; azimuth measured clockwise from north. Tilt is the
elevation of the panel normal on a 0–180° arc (90° faces the zenith).
"""

import math
from collections.abc import Sequence
from enum import Enum
from typing import Final, Literal, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from logic.errors import DomainError, OutOfRange

ADC_MAX: Final[float] = 1023.0
TILT_MIN: Final[float] = 0.0
TILT_MAX: Final[float] = 180.0

_FROZEN = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

Direction = Literal[-1, 0, 1]


class TiltMode(str, Enum):
    LDR = "ldr"
    SERVO = "servo"


# ---------- Models ----------
class LdrQuad(BaseModel):
    model_config = _FROZEN

    ne: float = Field(ge=0, le=ADC_MAX)
    nw: float = Field(ge=0, le=ADC_MAX)
    se: float = Field(ge=0, le=ADC_MAX)
    sw: float = Field(ge=0, le=ADC_MAX)


class TrackerPose(BaseModel):
    model_config = _FROZEN

    azimuth_steps: int = 100
    tilt_deg: float = Field(45.0, ge=TILT_MIN, le=TILT_MAX)
    elevation_mm: float = Field(0.0, ge=0)


class StepperSpec(BaseModel):
    model_config = _FROZEN

    steps_per_rev: int = Field(200, ge=1)
    step_deg: float = Field(1.8, gt=0)

    @model_validator(mode="after")
    def _check_revolution(self) -> "StepperSpec":
        if not math.isclose(self.steps_per_rev * self.step_deg, 360.0):
            raise ValueError("steps_per_rev · step_deg must equal 360°")
        return self


class PulseWidthMap(BaseModel):
    model_config = _FROZEN

    pw_min: float = Field(1.25, alias="pw_min_ms")
    pw_max: float = Field(1.75, alias="pw_max_ms")
    angle_min: float = Field(0.0, alias="angle_min_deg")
    angle_max: float = Field(180.0, alias="angle_max_deg")

    @model_validator(mode="after")
    def _check_span(self) -> "PulseWidthMap":
        if not self.pw_min < self.pw_max:
            raise ValueError("pw_min must be below pw_max")
        if not self.angle_min < self.angle_max:
            raise ValueError("angle_min must be below angle_max")
        return self


class PidGains(BaseModel):
    model_config = _FROZEN

    kp: float = 0.05
    ki: float = 0.0
    kd: float = 0.0
    integral_limit: float = Field(100.0, gt=0)


class PidState(BaseModel):
    model_config = _FROZEN

    integral: float = 0.0
    prev_error: float = 0.0


class SunModel(BaseModel):
    model_config = _FROZEN

    azimuth_deg: float = 180.0
    elevation_deg: float = Field(45.0, ge=0, le=90)
    g: float = Field(1000.0, ge=0)


class TrackerConfig(BaseModel):
    """Sensor and drive parameters of the tracker."""

    model_config = _FROZEN

    offset_deg: float = Field(15.0, gt=0, lt=90)
    tolerance: float = Field(20.0, ge=0, alias="tolerance_counts")
    noise_counts: float = Field(0.0, ge=0)
    rated_rpm: float = Field(12.0, gt=0)
    tilt_drive_duty: float = Field(0.025, gt=0, le=1)
    tilt_mode: TiltMode = TiltMode.LDR
    stepper: StepperSpec = Field(default_factory=StepperSpec)
    pulse_map: PulseWidthMap = Field(default_factory=PulseWidthMap)
    pid: PidGains = Field(default_factory=PidGains)
    stroke: float = Field(300.0, gt=0, alias="stroke_mm")
    elevation_rate: float = Field(2.0, gt=0, alias="elevation_rate_mm_s")

    @property
    def tilt_rate(self) -> float:
        """Tilt speed in °/s: rated output speed scaled by the drive duty."""
        return self.rated_rpm * 6.0 * self.tilt_drive_duty


class MotionCommand(NamedTuple):
    azimuth: Direction
    tilt: Direction


# ---------- Geometry ----------
def _horizontal(azimuth_deg: float) -> np.ndarray:
    a = math.radians(azimuth_deg)
    return np.array([math.sin(a), math.cos(a), 0.0])


def sun_vector(sun: SunModel) -> np.ndarray:
    el = math.radians(sun.elevation_deg)
    return math.cos(el) * _horizontal(sun.azimuth_deg) + np.array([0.0, 0.0, math.sin(el)])


def azimuth_deg(pose: TrackerPose, stepper: StepperSpec | None = None) -> float:
    """Panel azimuth in [0, 360)."""
    spec = stepper or StepperSpec()
    return (pose.azimuth_steps * spec.step_deg) % 360.0


def panel_frame(pose: TrackerPose, stepper: StepperSpec | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    (normal, up, right) of the panel.

    `up` is the direction the normal moves as tilt grows; `right` the direction it moves
    as azimuth grows, with length cos(tilt) so that it vanishes facing the zenith.
    """
    az = azimuth_deg(pose, stepper)
    t = math.radians(pose.tilt_deg)
    h = _horizontal(az)
    z = np.array([0.0, 0.0, 1.0])
    normal = math.cos(t) * h + math.sin(t) * z
    up = -math.sin(t) * h + math.cos(t) * z
    right = math.cos(t) * _horizontal(az + 90.0)
    return normal, up, right


def incidence_cosine(sun: SunModel, pose: TrackerPose, stepper: StepperSpec | None = None) -> float:
    """cos of the angle between panel normal and sun, floored at 0."""
    normal, _, _ = panel_frame(pose, stepper)
    return max(0.0, float(normal @ sun_vector(sun)))


# ---------- Sensing & decision ----------
def ldr_readings(
    sun: SunModel,
    pose: TrackerPose,
    noise_seed: int | Sequence[int] | None = None,
    cfg: TrackerConfig | None = None,
) -> LdrQuad:
    """
    Quadrant readings: 1023·g/1000·max(0, cos) for each tipped quadrant normal.

    North quadrants are tipped toward +tilt, east quadrants toward +azimuth. Noise is
    uniform in ±noise_counts drawn from `noise_seed`; readings are clipped to the ADC range.
    """
    cfg = cfg or TrackerConfig()
    normal, up, right = panel_frame(pose, cfg.stepper)
    s = sun_vector(sun)
    t = math.tan(math.radians(cfg.offset_deg))
    scale = ADC_MAX * sun.g / 1000.0

    def reading(tip_up: float, tip_right: float) -> float:
        n = normal + t * tip_up * up + t * tip_right * right
        return scale * max(0.0, float(n @ s) / float(np.linalg.norm(n)))

    values = np.array([reading(1, 1), reading(1, -1), reading(-1, 1), reading(-1, -1)])
    if cfg.noise_counts > 0 and noise_seed is not None:
        rng = np.random.default_rng(noise_seed)
        values = values + rng.uniform(-cfg.noise_counts, cfg.noise_counts, size=4)
    values = np.clip(values, 0.0, ADC_MAX)
    return LdrQuad(ne=values[0], nw=values[1], se=values[2], sw=values[3])


def _sign_outside(diff: float, tolerance: float) -> Direction:
    if abs(diff) <= tolerance:
        return 0
    return 1 if diff > 0 else -1


def tracker_decide(quad: LdrQuad, tolerance: float) -> MotionCommand:
    """Compare top/bottom and right/left quadrant averages against the deadband."""
    avg_top = (quad.ne + quad.nw) / 2.0
    avg_bottom = (quad.se + quad.sw) / 2.0
    avg_left = (quad.nw + quad.sw) / 2.0
    avg_right = (quad.ne + quad.se) / 2.0
    return MotionCommand(
        azimuth=_sign_outside(avg_right - avg_left, tolerance),
        tilt=_sign_outside(avg_top - avg_bottom, tolerance),
    )


def deadband_angle(tolerance: float, offset_deg: float, g: float = 1000.0) -> float:
    """
    Pointing error (deg) in the tilt plane at which the top/bottom difference equals
    `tolerance`; 90° if the deadband can never be left.
    """
    t = math.tan(math.radians(offset_deg))
    gain = 2.0 * ADC_MAX * g / 1000.0 * t / math.sqrt(1.0 + 2.0 * t * t)
    if gain <= 0 or tolerance >= gain:
        return 90.0
    return math.degrees(math.asin(tolerance / gain))


# ---------- Kinematics ----------
def stepper_step(
    pose: TrackerPose,
    cmd: MotionCommand,
    spec: StepperSpec | None = None,
    tilt_rate: float = 1.8,
    dt: float = 0.1,
) -> TrackerPose:
    """One azimuth step per cycle; tilt moves at `tilt_rate` °/s, clamped to [0, 180]."""
    steps = (spec or StepperSpec()).steps_per_rev
    tilt = min(max(pose.tilt_deg + cmd.tilt * tilt_rate * dt, TILT_MIN), TILT_MAX)
    return pose.model_copy(update={"azimuth_steps": (pose.azimuth_steps + cmd.azimuth) % steps, "tilt_deg": tilt})


def elevation_step(pose: TrackerPose, target_mm: float, rate_mm_s: float, dt: float, stroke_mm: float = 300.0) -> TrackerPose:
    """Move the linear actuator toward `target_mm` by at most rate·dt, within [0, stroke]."""
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    target = min(max(target_mm, 0.0), stroke_mm)
    delta = target - pose.elevation_mm
    reach = rate_mm_s * dt
    moved = target if abs(delta) <= reach else pose.elevation_mm + math.copysign(reach, delta)
    return pose.model_copy(update={"elevation_mm": moved})


# ---------- Servo path ----------
def pulse_width_to_angle(pw: float, pw_map: PulseWidthMap | None = None) -> float:
    m = pw_map or PulseWidthMap()
    if not m.pw_min <= pw <= m.pw_max:
        raise OutOfRange(f"pulse width {pw!r} ms outside [{m.pw_min}, {m.pw_max}] ms")
    return m.angle_min + (m.angle_max - m.angle_min) * (pw - m.pw_min) / (m.pw_max - m.pw_min)


def angle_to_pulse_width(angle: float, pw_map: PulseWidthMap | None = None) -> float:
    m = pw_map or PulseWidthMap()
    if not m.angle_min <= angle <= m.angle_max:
        raise OutOfRange(f"angle {angle!r}° outside [{m.angle_min}, {m.angle_max}]°")
    return m.pw_min + (m.pw_max - m.pw_min) * (angle - m.angle_min) / (m.angle_max - m.angle_min)


def pid_step(gains: PidGains, state: PidState, error: float, dt: float) -> tuple[float, PidState]:
    """Rectangle-rule PID with the integral clamped to ±integral_limit."""
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    integral = min(max(state.integral + error * dt, -gains.integral_limit), gains.integral_limit)
    derivative = (error - state.prev_error) / dt
    control = gains.kp * error + gains.ki * integral + gains.kd * derivative
    return control, PidState(integral=integral, prev_error=error)


def servo_tilt_step(
    pose: TrackerPose,
    pid_state: PidState,
    target_pw: float,
    cfg: TrackerConfig,
    dt: float,
) -> tuple[TrackerPose, PidState]:
    """
    Drive the tilt toward the angle encoded by `target_pw`.

    The actual angle is read back through the pulse-width map, the angle error feeds the
    PID, and the control (clipped to ±1) scales the tilt rate.
    """
    desired = pulse_width_to_angle(target_pw, cfg.pulse_map)
    actual = pulse_width_to_angle(angle_to_pulse_width(pose.tilt_deg, cfg.pulse_map), cfg.pulse_map)
    control, pid_state = pid_step(cfg.pid, pid_state, desired - actual, dt)
    drive = min(max(control, -1.0), 1.0)
    tilt = min(max(pose.tilt_deg + drive * cfg.tilt_rate * dt, TILT_MIN), TILT_MAX)
    return pose.model_copy(update={"tilt_deg": tilt}), pid_state


def tracker_cycle(
    sun: SunModel,
    pose: TrackerPose,
    cfg: TrackerConfig,
    dt: float,
    noise_seed: int | Sequence[int] | None = None,
) -> tuple[TrackerPose, LdrQuad, MotionCommand]:
    """Sense, decide and move once (LDR mode for both axes)."""
    quad = ldr_readings(sun, pose, noise_seed, cfg)
    cmd = tracker_decide(quad, cfg.tolerance)
    pose = stepper_step(pose, cmd, cfg.stepper, cfg.tilt_rate, dt)
    return pose, quad, cmd
