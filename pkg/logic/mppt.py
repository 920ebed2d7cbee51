"""
logic/mppt.py
-------------
Maximum power point tracking controllers and the DC-DC conversion ratio.

Features:
- Perturb & Observe with two branch conventions:
    - standard: keep moving in the direction that raised power
    - printed: the published branch table, whose dP > 0 arm is mirrored
- Incremental conductance with a hold band around dI/dV + I/V = 0
- Conversion ratio of the boost-form 1/(1-D) and ideal buck topologies, and its inverse
- Reference voltage always clamped to [v_min, v_max]; a controller pinned at a bound steps back inside

Controllers are pure transitions: (state, measurement, config) -> new state.
"""

from enum import Enum
from typing import Final

from pydantic import BaseModel, ConfigDict, Field, model_validator

from logic.errors import DomainError, Unachievable

# ---------- Constants ----------
ZERO_DV: Final[float] = 1e-12  # V; below this the voltage is treated as unchanged
MAX_DUTY: Final[float] = 0.99

_FROZEN = ConfigDict(frozen=True, extra="forbid", populate_by_name=True, use_enum_values=False)


class Convention(str, Enum):
    STANDARD = "standard"
    PRINTED = "printed"


class MpptAlgorithm(str, Enum):
    PO = "po"
    IC = "ic"


class Topology(str, Enum):
    BOOST_RATIO = "boost_ratio"
    IDEAL_BUCK = "ideal_buck"


# ---------- Models ----------
class MpptConfig(BaseModel):
    model_config = _FROZEN

    algorithm: MpptAlgorithm = MpptAlgorithm.PO
    step: float = Field(0.2, gt=0, alias="step_v")
    v_min: float = Field(10.0, alias="v_min_v")
    v_max: float = Field(24.0, alias="v_max_v")
    ic_epsilon: float = Field(1e-3, ge=0, alias="ic_epsilon_a_per_v")
    convention: Convention = Convention.STANDARD

    @model_validator(mode="after")
    def _check_bounds(self) -> "MpptConfig":
        if not self.v_min < self.v_max:
            raise ValueError(f"v_min ({self.v_min}) must be below v_max ({self.v_max})")
        if self.algorithm is MpptAlgorithm.IC and self.v_min <= 0:
            raise ValueError("incremental conductance needs v_min > 0 (division by V)")
        return self

    def clamp(self, v_ref: float) -> float:
        return min(max(v_ref, self.v_min), self.v_max)

    def inward(self, v_ref: float) -> int:
        """+1 at the lower bound, -1 at the upper bound, 0 strictly inside."""
        if v_ref <= self.v_min:
            return 1
        if v_ref >= self.v_max:
            return -1
        return 0


class MpptState(BaseModel):
    """Controller memory; `cycle` counts completed updates."""

    model_config = _FROZEN

    v_ref: float
    prev_v: float = 0.0
    prev_i: float = 0.0
    prev_p: float = 0.0
    cycle: int = Field(0, ge=0)

    @classmethod
    def start(cls, v_ref: float, cfg: MpptConfig) -> "MpptState":
        return cls(v_ref=cfg.clamp(v_ref))


class ConverterTopology(BaseModel):
    model_config = _FROZEN

    kind: Topology = Topology.IDEAL_BUCK


# ---------- Controllers ----------
def _advance(state: MpptState, v_ref: float, v: float, i: float, cfg: MpptConfig) -> MpptState:
    return MpptState(v_ref=cfg.clamp(v_ref), prev_v=v, prev_i=i, prev_p=v * i, cycle=state.cycle + 1)


def _po_direction(dp: float, dv: float, convention: Convention) -> int:
    if convention is Convention.STANDARD:
        return 1 if (dp > 0 and dv > 0) or (dp < 0 and dv < 0) else -1
    # published table: reversed while power rises
    if dp > 0:
        return -1 if dv > 0 else 1
    return 1 if dv < 0 else -1


def po_step(state: MpptState, v: float, i: float, cfg: MpptConfig) -> MpptState:
    """One Perturb & Observe cycle; the first cycle only records the sample."""
    if state.cycle == 0:
        return _advance(state, state.v_ref, v, i, cfg)
    dp = v * i - state.prev_p
    dv = v - state.prev_v
    direction = _po_direction(dp, dv, cfg.convention)
    if cfg.clamp(state.v_ref + direction * cfg.step) == state.v_ref:
        # pinned at a bound: the clamp would repeat the sample forever
        direction = -direction
    return _advance(state, state.v_ref + direction * cfg.step, v, i, cfg)


def incremental_conductance(state: MpptState, v: float, i: float) -> float:
    """dI/dV + I/V for the last two samples (the sign of dP/dV)."""
    return (i - state.prev_i) / (v - state.prev_v) + i / v


def ic_step(state: MpptState, v: float, i: float, cfg: MpptConfig) -> MpptState:
    """
    One incremental-conductance cycle.

    The first cycle records the sample and perturbs by +step so that the next cycle has a
    voltage difference to work with. With an unchanged voltage the current change alone
    decides: within ±ic_epsilon the reference is held, except at a clamp bound, where the
    controller steps back inside.
    """
    if v <= 0:
        raise DomainError(f"incremental conductance needs v > 0, got {v!r}")
    if state.cycle == 0:
        return _advance(state, state.v_ref + cfg.step, v, i, cfg)

    dv = v - state.prev_v
    if abs(dv) < ZERO_DV:
        inward = cfg.inward(state.v_ref)
        if inward:
            return _advance(state, state.v_ref + inward * cfg.step, v, i, cfg)
        signal = i - state.prev_i
    else:
        signal = incremental_conductance(state, v, i)

    v_ref = state.v_ref
    if signal > cfg.ic_epsilon:
        v_ref += cfg.step
    elif signal < -cfg.ic_epsilon:
        v_ref -= cfg.step
    return _advance(state, v_ref, v, i, cfg)


def mppt_step(state: MpptState, v: float, i: float, cfg: MpptConfig) -> MpptState:
    """Dispatch to the configured algorithm."""
    if cfg.algorithm is MpptAlgorithm.IC:
        return ic_step(state, v, i, cfg)
    return po_step(state, v, i, cfg)


# ---------- Converter ----------
def conversion_ratio(d: float, topology: ConverterTopology) -> float:
    """V_out / V_in for duty cycle `d`."""
    if not 0.0 <= d <= 1.0:
        raise DomainError(f"duty cycle must lie in [0, 1], got {d!r}")
    if topology.kind is Topology.IDEAL_BUCK:
        return d
    if d >= 1.0:
        raise DomainError("the boost ratio 1/(1-D) is unbounded at D = 1")
    return 1.0 / (1.0 - d)


def duty_for_target(v_in: float, v_out_target: float, topology: ConverterTopology) -> float:
    """Duty cycle that maps `v_in` to `v_out_target`, clamped to [0, 0.99]."""
    if v_in <= 0 or v_out_target <= 0:
        raise DomainError(f"converter voltages must be positive (v_in={v_in!r}, v_out={v_out_target!r})")
    ratio = v_out_target / v_in
    if topology.kind is Topology.IDEAL_BUCK:
        if ratio > 1.0:
            raise Unachievable(f"a buck stage cannot raise {v_in:.4g} V to {v_out_target:.4g} V")
        duty = ratio
    else:
        if ratio < 1.0:
            raise Unachievable(f"a boost-ratio stage cannot lower {v_in:.4g} V to {v_out_target:.4g} V")
        duty = 1.0 - 1.0 / ratio
    return min(max(duty, 0.0), MAX_DUTY)
