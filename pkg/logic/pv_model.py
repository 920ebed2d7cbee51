"""
logic/pv_model.py
-----------------
Double-diode photovoltaic cell and array model.

Features:
- Thermal voltages, photocurrent and temperature-scaled saturation currents
- Cell and Ns x Np array current, solved implicitly by damped Newton iteration with a
  bisection fallback
- Open-circuit voltage by bracketed bisection
- IV/PV sweeps, maximum power point extraction and array efficiency

All functions are pure; every model is a frozen pydantic object.
"""

import math
from typing import Callable, Final, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import bisect, minimize_scalar

from logic.errors import DivisionDomain, DomainError, EmptyCurve, NoConvergence
from utils.logger import logger
from utils.units import STC_TEMPERATURE_K

# ---------- Constants ----------
STC_IRRADIANCE: Final[float] = 1000.0  # W/m²
RESIDUAL_TOL: Final[float] = 1e-9  # A
MAX_NEWTON_ITER: Final[int] = 100
MAX_DAMPING: Final[int] = 40
EXP_CAP: Final[float] = 700.0  # keeps math.exp finite

_FROZEN = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)


class PhysicalConstants:
    """Fixed physical constants (not configurable)."""

    q: Final[float] = 1.602e-19  # electron charge, C
    kb: Final[float] = 1.381e-23  # Boltzmann constant, J/K


CONSTANTS = PhysicalConstants()


# ---------- Models ----------
class PvCellParams(BaseModel):
    """Electrical parameters of one cell; saturation currents are the STC values."""

    model_config = _FROZEN

    iph_stc: float = Field(1.25, ge=0, alias="iph_stc_a")
    io1: float = Field(1e-10, gt=0, alias="io1_a")
    io2: float = Field(1e-6, gt=0, alias="io2_a")
    rs: float = Field(0.1, ge=0, alias="rs_ohm")
    rp: float = Field(500.0, gt=0, alias="rp_ohm")
    a1: float = Field(1.0, ge=1)
    a2: float = Field(2.0, ge=1)
    alpha_i: float = Field(0.0006, alias="alpha_i_per_k")
    eg: float = Field(1.12, ge=0, alias="eg_ev")


class PvArraySpec(BaseModel):
    """Ns series by Np parallel cells plus nameplate data."""

    model_config = _FROZEN

    cell: PvCellParams = Field(default_factory=PvCellParams)
    ns: int = Field(36, ge=1)
    np: int = Field(1, ge=1)
    area: float = Field(0.15, gt=0, alias="area_m2")
    rated_power: float = Field(20.0, gt=0, alias="rated_power_w")


class OperatingEnv(BaseModel):
    """Plane-of-array irradiance and cell temperature."""

    model_config = _FROZEN

    irradiance: float = Field(STC_IRRADIANCE, ge=0, alias="irradiance_wm2")
    cell_temp: float = Field(STC_TEMPERATURE_K, gt=0, alias="cell_temp_k")


class IvPoint(BaseModel):
    model_config = _FROZEN

    v: float
    i: float
    p: float

    @classmethod
    def at(cls, v: float, i: float) -> "IvPoint":
        return cls(v=v, i=i, p=v * i)


class IvCurve(BaseModel):
    """Points ordered by strictly increasing voltage."""

    model_config = _FROZEN

    points: list[IvPoint] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_order(self) -> "IvCurve":
        for prev, cur in zip(self.points, self.points[1:]):
            if not cur.v > prev.v:
                raise ValueError("curve voltages must be strictly increasing")
        for pt in self.points:
            if pt.p != pt.v * pt.i:
                raise ValueError("every point must satisfy p = v·i")
        return self

    def __len__(self) -> int:
        return len(self.points)


DEFAULT_ARRAY = PvArraySpec()


# ---------- Cell physics ----------
def thermal_voltages(cell: PvCellParams, env: OperatingEnv) -> tuple[float, float]:
    """Diode thermal voltages a·kB·Tc/q for both diodes."""
    base = CONSTANTS.kb * env.cell_temp / CONSTANTS.q
    return cell.a1 * base, cell.a2 * base


def photocurrent(cell: PvCellParams, env: OperatingEnv) -> float:
    """Light-generated current, linear in irradiance and in temperature offset from STC."""
    iph = (
        cell.iph_stc
        * (env.irradiance / STC_IRRADIANCE)
        * (1.0 + cell.alpha_i * (env.cell_temp - STC_TEMPERATURE_K))
    )
    return max(0.0, iph)


def saturation_currents(cell: PvCellParams, env: OperatingEnv) -> tuple[float, float]:
    """Saturation currents at the cell temperature (cubic law with band-gap activation)."""
    ratio = env.cell_temp / STC_TEMPERATURE_K
    activation = CONSTANTS.q * cell.eg / CONSTANTS.kb * (1.0 / STC_TEMPERATURE_K - 1.0 / env.cell_temp)
    io1 = cell.io1 * ratio**3 * math.exp(activation / cell.a1)
    io2 = cell.io2 * ratio**3 * math.exp(activation / cell.a2)
    return io1, io2


# ---------- Implicit solver ----------
class _Equation(NamedTuple):
    """Array equation coefficients at one operating condition; ns = np = 1 is a single cell."""

    iph: float
    io1: float
    io2: float
    vt1: float
    vt2: float
    rs: float
    rp: float
    ns: int
    np: int

    def residual(self, va: float, ia: float) -> float:
        x = va / self.ns + ia * self.rs / self.np
        return (
            self.np * self.iph
            - self.np * self.io1 * (_exp(x / self.vt1) - 1.0)
            - self.np * self.io2 * (_exp(x / self.vt2) - 1.0)
            - self.np * x / self.rp
            - ia
        )

    def slope(self, va: float, ia: float) -> float:
        """d(residual)/d(ia); always ≤ -1, so the root is unique."""
        x = va / self.ns + ia * self.rs / self.np
        return (
            -self.io1 * _exp(x / self.vt1) * self.rs / self.vt1
            - self.io2 * _exp(x / self.vt2) * self.rs / self.vt2
            - self.rs / self.rp
            - 1.0
        )


def _exp(arg: float) -> float:
    return math.exp(min(arg, EXP_CAP))


def _equation(spec: PvArraySpec, env: OperatingEnv) -> _Equation:
    cell = spec.cell
    vt1, vt2 = thermal_voltages(cell, env)
    io1, io2 = saturation_currents(cell, env)
    return _Equation(
        iph=photocurrent(cell, env),
        io1=io1,
        io2=io2,
        vt1=vt1,
        vt2=vt2,
        rs=cell.rs,
        rp=cell.rp,
        ns=spec.ns,
        np=spec.np,
    )


def _newton(eq: _Equation, va: float) -> tuple[float, float]:
    """Damped Newton from Ia = Np·I_Ph; returns (current, |residual|)."""
    ia = eq.np * eq.iph
    f = eq.residual(va, ia)
    for _ in range(MAX_NEWTON_ITER):
        if f == 0.0:
            break
        step = f / eq.slope(va, ia)
        candidate = ia - step
        f_new = eq.residual(va, candidate)
        damping = 0
        while abs(f_new) > abs(f) and damping < MAX_DAMPING:
            step *= 0.5
            candidate = ia - step
            f_new = eq.residual(va, candidate)
            damping += 1
        ia, f = candidate, f_new
        if abs(step) <= 1e-15 * max(1.0, abs(ia)):
            break
    return ia, abs(f)


def _bisect(eq: _Equation, va: float) -> float:
    """Bracketed bisection on the residual, which is strictly decreasing in Ia."""

    def g(ia: float) -> float:
        return eq.residual(va, ia)

    half_width = max(2.0 * eq.np * eq.iph, 1e-3)
    lo, hi = -half_width, half_width
    for _ in range(200):
        if g(lo) > 0:
            break
        lo *= 2.0
    for _ in range(200):
        if g(hi) < 0:
            break
        hi *= 2.0
    if g(lo) == 0.0:
        return lo
    if g(hi) == 0.0:
        return hi
    return bisect(g, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=500)


def _solve(eq: _Equation, va: float) -> float:
    if va < 0:
        raise DomainError(f"terminal voltage must be ≥ 0, got {va!r}")
    ia, residual = _newton(eq, va)
    if residual <= RESIDUAL_TOL:
        return ia

    logger.warning("⚠️ Newton residual {:.3g} A at V={:.6g}; falling back to bisection", residual, va)
    try:
        ia = _bisect(eq, va)
    except ValueError as e:
        raise NoConvergence(f"no sign change for the current residual at V={va!r}") from e
    residual = abs(eq.residual(va, ia))
    if residual > RESIDUAL_TOL:
        raise NoConvergence(
            f"current residual {residual:.3g} A exceeds {RESIDUAL_TOL:g} A at V={va!r}",
            residual=residual,
        )
    return ia


def cell_residual(cell: PvCellParams, env: OperatingEnv, vc: float, ic: float) -> float:
    """Cell equation right-hand side minus Ic."""
    return _equation(PvArraySpec(cell=cell, ns=1, np=1), env).residual(vc, ic)


def array_residual(spec: PvArraySpec, env: OperatingEnv, va: float, ia: float) -> float:
    """Array equation right-hand side minus Ia."""
    return _equation(spec, env).residual(va, ia)


def cell_current(cell: PvCellParams, env: OperatingEnv, vc: float) -> float:
    """Cell output current at terminal voltage `vc`."""
    return _solve(_equation(PvArraySpec(cell=cell, ns=1, np=1), env), vc)


def array_current(spec: PvArraySpec, env: OperatingEnv, va: float) -> float:
    """Array output current at terminal voltage `va`."""
    return _solve(_equation(spec, env), va)


def current_solver(spec: PvArraySpec, env: OperatingEnv) -> Callable[[float], float]:
    """Return Ia(V) with the operating condition bound once (for sweeps)."""
    eq = _equation(spec, env)
    return lambda va: _solve(eq, va)


# ---------- Curves ----------
def open_circuit_voltage(spec: PvArraySpec, env: OperatingEnv) -> float:
    """Root of Ia(V) = 0, bracketed from [0, Ns·1 V] by doubling; 0 in the dark."""
    current = current_solver(spec, env)
    if current(0.0) <= 0.0:
        return 0.0
    hi = float(spec.ns)
    for _ in range(60):
        if current(hi) <= 0.0:
            break
        hi *= 2.0
    else:
        raise NoConvergence("could not bracket the open-circuit voltage")
    return bisect(current, 0.0, hi, xtol=1e-12, maxiter=200)


def iv_sweep(spec: PvArraySpec, env: OperatingEnv, n_points: int) -> IvCurve:
    """
    Evenly spaced sweep from short circuit to open circuit.

    In the dark there is no open-circuit voltage; the sweep then spans one thermal
    voltage per series cell so that the curve keeps increasing voltages.
    """
    if n_points < 2:
        raise DomainError(f"n_points must be ≥ 2, got {n_points}")
    voc = open_circuit_voltage(spec, env)
    if voc <= 0.0:
        voc = spec.ns * thermal_voltages(spec.cell, env)[0]
    current = current_solver(spec, env)
    voltages = np.linspace(0.0, voc, n_points)
    return IvCurve(points=[IvPoint.at(float(v), current(float(v))) for v in voltages])


def find_mpp(curve: IvCurve) -> IvPoint:
    """Maximum-power point of a sampled curve; ties go to the lowest voltage."""
    if not curve.points:
        raise EmptyCurve("cannot locate the MPP of an empty curve")
    best = curve.points[0]
    for pt in curve.points[1:]:
        if pt.p > best.p:
            best = pt
    return best


def locate_mpp(spec: PvArraySpec, env: OperatingEnv, n_points: int = 200) -> IvPoint:
    """Sweep argmax refined by bounded Brent search between its neighbours."""
    curve = iv_sweep(spec, env, n_points)
    best = find_mpp(curve)
    if best.p <= 0.0:
        return best
    k = curve.points.index(best)
    lo = curve.points[max(k - 1, 0)].v
    hi = curve.points[min(k + 1, len(curve) - 1)].v
    current = current_solver(spec, env)
    result = minimize_scalar(lambda v: -v * current(v), bounds=(lo, hi), method="bounded", options={"xatol": 1e-7})
    refined = IvPoint.at(float(result.x), current(float(result.x)))
    return refined if refined.p >= best.p else best


def efficiency(spec: PvArraySpec, env: OperatingEnv, va: float, ia: float) -> float:
    """Electrical output over incident power on the array area."""
    if env.irradiance <= 0:
        raise DivisionDomain("array efficiency is undefined at zero irradiance")
    return (va * ia) / (spec.area * env.irradiance)
