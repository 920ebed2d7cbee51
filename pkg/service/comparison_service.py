"""
service/comparison_service.py
-----------------------------
Side-by-side evaluation of the MPPT controllers.

Features:
- Open-loop steady harness: one controller driving the array at a fixed operating condition
- Closed-loop comparison: the same scenario run under P&O (standard), P&O (printed table) and IC
- Per-cycle rows (v_ref, delivered power, reference MPP power) and a summary per controller:
  tracking efficiency, steady-state v_ref variance, cycles needed to re-converge after
  every irradiance change
- Independent controller runs may be spread over worker processes (`jobs`)

Usage:
    rows, summaries = compare_controllers(scenario, jobs=3)
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Final, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from logic.mppt import Convention, MpptAlgorithm, MpptConfig, MpptState, mppt_step
from logic.pv_model import IvPoint, OperatingEnv, PvArraySpec, array_current, locate_mpp
from service.simulation_service import Scenario, iter_steps
from utils.logger import logger

STEADY_TAIL: Final[float] = 0.2  # fraction of cycles treated as steady state
RECONVERGE_RATIO: Final[float] = 0.98
CHANGE_THRESHOLD: Final[float] = 0.01  # relative irradiance change that opens a re-convergence window

COMPARISON_COLUMNS: Final[list[str]] = ["controller", "cycle", "time_s", "g_wm2", "v_ref", "panel_p", "mpp_p"]


class Variant(NamedTuple):
    label: str
    algorithm: MpptAlgorithm
    convention: Convention


VARIANTS: Final[tuple[Variant, ...]] = (
    Variant("po_standard", MpptAlgorithm.PO, Convention.STANDARD),
    Variant("po_printed", MpptAlgorithm.PO, Convention.PRINTED),
    Variant("ic", MpptAlgorithm.IC, Convention.STANDARD),
)


class CycleRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    controller: str
    cycle: int
    time_s: float
    g_wm2: float
    v_ref: float
    panel_p: float
    mpp_p: float


class ControllerSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    controller: str
    cycles: int
    efficiency: Optional[float]
    v_ref_variance: Optional[float]
    reconverge_cycles: list[Optional[int]]


class SteadySample(NamedTuple):
    v_ref: float
    v: float
    i: float
    p: float


# ---------- Open-loop harness ----------
def track_steady(
    spec: PvArraySpec,
    env: OperatingEnv,
    cfg: MpptConfig,
    cycles: int,
    v_start: float,
) -> list[SteadySample]:
    """Run `cycles` controller updates with the panel held at the previous reference."""
    state = MpptState.start(v_start, cfg)
    samples: list[SteadySample] = []
    for _ in range(cycles):
        v = state.v_ref
        i = max(array_current(spec, env, v), 0.0)
        samples.append(SteadySample(v, v, i, v * i))
        state = mppt_step(state, v, i, cfg)
    return samples


# ---------- Metrics ----------
def steady_variance(v_refs: list[float], tail: float = STEADY_TAIL) -> Optional[float]:
    if not v_refs:
        return None
    n = max(1, int(round(len(v_refs) * tail)))
    return float(np.var(v_refs[-n:]))


def reconvergence(rows: list[CycleRow], ratio: float = RECONVERGE_RATIO) -> list[Optional[int]]:
    """
    Cycles from each irradiance change (> CHANGE_THRESHOLD relative) until the delivered
    power first reaches `ratio` of the reference MPP power; None if it never does.
    """
    out: list[Optional[int]] = []
    for k in range(1, len(rows)):
        prev_g, g = rows[k - 1].g_wm2, rows[k].g_wm2
        if abs(g - prev_g) <= CHANGE_THRESHOLD * max(prev_g, 1e-9):
            continue
        hit = next(
            (j - k for j in range(k, len(rows)) if rows[j].panel_p >= ratio * rows[j].mpp_p),
            None,
        )
        out.append(hit)
    return out


def summarize(label: str, rows: list[CycleRow]) -> ControllerSummary:
    reference = sum(r.mpp_p for r in rows)
    delivered = sum(r.panel_p for r in rows)
    return ControllerSummary(
        controller=label,
        cycles=len(rows),
        efficiency=delivered / reference if reference > 0 else None,
        v_ref_variance=steady_variance([r.v_ref for r in rows]),
        reconverge_cycles=reconvergence(rows),
    )


# ---------- Closed loop ----------
def with_controller(scenario: Scenario, variant: Variant) -> Scenario:
    mppt = MpptConfig.model_validate(
        {**scenario.mppt.model_dump(), "algorithm": variant.algorithm, "convention": variant.convention}
    )
    return scenario.model_copy(update={"mppt": mppt})


def run_variant(scenario: Scenario, variant: Variant) -> list[CycleRow]:
    """One closed-loop run; a row per MPPT update."""
    run = with_controller(scenario, variant)
    every = run.mppt_every
    mpp_cache: dict[tuple[float, float], IvPoint] = {}
    rows: list[CycleRow] = []
    for world, record in iter_steps(run):
        if (world.step - 1) % every:
            continue
        key = (record.g_wm2, record.t_k)
        if key not in mpp_cache:
            mpp_cache[key] = locate_mpp(run.pv, OperatingEnv(irradiance=record.g_wm2, cell_temp=record.t_k))
        rows.append(
            CycleRow(
                controller=variant.label,
                cycle=len(rows),
                time_s=record.time_s,
                g_wm2=record.g_wm2,
                v_ref=record.v_ref,
                panel_p=record.panel_p,
                mpp_p=mpp_cache[key].p,
            )
        )
    return rows


def compare_controllers(
    scenario: Scenario,
    jobs: int = 1,
    variants: tuple[Variant, ...] = VARIANTS,
) -> tuple[list[CycleRow], list[ControllerSummary]]:
    """Run every variant on the same scenario; rows come back grouped by variant order."""
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(variants))) as pool:
            results = list(pool.map(run_variant, [scenario] * len(variants), variants))
    else:
        results = [run_variant(scenario, v) for v in variants]

    rows: list[CycleRow] = []
    summaries: list[ControllerSummary] = []
    for variant, variant_rows in zip(variants, results):
        summary = summarize(variant.label, variant_rows)
        logger.info(
            "📊 {}: {} cycles, efficiency={}, variance={}",
            variant.label,
            summary.cycles,
            "n/a" if summary.efficiency is None else f"{summary.efficiency:.4f}",
            "n/a" if summary.v_ref_variance is None else f"{summary.v_ref_variance:.4g}",
        )
        rows.extend(variant_rows)
        summaries.append(summary)
    return rows, summaries
