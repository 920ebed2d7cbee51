import numpy as np
import pytest

from logic.errors import DomainError, Unachievable
from logic.mppt import (
    MAX_DUTY,
    ConverterTopology,
    Convention,
    MpptAlgorithm,
    MpptConfig,
    MpptState,
    Topology,
    conversion_ratio,
    duty_for_target,
    ic_step,
    incremental_conductance,
    mppt_step,
    po_step,
)
from logic.pv_model import locate_mpp, open_circuit_voltage
from service.comparison_service import steady_variance, track_steady

WIDE = MpptConfig(v_min=1.0, v_max=30.0)


def quadratic_current(v: float) -> float:
    """Current of the synthetic curve P(V) = -(V-17)^2 + 100."""
    return (-((v - 17.0) ** 2) + 100.0) / v


def primed(v: float, i: float, v_ref: float | None = None) -> MpptState:
    return MpptState(v_ref=v if v_ref is None else v_ref, prev_v=v, prev_i=i, prev_p=v * i, cycle=1)


class TestPerturbObserve:
    def test_first_cycle_only_records(self):
        state = po_step(MpptState(v_ref=17.0), 17.0, 1.0, WIDE)
        assert state.v_ref == 17.0
        assert state.cycle == 1
        assert state.prev_p == 17.0

    @pytest.mark.parametrize(
        "dp, dv, expected",
        [(1.0, 0.1, +1), (1.0, -0.1, -1), (-1.0, 0.1, -1), (-1.0, -0.1, +1)],
    )
    def test_standard_branches(self, dp, dv, expected):
        v0, i0 = 15.0, 1.0
        v1 = v0 + dv
        i1 = (v0 * i0 + dp) / v1
        state = po_step(primed(v0, i0, v_ref=v1), v1, i1, WIDE)
        assert state.v_ref == pytest.approx(v1 + expected * WIDE.step)

    @pytest.mark.parametrize(
        "dp, dv, expected",
        [(1.0, 0.1, -1), (1.0, -0.1, +1), (-1.0, -0.1, +1), (-1.0, 0.1, -1)],
    )
    def test_printed_branches(self, dp, dv, expected):
        cfg = MpptConfig(v_min=1.0, v_max=30.0, convention=Convention.PRINTED)
        v0, i0 = 15.0, 1.0
        v1 = v0 + dv
        i1 = (v0 * i0 + dp) / v1
        state = po_step(primed(v0, i0, v_ref=v1), v1, i1, cfg)
        assert state.v_ref == pytest.approx(v1 + expected * cfg.step)

    def test_steady_input_still_perturbs(self):
        state = po_step(primed(15.0, 1.0), 15.0, 1.0, WIDE)
        assert abs(state.v_ref - 15.0) == pytest.approx(WIDE.step)

    def test_reference_clamped(self):
        cfg = MpptConfig(v_min=13.0, v_max=14.0)
        state = MpptState.start(20.0, cfg)
        assert state.v_ref == 14.0
        rng = np.random.default_rng(3)
        for _ in range(200):
            v = float(rng.uniform(0.5, 30.0))
            state = po_step(state, v, float(rng.uniform(0.0, 2.0)), cfg)
            assert cfg.v_min <= state.v_ref <= cfg.v_max

    def test_invalid_bounds(self):
        with pytest.raises(ValueError):
            MpptConfig(v_min=20.0, v_max=10.0)

    def test_lower_bound_does_not_trap(self, array, stc):
        cfg = MpptConfig(v_min=13.0, v_max=24.0)
        mpp = locate_mpp(array, stc)
        samples = track_steady(array, stc, cfg, 50, 0.6 * open_circuit_voltage(array, stc))
        assert samples[0].v_ref == cfg.v_min
        assert max(s.v_ref for s in samples) > cfg.v_min
        assert np.mean([s.p for s in samples[-10:]]) >= 0.99 * mpp.p

    def test_upper_bound_keeps_perturbing(self, array, stc):
        cfg = MpptConfig(v_min=13.0, v_max=14.0)
        samples = track_steady(array, stc, cfg, 40, 14.0)
        assert len({s.v_ref for s in samples[-10:]}) >= 2
        assert all(cfg.v_min <= s.v_ref <= cfg.v_max for s in samples)

    def test_default_floor_below_start_voltage(self, array, stc):
        assert MpptConfig().v_min < 0.6 * open_circuit_voltage(array, stc)


class TestIncrementalConductance:
    def test_left_of_mpp_increases(self):
        state = primed(10.0, quadratic_current(10.0), v_ref=11.0)
        assert ic_step(state, 11.0, quadratic_current(11.0), WIDE).v_ref == pytest.approx(11.2)

    def test_right_of_mpp_decreases(self):
        state = primed(20.0, quadratic_current(20.0), v_ref=21.0)
        assert ic_step(state, 21.0, quadratic_current(21.0), WIDE).v_ref == pytest.approx(20.8)

    def test_zero_conductance_holds(self):
        # dI/dV = -0.2 and I/V = 0.2
        state = primed(10.0, 2.2, v_ref=10.5)
        assert incremental_conductance(state, 10.5, 2.1) == pytest.approx(0.0, abs=1e-12)
        assert ic_step(state, 10.5, 2.1, WIDE).v_ref == 10.5

    def test_exact_zero_signal_holds(self):
        state = primed(12.0, 1.0, v_ref=12.0)
        assert ic_step(state, 12.0, 1.0, WIDE).v_ref == 12.0

    def test_unchanged_voltage_uses_current_change(self):
        state = primed(12.0, 1.0, v_ref=12.0)
        assert ic_step(state, 12.0, 1.5, WIDE).v_ref == pytest.approx(12.2)
        assert ic_step(state, 12.0, 0.5, WIDE).v_ref == pytest.approx(11.8)

    def test_unchanged_voltage_at_bound_steps_inside(self):
        cfg = MpptConfig(algorithm=MpptAlgorithm.IC, v_min=13.0, v_max=24.0)
        low = primed(13.0, 1.1, v_ref=13.0)
        assert ic_step(low, 13.0, 1.1, cfg).v_ref == pytest.approx(13.2)
        high = primed(24.0, 0.1, v_ref=24.0)
        assert ic_step(high, 24.0, 0.1, cfg).v_ref == pytest.approx(23.8)

    def test_first_cycle_perturbs_upward(self):
        cfg = MpptConfig(algorithm=MpptAlgorithm.IC, v_min=1.0, v_max=30.0)
        state = ic_step(MpptState(v_ref=15.0), 15.0, 1.0, cfg)
        assert state.v_ref == pytest.approx(15.2)
        assert state.cycle == 1

    def test_non_positive_voltage(self):
        with pytest.raises(DomainError):
            ic_step(primed(1.0, 1.0), 0.0, 1.0, WIDE)

    def test_dispatch(self):
        cfg = MpptConfig(algorithm=MpptAlgorithm.IC, v_min=1.0, v_max=30.0)
        state = primed(10.0, quadratic_current(10.0), v_ref=11.0)
        assert mppt_step(state, 11.0, quadratic_current(11.0), cfg) == ic_step(state, 11.0, quadratic_current(11.0), cfg)


class TestSteadyTracking:
    def test_po_efficiency_and_oscillation(self, array, stc):
        cfg = MpptConfig(step=0.2)
        mpp = locate_mpp(array, stc)
        v_start = 0.6 * open_circuit_voltage(array, stc)
        samples = track_steady(array, stc, cfg, 1000, v_start)

        tail = samples[-200:]
        assert np.mean([s.p for s in tail]) >= 0.99 * mpp.p
        refs = [s.v_ref for s in tail]
        assert len(set(refs)) >= 2
        assert all(abs(v - mpp.v) <= 2 * cfg.step for v in refs)

    def test_ic_freezes_once_held(self, array, stc):
        # a fine step keeps consecutive conductance values closer than the hold band
        cfg = MpptConfig(algorithm=MpptAlgorithm.IC, step=0.02)
        samples = track_steady(array, stc, cfg, 1000, 0.6 * open_circuit_voltage(array, stc))
        refs = [s.v_ref for s in samples]
        held = next(k for k in range(2, len(refs) - 1) if refs[k + 1] == refs[k])
        assert all(v == refs[held] for v in refs[held:])

    def test_ic_variance_below_po(self, array, stc):
        v_start = 0.6 * open_circuit_voltage(array, stc)
        po = track_steady(array, stc, MpptConfig(step=0.02), 1000, v_start)
        ic = track_steady(array, stc, MpptConfig(algorithm=MpptAlgorithm.IC, step=0.02), 1000, v_start)
        po_var = steady_variance([s.v_ref for s in po])
        ic_var = steady_variance([s.v_ref for s in ic])
        assert ic_var < po_var

    def test_standard_convention_converges_on_concave_curve(self):
        state = MpptState.start(12.0, WIDE)
        for _ in range(200):
            v = state.v_ref
            state = po_step(state, v, quadratic_current(v), WIDE)
        assert abs(state.v_ref - 17.0) <= 2 * WIDE.step


class TestConverter:
    @pytest.mark.parametrize(
        "d, kind, expected",
        [(0.0, Topology.BOOST_RATIO, 1.0), (0.5, Topology.BOOST_RATIO, 2.0), (0.5, Topology.IDEAL_BUCK, 0.5)],
    )
    def test_ratio(self, d, kind, expected):
        assert conversion_ratio(d, ConverterTopology(kind=kind)) == pytest.approx(expected)

    def test_boost_unbounded(self):
        with pytest.raises(DomainError):
            conversion_ratio(1.0, ConverterTopology(kind=Topology.BOOST_RATIO))

    def test_duty_out_of_range(self):
        with pytest.raises(DomainError):
            conversion_ratio(1.5, ConverterTopology())

    def test_buck_duty(self):
        assert duty_for_target(20.0, 10.0, ConverterTopology(kind=Topology.IDEAL_BUCK)) == pytest.approx(0.5)

    def test_boost_duty(self):
        assert duty_for_target(10.0, 20.0, ConverterTopology(kind=Topology.BOOST_RATIO)) == pytest.approx(0.5)

    def test_boost_cannot_lower(self):
        with pytest.raises(Unachievable):
            duty_for_target(10.0, 5.0, ConverterTopology(kind=Topology.BOOST_RATIO))

    def test_buck_cannot_raise(self):
        with pytest.raises(Unachievable):
            duty_for_target(10.0, 12.0, ConverterTopology(kind=Topology.IDEAL_BUCK))

    def test_duty_clamped(self):
        assert duty_for_target(10.0, 1000.0, ConverterTopology(kind=Topology.BOOST_RATIO)) == MAX_DUTY

    def test_duty_round_trip(self):
        topo = ConverterTopology(kind=Topology.BOOST_RATIO)
        d = duty_for_target(12.0, 18.0, topo)
        assert conversion_ratio(d, topo) * 12.0 == pytest.approx(18.0)
