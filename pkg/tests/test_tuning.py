"""Frequency actuators, instrument noise, and the two-stage controller."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.constants import c

from cspulse.tuning import (
    DEFAULT_ABLATION_A,
    Ablate,
    ConvergenceError,
    GasBudgetError,
    Inject,
    Measure,
    QDTuningState,
    TuningConfig,
    TuningError,
    ablation_duration_for_shift,
    apply_gas,
    apply_laser,
    measure,
    tune_to_target,
)

WL = 894.95e-9


def _state(**kw):
    return QDTuningState(wavelength_m=WL, **kw)


def test_state_validation():
    with pytest.raises(ValueError, match="wavelength"):
        QDTuningState(wavelength_m=0.0)
    with pytest.raises(ValueError, match="slope"):
        QDTuningState(wavelength_m=WL, gas_slope_hz_per_mln=-1.0)
    with pytest.raises(ValueError, match="exponent"):
        QDTuningState(wavelength_m=WL, ablation_b=1.5)


def test_config_validation():
    with pytest.raises(ValueError, match="damping"):
        TuningConfig(coarse_damping=0.0)
    with pytest.raises(ValueError, match="step sizes"):
        TuningConfig(gas_step_hz=-1e9)


def test_gas_shift_examples():
    # the two reference slopes: 7.85 and 15.65 GHz per mono-layer-number
    for slope, want in [(7.85e9, 157e9), (15.65e9, 313e9)]:
        s0 = _state(gas_slope_hz_per_mln=slope)
        s1 = apply_gas(s0, 20.0)
        assert s1.frequency_hz - s0.frequency_hz == pytest.approx(want, rel=1e-12)
        assert s1.wavelength_m < s0.wavelength_m  # blue shift
        assert s1.cumulative_gas_mln == 20.0
        assert s1.history == (Inject(20.0),)


def test_gas_guards():
    s0 = _state()
    with pytest.raises(ValueError, match="nonnegative"):
        apply_gas(s0, -1.0)
    assert apply_gas(s0, 0.0) is s0
    with pytest.raises(GasBudgetError, match="budget"):
        apply_gas(s0, 81.0)
    # the budget tracks the running total, not single injections
    s1 = apply_gas(s0, 50.0)
    with pytest.raises(GasBudgetError):
        apply_gas(s1, 31.0)
    assert isinstance(GasBudgetError("x"), TuningError)


def test_ablation_law_saturates():
    # shift follows a P (t_cum^b - t_old^b): burns at one power saturate,
    # a fresh power setting starts its own ledger
    s0 = _state()
    one = apply_laser(s0, 1.0, 3600.0)
    assert s0.frequency_hz - one.frequency_hz == pytest.approx(100e9, rel=1e-12)
    split = apply_laser(apply_laser(s0, 1.0, 900.0), 1.0, 2700.0)
    assert split.frequency_hz == pytest.approx(one.frequency_hz, rel=1e-15)
    # the second hour at the same power buys less than the first
    two = apply_laser(one, 1.0, 3600.0)
    assert s0.frequency_hz - two.frequency_hz == pytest.approx(
        100e9 * np.sqrt(2.0), rel=1e-12)
    other = apply_laser(one, 5.0, 3600.0)
    assert one.frequency_hz - other.frequency_hz == pytest.approx(
        5 * 100e9, rel=1e-12)
    assert other.cumulative_exposure_s == {1.0: 3600.0, 5.0: 3600.0}


def test_ablation_guards():
    s0 = _state()
    with pytest.raises(ValueError, match="power"):
        apply_laser(s0, 0.0, 10.0)
    with pytest.raises(ValueError, match="duration"):
        apply_laser(s0, 1.0, -10.0)
    assert apply_laser(s0, 1.0, 0.0) is s0


@given(st.floats(1e8, 5e10), st.floats(0.5, 8.0), st.floats(0.0, 7200.0))
def test_ablation_duration_inverts_law(shift, power, warmup):
    s = apply_laser(_state(), power, warmup)
    dur = ablation_duration_for_shift(s, power, shift)
    s2 = apply_laser(s, power, dur)
    assert s.frequency_hz - s2.frequency_hz == pytest.approx(shift, rel=1e-9)
    assert ablation_duration_for_shift(s, power, 0.0) == 0.0


def test_measure_exact_without_rng():
    s = _state()
    assert measure(s, "spectrometer") == s.frequency_hz
    assert measure(s, "scanning_cavity") == s.frequency_hz
    with pytest.raises(ValueError, match="unknown instrument"):
        measure(s, "wavemeter")


def test_measure_noise_widths():
    s = _state()
    rng = np.random.default_rng(5)
    spec = np.array([measure(s, "spectrometer", rng) for _ in range(10_000)])
    cav = np.array([measure(s, "scanning_cavity", rng) for _ in range(10_000)])
    assert np.std(spec - s.frequency_hz) == pytest.approx(2e9, rel=0.05)
    assert np.std(cav - s.frequency_hz) == pytest.approx(50e6, rel=0.05)


def test_cavity_separates_neighboring_lines():
    # two dots 1 GHz apart: the cavity tells them apart essentially always,
    # the spectrometer cannot
    a = _state()
    b = QDTuningState(wavelength_m=c / (a.frequency_hz + 1e9))
    rng = np.random.default_rng(6)
    mid = a.frequency_hz + 0.5e9
    cav_correct = sum(measure(a, "scanning_cavity", rng) < mid for _ in range(1000))
    cav_correct += sum(measure(b, "scanning_cavity", rng) >= mid for _ in range(1000))
    assert cav_correct == 2000
    spec_correct = sum(measure(a, "spectrometer", rng) < mid for _ in range(1000))
    spec_correct += sum(measure(b, "spectrometer", rng) >= mid for _ in range(1000))
    assert spec_correct < 1400


def test_granularity_scatter_sqrt_scaling():
    # a move of k nominal steps carries sqrt(k) times the per-step scatter
    cfg = TuningConfig()
    k = 4.0
    amount = k * cfg.gas_step_hz / 11.75e9
    rng = np.random.default_rng(7)
    shifts = []
    for _ in range(3000):
        s1 = apply_gas(_state(), amount, cfg, rng)
        shifts.append(s1.frequency_hz - _state().frequency_hz)
    assert np.std(shifts) == pytest.approx(np.sqrt(k) * cfg.gas_step_sigma_hz,
                                           rel=0.05)
    assert np.mean(shifts) == pytest.approx(k * cfg.gas_step_hz, rel=0.02)


def test_tune_guards():
    s = _state()
    with pytest.raises(ValueError, match="tolerance"):
        tune_to_target(s, s.frequency_hz + 1e9, 0.0)
    with pytest.raises(ValueError, match="actuator range"):
        tune_to_target(s, s.frequency_hz + 401e9, 0.5e9)


def test_tune_noop_when_in_tolerance():
    s = _state()
    plan = tune_to_target(s, s.frequency_hz + 0.2e9, 0.5e9)
    assert plan.steps == 0
    assert plan.actions == ()
    assert plan.final_state is s
    assert abs(plan.achieved_detuning_hz) <= 0.5e9


def test_tune_deterministic_per_seed():
    s = _state()
    target = s.frequency_hz + 172e9
    a = tune_to_target(s, target, 0.5e9, seed=3)
    b = tune_to_target(s, target, 0.5e9, seed=3)
    assert a.actions == b.actions
    assert a.true_trace_hz == b.true_trace_hz
    c_ = tune_to_target(s, target, 0.5e9, seed=4)
    assert a.actions != c_.actions


def test_tune_noise_free_error_never_grows():
    # monotone at the controller's decision points; inside a fine combo the
    # error may transiently overshoot (inject legs run before ablate legs)
    s = _state()
    target = s.frequency_hz + 172e9
    plan = tune_to_target(s, target, 0.5e9, noise=False)
    errs = [abs(f - target) for a, f in zip(plan.actions, plan.true_trace_hz)
            if isinstance(a, Measure)]
    assert all(b <= a * (1.0 + 1e-12) for a, b in zip(errs, errs[1:]))
    assert abs(plan.final_state.frequency_hz - target) <= 0.5e9


def test_tune_converges_across_seeds():
    s = _state()
    target = s.frequency_hz + 172e9
    for seed in range(200):
        plan = tune_to_target(s, target, 0.5e9, seed=seed)
        assert plan.steps <= 60
        assert abs(plan.final_state.frequency_hz - target) <= 3 * 0.5e9
        # mixed actuation: both directions of the lattice get used
        kinds = {type(a) for a in plan.actions}
        assert Measure in kinds and Inject in kinds


def test_tune_ablates_down_to_red_target():
    s = _state()
    target = s.frequency_hz - 60e9
    plan = tune_to_target(s, target, 0.5e9, seed=11)
    assert any(isinstance(a, Ablate) for a in plan.actions)
    assert abs(plan.final_state.frequency_hz - target) <= 3 * 0.5e9


def test_tune_convergence_error_carries_plan():
    cfg = TuningConfig(max_actions=4)
    s = _state()
    with pytest.raises(ConvergenceError, match="4 actions") as exc:
        tune_to_target(s, s.frequency_hz + 172e9, 0.5e9, config=cfg, seed=0)
    plan = exc.value.plan
    assert plan.steps == 5  # the action that crossed the budget is kept
    assert len(plan.true_trace_hz) == plan.steps


def test_ablation_default_scale():
    assert DEFAULT_ABLATION_A == pytest.approx(100e9 / 60.0, rel=1e-12)
