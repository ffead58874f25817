"""Unit tests for the control law and parameter plumbing."""

import math

import numpy as np
import pytest

from autoknob.controller import (
    MAX_CONF,
    ControllerParams,
    ControllerState,
    SynthesisReport,
    clamp,
    compute_pole,
    compute_virtual_goal,
    control_step,
)
from autoknob.errors import SynthesisError


def make_params(**kwargs):
    defaults = dict(
        alpha=2.0,
        pole=0.5,
        goal=100.0,
        virtual_goal=90.0,
        hard=True,
        conf_min=-1e18,
        conf_max=1e18,
    )
    defaults.update(kwargs)
    return ControllerParams(**defaults)


def test_clamp():
    assert clamp(5, 0, 10) == 5
    assert clamp(-1, 0, 10) == 0
    assert clamp(11, 0, 10) == 10


class TestComputePole:
    def test_small_bounds_get_the_fast_pole(self):
        for delta in (1.0, 1.5, 2.0):
            assert compute_pole(delta) == 0.0

    def test_large_bounds_get_damping(self):
        assert compute_pole(4.0) == pytest.approx(0.5, rel=1e-12)
        assert compute_pole(20.0) == pytest.approx(0.9, rel=1e-12)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            delta = float(1.0 + rng.exponential(5.0))
            expected = 1.0 - 2.0 / delta if delta > 2.0 else 0.0
            assert compute_pole(delta) == pytest.approx(expected, rel=1e-12)

    def test_pole_always_stable(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            pole = compute_pole(float(1.0 + rng.exponential(50.0)))
            assert 0.0 <= pole < 1.0

    @pytest.mark.parametrize("delta", [0.0, 0.5, 0.999, -3.0, float("inf"), float("nan")])
    def test_rejects_bad_bounds(self, delta):
        with pytest.raises(ValueError):
            compute_pole(delta)


class TestVirtualGoal:
    def test_soft_goal_passes_through(self):
        assert compute_virtual_goal(100.0, 0.3, hard=False) == 100.0
        # even a hopeless noise level is fine when the goal is soft
        assert compute_virtual_goal(100.0, 5.0, hard=False) == 100.0

    def test_hard_goal_is_lowered(self):
        assert compute_virtual_goal(100.0, 0.1, hard=True) == pytest.approx(90.0)
        assert compute_virtual_goal(495.0, 0.101, hard=True) == pytest.approx(445.005)

    def test_zero_noise_keeps_the_goal(self):
        assert compute_virtual_goal(42.0, 0.0, hard=True) == 42.0

    def test_too_noisy_for_a_hard_goal(self):
        with pytest.raises(SynthesisError):
            compute_virtual_goal(100.0, 1.0, hard=True)
        with pytest.raises(SynthesisError):
            compute_virtual_goal(100.0, 3.7, hard=True)

    @pytest.mark.parametrize("goal", [0.0, -5.0, float("inf"), float("nan")])
    def test_rejects_bad_goal(self, goal):
        with pytest.raises(ValueError):
            compute_virtual_goal(goal, 0.1, hard=True)

    @pytest.mark.parametrize("lam", [-0.01, float("nan"), float("inf")])
    def test_rejects_bad_noise_level(self, lam):
        with pytest.raises(ValueError):
            compute_virtual_goal(100.0, lam, hard=True)


class TestParamsValidation:
    def test_zero_gain_rejected(self):
        with pytest.raises(ValueError):
            make_params(alpha=0.0)

    @pytest.mark.parametrize("pole", [-0.1, 1.0, 1.5])
    def test_pole_range(self, pole):
        with pytest.raises(ValueError):
            make_params(pole=pole)

    def test_virtual_goal_above_hard_goal_rejected(self):
        with pytest.raises(ValueError):
            make_params(goal=100.0, virtual_goal=101.0, hard=True)

    def test_soft_goal_must_track_directly(self):
        with pytest.raises(ValueError):
            make_params(goal=100.0, virtual_goal=90.0, hard=False)

    def test_empty_conf_range_rejected(self):
        with pytest.raises(ValueError):
            make_params(conf_min=10.0, conf_max=5.0)

    def test_aggressive_pole_is_fixed(self):
        with pytest.raises(ValueError):
            make_params(aggressive_pole=0.3)

    def test_interaction_count_positive(self):
        with pytest.raises(ValueError):
            make_params(interaction_n=0)


class TestSynthesisReport:
    def test_consistent_report_accepted(self):
        rep = SynthesisReport(alpha=2.5, delta=4.0, lambda_=0.1, pole=0.5, virtual_goal=90.0)
        assert rep.pole == 0.5

    def test_pole_must_match_delta(self):
        with pytest.raises(ValueError):
            SynthesisReport(alpha=2.5, delta=4.0, lambda_=0.1, pole=0.3, virtual_goal=90.0)

    def test_bad_delta_rejected(self):
        with pytest.raises(ValueError):
            SynthesisReport(alpha=2.5, delta=0.9, lambda_=0.1, pole=0.0, virtual_goal=90.0)


class TestControlStep:
    def test_matches_hand_computation(self):
        params = make_params(alpha=2.0, pole=0.5, virtual_goal=90.0)
        state = ControllerState(last_value=10.0)
        value, pole = control_step(state, params, 80.0)
        # measured below the virtual goal, regular pole applies:
        # 10 + (1 - 0.5) / 2 * (90 - 80) = 12.5
        assert value == pytest.approx(12.5)
        assert pole == 0.5
        assert state.last_value == pytest.approx(12.5)
        assert state.step_index == 1

    def test_aggressive_pole_above_virtual_goal(self):
        params = make_params(alpha=2.0, pole=0.5, virtual_goal=90.0)
        state = ControllerState(last_value=10.0)
        value, pole = control_step(state, params, 96.0)
        assert pole == 0.0
        # full correction: 10 + (1/2) * (90 - 96) = 7
        assert value == pytest.approx(7.0)

    def test_soft_goals_never_switch_poles(self):
        params = make_params(pole=0.5, goal=90.0, virtual_goal=90.0, hard=False)
        state = ControllerState(last_value=10.0)
        _, pole = control_step(state, params, 150.0)
        assert pole == 0.5

    def test_hard_goal_at_virtual_goal_uses_regular_pole(self):
        params = make_params(pole=0.5, virtual_goal=90.0)
        state = ControllerState(last_value=10.0)
        _, pole = control_step(state, params, 90.0)
        assert pole == 0.5

    def test_clamps_to_conf_range(self):
        params = make_params(alpha=1.0, pole=0.0, virtual_goal=90.0, conf_min=0.0, conf_max=20.0)
        state = ControllerState(last_value=10.0)
        value, _ = control_step(state, params, 0.0)
        assert value == 20.0
        value, _ = control_step(state, params, 500.0)
        assert value == 0.0

    def test_rejects_non_finite_measurement(self):
        params = make_params()
        state = ControllerState(last_value=0.0)
        with pytest.raises(ValueError):
            control_step(state, params, float("nan"))

    def test_negative_gain_moves_the_other_way(self):
        # raising the knob lowers the metric, so a shortfall means step down
        params = make_params(alpha=-2.0, pole=0.0, virtual_goal=90.0)
        state = ControllerState(last_value=50.0)
        value, _ = control_step(state, params, 80.0)
        assert value == pytest.approx(50.0 + (90.0 - 80.0) / -2.0)

    def test_interaction_splits_step_exactly_in_half(self):
        # start from zero so the returned value IS the step, free of
        # addition rounding, and the halving must hold bit for bit
        rng = np.random.default_rng(21)
        for _ in range(100):
            alpha = float(rng.uniform(0.5, 5.0)) * (1 if rng.random() < 0.5 else -1)
            pole = float(rng.uniform(0.0, 0.95))
            measured = float(rng.uniform(0.0, 200.0))
            solo = make_params(alpha=alpha, pole=pole, goal=100.0, virtual_goal=90.0)
            duo = make_params(alpha=alpha, pole=pole, goal=100.0, virtual_goal=90.0, interaction_n=2)
            s1 = ControllerState(last_value=0.0)
            s2 = ControllerState(last_value=0.0)
            v1, _ = control_step(s1, solo, measured)
            v2, _ = control_step(s2, duo, measured)
            assert v2 == v1 / 2  # exact, no tolerance

    def test_error_decays_by_the_pole_on_a_linear_plant(self):
        rng = np.random.default_rng(22)
        for _ in range(50):
            alpha = float(rng.uniform(0.5, 4.0))
            pole = float(rng.uniform(0.0, 0.95))
            goal = float(rng.uniform(10.0, 1000.0))
            params = make_params(
                alpha=alpha, pole=pole, goal=goal, virtual_goal=goal, hard=False
            )
            state = ControllerState(last_value=0.0)
            error = goal  # plant starts at 0
            for _ in range(60):
                value, _ = control_step(state, params, alpha * state.last_value)
                error *= pole
            assert abs(goal - alpha * value) <= abs(error) + 1e-9 * goal


def test_max_conf_is_float_max():
    assert MAX_CONF == pytest.approx(1.7976931348623157e308)
    assert math.isfinite(MAX_CONF)
