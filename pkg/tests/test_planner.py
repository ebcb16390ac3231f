"""Tests for surge/cast/search mode selection and waypoint geometry."""

from __future__ import annotations

import numpy as np
import pytest

from oslsim.planner import Mode, PlannerState, classify_mode, next_waypoint, update_mode


class TestModeSelection:
    def test_own_detection_surges(self):
        ps = PlannerState()
        assert classify_mode(True, True, 1.0, ps) is Mode.SURGING
        assert classify_mode(True, False, 1.0, ps) is Mode.SURGING

    def test_group_detection_casts(self):
        ps = PlannerState()
        assert classify_mode(False, True, 1.0, ps) is Mode.CASTING

    def test_timeout_exceeded_searches(self):
        ps = PlannerState(last_detection_time=0.0, delta0=5.0)
        assert classify_mode(False, False, 5.0, ps) is Mode.CASTING  # boundary: not exceeded
        assert classify_mode(False, False, 5.1, ps) is Mode.SEARCHING

    def test_update_mode_refreshes_group_clock(self):
        ps = PlannerState(last_detection_time=0.0, delta0=5.0)
        assert update_mode(ps, False, True, 7.0) is Mode.CASTING
        assert ps.last_detection_time == 7.0
        assert update_mode(ps, False, False, 12.0) is Mode.CASTING
        assert update_mode(ps, False, False, 12.1) is Mode.SEARCHING
        assert ps.mode is Mode.SEARCHING

    def test_default_timeout_is_five_seconds(self):
        assert PlannerState().delta0 == 5.0


class TestWaypoints:
    def test_surging_heads_to_prediction(self):
        wp = next_waypoint(
            Mode.SURGING, np.array([4.0]), np.array([1.0]), np.random.default_rng(0), PlannerState()
        )
        assert np.array_equal(wp, [1.0])

    def test_casting_default_midpoint(self):
        # Frozen: agent at 4, prediction at 1 -> midpoint 2.5.
        wp = next_waypoint(
            Mode.CASTING, np.array([4.0]), np.array([1.0]), np.random.default_rng(0), PlannerState()
        )
        assert np.array_equal(wp, [2.5])

    def test_casting_literal_adds_scalar_offset(self):
        # Frozen: |4 - 1| / 2 + 1 = 2.5 in 1-D; differs from midpoint in 2-D.
        ps = PlannerState(casting_literal=True)
        wp = next_waypoint(Mode.CASTING, np.array([4.0]), np.array([1.0]), np.random.default_rng(0), ps)
        assert np.array_equal(wp, [2.5])
        wp2 = next_waypoint(
            Mode.CASTING, np.array([4.0, 0.0]), np.array([0.0, 3.0]), np.random.default_rng(0), ps
        )
        assert np.array_equal(wp2, [2.5, 5.5])  # norm 5 halved, added per axis
        mid = next_waypoint(
            Mode.CASTING,
            np.array([4.0, 0.0]),
            np.array([0.0, 3.0]),
            np.random.default_rng(0),
            PlannerState(),
        )
        assert np.array_equal(mid, [2.0, 1.5])

    def test_repeated_casting_halves_distance(self):
        ps = PlannerState()
        target = np.array([1.0])
        x = np.array([9.0])
        gaps = []
        for _ in range(5):
            x = next_waypoint(Mode.CASTING, x, target, np.random.default_rng(0), ps)
            gaps.append(abs(float(x[0] - target[0])))
        assert gaps == pytest.approx([4.0, 2.0, 1.0, 0.5, 0.25])

    def test_searching_with_zero_spread_hits_prediction(self):
        ps = PlannerState(search_mean=0.0, search_std=0.0)
        wp = next_waypoint(
            Mode.SEARCHING, np.array([4.0]), np.array([1.0]), np.random.default_rng(3), ps
        )
        assert np.array_equal(wp, [1.0])

    def test_searching_draws_are_seed_reproducible(self):
        ps = PlannerState(search_mean=0.5, search_std=2.0)
        args = (Mode.SEARCHING, np.array([0.0, 0.0]), np.array([1.0, 2.0]))
        a = next_waypoint(*args, np.random.default_rng(11), ps)
        b = next_waypoint(*args, np.random.default_rng(11), ps)
        c = next_waypoint(*args, np.random.default_rng(12), ps)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_no_prediction_returns_none(self):
        wp = next_waypoint(Mode.SURGING, np.array([1.0]), None, np.random.default_rng(0), PlannerState())
        assert wp is None


class TestValidation:
    def test_nonpositive_timeout_rejected(self):
        with pytest.raises(ValueError, match="delta0"):
            PlannerState(delta0=0.0)

    def test_negative_spread_rejected(self):
        with pytest.raises(ValueError, match="search_std"):
            PlannerState(search_std=-1.0)
