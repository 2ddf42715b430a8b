"""Tests for obstacles, signed distances, and collision costs."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from arm_codesign.dynamics import ArmState, Morphology, Trajectory, forward_kinematics
from arm_codesign.geometry import (
    Circle,
    CollisionConfig,
    Rect,
    arm_clearance,
    collision_penalty,
    segment_clearance,
    signed_distance,
    step_cost,
    target_feasible,
)


def rect_sd_oracle(p, rect):
    """Brute-force signed distance: min distance to densely sampled edges."""
    (x0, y0), (x1, y1) = rect.lo, rect.hi
    pts = []
    for t in np.linspace(0.0, 1.0, 2001):
        pts.append((x0 + t * (x1 - x0), y0))
        pts.append((x0 + t * (x1 - x0), y1))
        pts.append((x0, y0 + t * (y1 - y0)))
        pts.append((x1, y0 + t * (y1 - y0)))
    d = min(math.hypot(p[0] - a, p[1] - b) for a, b in pts)
    inside = x0 <= p[0] <= x1 and y0 <= p[1] <= y1
    return -d if inside else d


class TestSignedDistance:
    def test_circle_outside(self):
        assert signed_distance((0.20, 0.0), Circle((0.10, 0.0), 0.05)) == pytest.approx(0.05)

    def test_circle_center_depth(self):
        assert signed_distance((0.10, 0.0), Circle((0.10, 0.0), 0.05)) == pytest.approx(-0.05)

    def test_rect_center_matches_edge_oracle(self):
        """Frozen from the brute-force min-distance-to-edges oracle."""
        rect = Rect((0.0, 0.0), (0.10, 0.10))
        oracle = rect_sd_oracle((0.05, 0.05), rect)
        assert oracle == pytest.approx(-0.05, abs=1e-6)
        assert signed_distance((0.05, 0.05), rect) == pytest.approx(-0.05, abs=1e-12)

    @given(
        px=st.floats(-0.5, 0.5),
        py=st.floats(-0.5, 0.5),
    )
    def test_rect_sd_matches_oracle(self, px, py):
        rect = Rect((-0.10, -0.05), (0.20, 0.15))
        assert signed_distance((px, py), rect) == pytest.approx(
            rect_sd_oracle((px, py), rect), abs=2e-4
        )

    def test_sign_flips_at_boundary_by_bisection(self):
        """Rays through each shape cross zero within 1e-9."""
        shapes = [Circle((0.05, -0.02), 0.07), Rect((-0.1, -0.1), (0.1, 0.05))]
        rng = np.random.default_rng(11)
        for obs in shapes:
            for _ in range(50):
                angle = rng.uniform(0, 2 * math.pi)
                # start inside, march out along the ray
                if isinstance(obs, Circle):
                    start = obs.center
                else:
                    start = (0.0, -0.025)
                direction = (math.cos(angle), math.sin(angle))
                lo, hi = 0.0, 1.0
                f = lambda t: signed_distance(
                    (start[0] + t * direction[0], start[1] + t * direction[1]), obs
                )
                assert f(lo) < 0 < f(hi)
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if f(mid) < 0:
                        lo = mid
                    else:
                        hi = mid
                assert abs(f(0.5 * (lo + hi))) < 1e-9


class TestSegmentClearance:
    def test_circle_clearance_analytic(self):
        """Closest-point formula: horizontal segment above a circle."""
        d = segment_clearance((-0.10, 0.10), (0.10, 0.10), Circle((0.0, 0.0), 0.05))
        assert d == pytest.approx(0.10 - 0.05, abs=1e-15)

    def test_segment_through_circle_center(self):
        d = segment_clearance((-0.10, 0.0), (0.10, 0.0), Circle((0.0, 0.0), 0.05))
        assert d == pytest.approx(-0.05, abs=1e-15)

    def test_segment_inside_rect_is_negative(self):
        d = segment_clearance((0.02, 0.02), (0.08, 0.08), Rect((0.0, 0.0), (0.10, 0.10)))
        assert d < 0

    @given(
        ax=st.floats(-0.4, 0.4), ay=st.floats(-0.4, 0.4),
        bx=st.floats(-0.4, 0.4), by=st.floats(-0.4, 0.4),
    )
    def test_symmetry_in_endpoints(self, ax, ay, bx, by):
        """Clearance is exactly symmetric in (a, b) for both shapes."""
        for obs in (Circle((0.03, 0.01), 0.06), Rect((-0.1, -0.1), (0.05, 0.08))):
            assert segment_clearance((ax, ay), (bx, by), obs) == segment_clearance(
                (bx, by), (ax, ay), obs
            )

    def test_degenerate_segment_is_point_distance(self):
        obs = Circle((0.0, 0.0), 0.05)
        assert segment_clearance((0.1, 0.0), (0.1, 0.0), obs) == pytest.approx(0.05)


class TestStepCost:
    def test_empty_obstacles_cost_zero(self, baseline):
        assert step_cost(ArmState(0.3, 0.1), baseline, [], CollisionConfig()) == 0.0

    def test_clearance_at_margin_cost_zero(self, baseline):
        """Hinge inactive when every link clears by >= margin."""
        # arm along +x, obstacle far below
        obs = [Circle((0.0, -0.5), 0.1)]
        assert step_cost(ArmState(0.0, 0.0), baseline, obs, CollisionConfig()) == 0.0

    def test_hinge_arithmetic_on_constructed_pose(self, baseline):
        """Clearance of margin - 0.01 with exponent 2 costs 1e-4 (one link)."""
        cfg = CollisionConfig(margin=0.02, exponent=2)
        # arm along +x: link2 spans x in [0.15, 0.30] at y = 0
        # circle below it: clearance = 0.05 - radius = margin - 0.01 = 0.01
        obs = Circle((0.225, -0.05), 0.04)
        state = ArmState(0.0, 0.0)
        clearance = segment_clearance((0.15, 0.0), (0.30, 0.0), obs)
        assert clearance == pytest.approx(cfg.margin - 0.01, abs=1e-12)
        # link1 is far enough to be cost-free
        assert segment_clearance((0.0, 0.0), (0.15, 0.0), obs) > cfg.margin
        assert step_cost(state, baseline, [obs], cfg) == pytest.approx(1e-4, abs=1e-12)

    def test_zero_iff_min_clearance_above_margin(self, baseline):
        """step_cost == 0 exactly when every link clears every obstacle."""
        cfg = CollisionConfig(margin=0.01)
        rng = np.random.default_rng(5)
        for _ in range(200):
            state = ArmState(rng.uniform(-3, 3), rng.uniform(-3, 3))
            obs = [Circle((rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)), 0.05)]
            cost = step_cost(state, baseline, obs, cfg)
            clearance = arm_clearance(state, baseline, obs)
            assert (cost == 0.0) == (clearance >= cfg.margin)


def make_traj(states, morph):
    ee = np.array(
        [forward_kinematics(morph, (s.q1, s.q2))[1] for s in states]
    )
    torques = np.zeros((len(states) - 1, 2))
    return Trajectory(states=list(states), ee_positions=ee, torques=torques)


class TestCollisionPenalty:
    def test_obstacle_free_trajectory(self, baseline):
        states = [ArmState(0.1 * k, 0.0) for k in range(5)]
        traj = make_traj(states, baseline)
        res = collision_penalty(traj, baseline, [], CollisionConfig())
        assert res.penalty == 0.0
        assert res.violating_states == 0

    def test_single_violating_state(self, baseline):
        """One violating state contributes exactly its step cost."""
        cfg = CollisionConfig(margin=0.02, exponent=2)
        obs = [Circle((0.225, -0.05), 0.04)]
        states = [ArmState(math.pi / 2, 0.0), ArmState(0.0, 0.0)]
        traj = make_traj(states, baseline)
        res = collision_penalty(traj, baseline, obs, cfg)
        assert res.violating_states == 1
        assert res.penalty == pytest.approx(1e-4, abs=1e-12)

    def test_matches_per_step_brute_force(self, baseline):
        """Penalty equals the sum of independently recomputed step costs."""
        cfg = CollisionConfig(margin=0.015)
        rng = np.random.default_rng(9)
        for _ in range(50):
            states = [
                ArmState(rng.uniform(-3, 3), rng.uniform(-3, 3)) for _ in range(25)
            ]
            obs = [
                Circle((rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25)), 0.06),
                Rect((-0.2, -0.25), (-0.05, -0.1)),
            ]
            traj = make_traj(states, baseline)
            res = collision_penalty(traj, baseline, obs, cfg)
            expected = sum(step_cost(s, baseline, obs, cfg) for s in states)
            count = sum(1 for s in states if step_cost(s, baseline, obs, cfg) > 0)
            assert res.penalty == pytest.approx(expected, rel=1e-12, abs=1e-15)
            assert res.violating_states == count
            assert (res.penalty == 0.0) == (res.violating_states == 0)

    def test_monotone_in_margin(self, baseline):
        """For a fixed trajectory the penalty never decreases with margin."""
        rng = np.random.default_rng(13)
        states = [ArmState(rng.uniform(-3, 3), rng.uniform(-3, 3)) for _ in range(20)]
        obs = [Circle((0.1, 0.05), 0.07)]
        traj = make_traj(states, baseline)
        previous = -1.0
        for margin in (0.0, 0.005, 0.01, 0.02, 0.05, 0.1):
            res = collision_penalty(
                traj, baseline, obs, CollisionConfig(margin=margin)
            )
            assert res.penalty >= previous
            previous = res.penalty


class TestTargetFeasible:
    def test_beyond_reach(self, baseline):
        assert not target_feasible((0.35, 0.0), [], baseline, 0.02)

    def test_at_circle_center(self, baseline):
        obs = [Circle((0.10, 0.05), 0.04)]
        assert not target_feasible((0.10, 0.05), obs, baseline, 0.02)

    def test_open_workspace_point(self, baseline):
        """(0.10, 0.05) in an empty layout is feasible."""
        assert target_feasible((0.10, 0.05), [], baseline, 0.02)

    def test_safety_margin_is_strict(self, baseline):
        obs = [Circle((0.0, 0.0), 0.05)]
        # signed distance exactly 0.0 at the boundary: not > safety=0
        assert not target_feasible((0.05, 0.0), obs, baseline, 0.0)
        assert target_feasible((0.08, 0.0), obs, baseline, 0.02)
        assert not target_feasible((0.065, 0.0), obs, baseline, 0.02)
