import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adversim.core import VehicleState
from adversim.template import (AdmissibleSpace, EmptyBoxError,
                               NonPositiveSpeedError, TemplateControl,
                               build_matrices, clip_to_polytope,
                               default_action_polytope, lane_center,
                               lane_state_polytope, rollout, step)
from oracles import circle_contains, rollout_closed_form, template_step_closed_form

AX_BOUNDS = (-1.7, 0.67)
AY_BOUNDS = (-1.0, 1.0)


class TestBuildMatrices:
    def test_highway_linearization_values(self):
        m = build_matrices(18.0, 0.1)
        assert m.a[1, 3] == pytest.approx(1.8)
        assert m.b[3, 1] == pytest.approx(0.1 / 18.0)

    def test_unit_values(self):
        m = build_matrices(1.0, 1.0)
        assert m.a[1, 3] == 1.0 and m.b[3, 1] == 1.0

    def test_exact_sparsity(self):
        m = build_matrices(7.0, 0.2)
        expect_a = np.eye(4)
        expect_a[0, 2] = 0.2
        expect_a[1, 3] = 7.0 * 0.2
        assert np.array_equal(m.a, expect_a)
        expect_b = np.zeros((4, 2))
        expect_b[2, 0] = 0.2
        expect_b[3, 1] = 0.2 / 7.0
        assert np.array_equal(m.b, expect_b)

    def test_rejects_nonpositive_speed(self):
        with pytest.raises(NonPositiveSpeedError):
            build_matrices(0.0, 0.1)
        with pytest.raises(ValueError):
            build_matrices(10.0, -0.1)


class TestStep:
    def test_constant_speed_straight(self):
        m = build_matrices(18.0, 0.1)
        out = step(VehicleState(0, 0, 18, 0), TemplateControl(0, 0), m)
        assert np.allclose(out.as_array(), [1.8, 0, 18, 0])

    def test_max_longitudinal_accel(self):
        m = build_matrices(18.0, 0.1)
        out = step(VehicleState(0, 0, 18, 0), TemplateControl(0.67, 0), m)
        assert out.v == pytest.approx(18.067)
        assert out.x == pytest.approx(1.8)

    def test_lateral_accel_changes_heading(self):
        m = build_matrices(18.0, 0.1)
        out = step(VehicleState(0, 0, 18, 0), TemplateControl(0, 1.0), m)
        assert out.phi == pytest.approx(0.1 / 18.0)
        assert out.y == pytest.approx(0.0)

    def test_unit_example(self):
        m = build_matrices(10.0, 0.1)
        out = step(VehicleState(0, 0, 10, 0.1), TemplateControl(0, 0), m)
        assert np.allclose(out.as_array(), [1.0, 0.1, 10.0, 0.1])

    @given(st.floats(1, 40), st.floats(0.01, 1.0),
           st.floats(-100, 100), st.floats(-20, 20), st.floats(5, 45),
           st.floats(-0.4, 0.4), st.floats(-3, 3), st.floats(-2, 2))
    @settings(max_examples=300)
    def test_matches_closed_form(self, vt, d, x, y, v, phi, ax, ay):
        m = build_matrices(vt, d)
        got = step(VehicleState(x, y, v, phi), TemplateControl(ax, ay), m)
        want = template_step_closed_form([x, y, v, phi], [ax, ay], vt, d)
        if want[2] < 0:
            return   # braking below rest is rejected by the state type
        assert np.allclose(got.as_array(), want, atol=1e-12)

    def test_linearity(self):
        m = build_matrices(12.0, 0.1)
        rng = np.random.default_rng(7)
        for _ in range(50):
            s1 = rng.uniform([-5, -5, 5, -0.3], [5, 5, 20, 0.3])
            s2 = rng.uniform([-5, -5, 5, -0.3], [5, 5, 20, 0.3])
            u1 = rng.uniform([-1, -1], [1, 1])
            u2 = rng.uniform([-1, -1], [1, 1])
            lhs = step(VehicleState(*(s1 + s2)), TemplateControl(*(u1 + u2)), m)
            rhs = (step(VehicleState(*s1), TemplateControl(*u1), m).as_array()
                   + step(VehicleState(*s2), TemplateControl(*u2), m).as_array())
            assert np.allclose(lhs.as_array(), rhs, atol=1e-10)


class TestRollout:
    def test_two_seconds_coasting(self):
        m = build_matrices(18.0, 0.1)
        states = rollout(VehicleState(0, 0, 18, 0), [TemplateControl(0, 0)] * 20, m)
        assert len(states) == 21
        assert states[-1].x == pytest.approx(36.0)

    def test_single_step_reduces_to_step(self):
        m = build_matrices(10.0, 0.1)
        u = TemplateControl(0.3, -0.2)
        s0 = VehicleState(1, 2, 10, 0.05)
        assert np.allclose(rollout(s0, [u], m)[1].as_array(),
                           step(s0, u, m).as_array())

    def test_constant_braking(self):
        m = build_matrices(18.0, 0.1)
        states = rollout(VehicleState(0, 0, 18, 0), [TemplateControl(-1.7, 0)] * 20, m)
        assert states[-1].v == pytest.approx(18 - 1.7 * 2.0)

    def test_requires_controls(self):
        m = build_matrices(10.0, 0.1)
        with pytest.raises(ValueError):
            rollout(VehicleState(0, 0, 10, 0), [], m)

    def test_final_state_matches_matrix_power_form(self):
        rng = np.random.default_rng(3)
        m = build_matrices(14.0, 0.25)
        for _ in range(20):
            s0 = rng.uniform([-10, -5, 8, -0.2], [10, 5, 30, 0.2])
            u_seq = rng.uniform(-1.0, 0.6, size=(8, 2))
            got = rollout(VehicleState(*s0),
                          [TemplateControl(*u) for u in u_seq], m)[-1]
            want = rollout_closed_form(s0, u_seq, 14.0, 0.25)
            assert np.allclose(got.as_array(), want, atol=1e-10)


class TestActionPolytope:
    def test_default_acceleration_box(self):
        p = default_action_polytope(AX_BOUNDS, AY_BOUNDS)
        assert p.contains([0.67, 1.0]) and p.contains([-1.7, -1.0])
        assert not p.contains([0.68, 0.0])
        assert not p.contains([0.0, -1.01])

    def test_unit_box(self):
        p = default_action_polytope((-1, 1), (-1, 1))
        assert p.contains([0.0, 0.0])
        assert not p.contains([1.01, 0.0])

    def test_empty_box_rejected(self):
        with pytest.raises(EmptyBoxError):
            default_action_polytope((1.0, -1.0), (-1, 1))

    def test_octagon_cuts_corner(self):
        p = default_action_polytope((-1, 1), (-1, 1), kamm_octagon=True)
        assert not p.contains([0.9, 0.9])   # norm 1.27 over the budget
        assert p.contains([0.9, 0.05])

    def test_octagon_is_inner_approximation(self):
        p = default_action_polytope((-1, 1), (-1, 1), kamm_octagon=True)
        rng = np.random.default_rng(11)
        pts = rng.uniform(-1.2, 1.2, size=(4000, 2))
        for z in pts:
            if p.contains(z):
                assert circle_contains(z, 1.0)


class TestLanePolytope:
    def test_three_lane_band(self):
        p = lane_state_polytope(3, 3.7, (5, 45), vehicle_width=2.0)
        assert lane_center(0, 3.7) == pytest.approx(1.85)
        assert p.contains([0.0, 1.0, 20.0, 0.0])
        assert p.contains([1e6, 10.1, 20.0, 0.0])   # x unconstrained
        assert not p.contains([0.0, 0.99, 20.0, 0.0])
        assert not p.contains([0.0, 10.11, 20.0, 0.0])

    def test_speed_rows(self):
        p = lane_state_polytope(3, 3.7, (5, 45))
        assert not p.contains([0, 5, 4.9, 0])
        assert not p.contains([0, 5, 45.1, 0])
        q = lane_state_polytope(3, 3.7, (12, 45))
        assert not q.contains([0, 5, 11.9, 0])
        assert q.contains([0, 5, 12.0, 0])

    def test_heading_row(self):
        p = lane_state_polytope(3, 3.7, (5, 45), phi_max=0.3)
        assert p.contains([0, 5, 20, 0.3])
        assert not p.contains([0, 5, 20, 0.31])

    def test_admissible_space_probes_nonempty(self):
        act = default_action_polytope(AX_BOUNDS, AY_BOUNDS)
        state = lane_state_polytope(3, 3.7, (5, 45))
        AdmissibleSpace(act, state)   # does not raise
        bad = lane_state_polytope(3, 3.7, (5, 45)).with_rows(
            [[0.0, 1.0, 0.0, 0.0]], [-99.0])   # y <= -99 conflicts with y >= 1
        with pytest.raises(ValueError):
            AdmissibleSpace(act, bad)


class TestClipToPolytope:
    def test_inside_unchanged(self):
        p = default_action_polytope(AX_BOUNDS, AY_BOUNDS)
        u = np.array([0.1, -0.5])
        assert np.array_equal(clip_to_polytope(u, p), u)

    def test_scales_toward_origin(self):
        p = default_action_polytope((-1, 1), (-1, 1))
        out = clip_to_polytope(np.array([2.0, 0.0]), p)
        assert np.allclose(out, [1.0, 0.0])
        assert p.contains(out)
