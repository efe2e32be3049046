import math

import numpy as np
import pytest

from adversim.core import Polytope, VehicleState, rotation
from adversim.template import (AdmissibleSpace, build_matrices,
                               default_action_polytope)
from adversim.worstcase import (best_response_minimax, capture_distance_bound,
                                condense, find_min_capture_time,
                                plan_worst_case, unavoidable_relaxation)
from oracles import grid_minimax_value

AX_BOUNDS = (-1.7, 0.67)
AY_BOUNDS = (-1.0, 1.0)


def wide_state_polytope():
    g = np.vstack([np.eye(4), -np.eye(4)])
    h = np.full(8, 1e7)
    return Polytope(g, h)


def default_space():
    return AdmissibleSpace(default_action_polytope(AX_BOUNDS, AY_BOUNDS),
                           wide_state_polytope())


def zero_action_space():
    zero = Polytope(np.vstack([np.eye(2), -np.eye(2)]), np.zeros(4))
    return AdmissibleSpace(zero, wide_state_polytope())


class TestBestResponseMinimax:
    def test_coincident_single_step(self):
        # one-step controls cannot move positions, so two coincident
        # vehicles stay coincident: value 0 within the stated bound
        s = VehicleState(0, 0, 18, 0)
        m = build_matrices(18.0, 0.1)
        res = best_response_minimax(s, s, 1, default_space(), default_space(), m, m)
        assert res.converged
        assert res.value <= 0.04

    def test_pinned_evader_reduces_to_pursuit(self):
        # with the evader's action set collapsed to {0}, the value is the
        # squared distance from its ballistic endpoint to the pursuer's
        # reachable set; cross-check with the grid oracle at a fine grid
        sv = VehicleState(30.0, 2.0, 10.0, 0.0)
        pov = VehicleState(0.0, 0.0, 20.0, 0.0)
        m_sv = build_matrices(10.0, 0.5)
        m_pov = build_matrices(20.0, 0.5)
        res = best_response_minimax(sv, pov, 3, zero_action_space(), default_space(),
                                    m_sv, m_pov)
        oracle = grid_minimax_value(sv.as_array(), pov.as_array(), 3, 0.5,
                                    ((0, 0), (0, 0)), (AX_BOUNDS, AY_BOUNDS),
                                    sv_v_tilde=10.0, pov_v_tilde=20.0, levels=9)
        assert res.value == pytest.approx(oracle, rel=0.02, abs=0.02)

    def test_head_on_closing_instance(self):
        # pursuer behind at 30 m/s closing on a 5 m/s evader 20 m ahead
        sv = VehicleState(20.0, 0.0, 5.0, 0.0)
        pov = VehicleState(0.0, 0.0, 35.0, 0.0)
        m_sv = build_matrices(5.0, 0.5)
        m_pov = build_matrices(35.0, 0.5)
        res = best_response_minimax(sv, pov, 3, default_space(), default_space(),
                                    m_sv, m_pov)
        oracle = grid_minimax_value(sv.as_array(), pov.as_array(), 3, 0.5,
                                    (AX_BOUNDS, AY_BOUNDS), (AX_BOUNDS, AY_BOUNDS),
                                    sv_v_tilde=5.0, pov_v_tilde=35.0)
        assert res.value == pytest.approx(oracle, rel=0.05)

    def test_controls_satisfy_action_boxes(self):
        sv = VehicleState(15.0, 1.0, 12.0, 0.0)
        pov = VehicleState(0.0, 0.0, 20.0, 0.0)
        m_sv = build_matrices(12.0, 0.5)
        m_pov = build_matrices(20.0, 0.5)
        res = best_response_minimax(sv, pov, 3, default_space(), default_space(),
                                    m_sv, m_pov)
        box = default_action_polytope(AX_BOUNDS, AY_BOUNDS)
        for u in res.pov_controls:
            assert box.contains(u, slack=1e-7)
        for u in res.sv_controls:
            assert box.contains(u, slack=1e-7)
        assert res.value >= 0.0

    def test_best_response_monotonicity(self):
        sv = VehicleState(25.0, 2.0, 10.0, 0.05)
        pov = VehicleState(0.0, 0.0, 18.0, 0.0)
        m_sv = build_matrices(10.0, 0.2)
        m_pov = build_matrices(18.0, 0.2)
        res = best_response_minimax(sv, pov, 6, default_space(), default_space(),
                                    m_sv, m_pov)
        prev = None
        for phase, value in res.value_history:
            if prev is not None:
                if phase == "pov":
                    assert value <= prev + 1e-9
                elif phase == "sv":
                    assert value >= prev - 1e-9
            prev = value


class TestFindMinCaptureTime:
    def test_inside_ball_captures_in_one_step(self):
        sv = VehicleState(3.0, 0.0, 18.0, 0.0)
        pov = VehicleState(0.0, 0.0, 18.0, 0.0)
        m = build_matrices(18.0, 0.1)
        cap = find_min_capture_time(sv, pov, 7.0, 2.0, default_space(),
                                    default_space(), m, m)
        assert cap is not None
        assert cap.t_star == pytest.approx(0.1)
        assert cap.minimax.value <= 49.0 + 1e-6

    def test_far_target_unreachable(self):
        sv = VehicleState(500.0, 0.0, 20.0, 0.0)
        pov = VehicleState(0.0, 0.0, 45.0, 0.0)
        m_sv = build_matrices(20.0, 0.1)
        m_pov = build_matrices(45.0, 0.1)
        scan = []
        cap = find_min_capture_time(sv, pov, 7.0, 2.0, default_space(),
                                    default_space(), m_sv, m_pov, scan_log=scan)
        assert cap is None
        assert all(e.pruned for e in scan)   # ballistic bound rules all out

    def test_larger_diameter_never_later(self):
        # growing the capture ball enlarges the certified set, so the
        # qualifying horizon cannot move later
        m = build_matrices(16.0, 0.1)
        rng = np.random.default_rng(2)
        found_both = 0
        for _ in range(12):
            gap = rng.uniform(2.0, 8.0)
            dv = rng.uniform(-2.0, 2.0)
            sv = VehicleState(gap, rng.uniform(-1, 1), 16.0 + dv, 0.0)
            pov = VehicleState(0.0, 0.0, 16.0, 0.0)
            cap7 = find_min_capture_time(sv, pov, 7.0, 2.0, default_space(),
                                         default_space(), m, m)
            cap12 = find_min_capture_time(sv, pov, 12.0, 2.0, default_space(),
                                          default_space(), m, m)
            if cap7 is not None and cap12 is not None:
                found_both += 1
                assert cap12.t_star <= cap7.t_star + 1e-9
        assert found_both >= 3

    def test_scan_minimality_logged(self):
        sv = VehicleState(8.0, 0.0, 14.0, 0.0)
        pov = VehicleState(0.0, 0.0, 18.0, 0.0)
        m_sv = build_matrices(14.0, 0.1)
        m_pov = build_matrices(18.0, 0.1)
        scan = []
        cap = find_min_capture_time(sv, pov, 7.0, 2.0, default_space(),
                                    default_space(), m_sv, m_pov, scan_log=scan)
        assert cap is not None
        n_star = round(cap.t_star / 0.1)
        for entry in scan:
            if entry.horizon_steps < n_star:
                if entry.pruned:
                    assert entry.bound > 7.0
                else:
                    assert entry.value > 49.0

    def test_rejects_bad_horizon(self):
        m = build_matrices(10.0, 0.1)
        sv = VehicleState(1.0, 0.0, 10.0, 0.0)
        with pytest.raises(ValueError):
            find_min_capture_time(sv, sv, 7.0, 0.25, default_space(),
                                  default_space(), m, m)


class TestPlanWorstCase:
    def _lane_space(self):
        g = np.array([[0, 1, 0, 0], [0, -1, 0, 0],
                      [0, 0, 1, 0], [0, 0, -1, 0],
                      [0, 0, 0, 1], [0, 0, 0, -1.0]])
        h = np.array([10.1, -1.0, 45.0, -5.0, 0.3, 0.3])
        return AdmissibleSpace(default_action_polytope(AX_BOUNDS, AY_BOUNDS),
                               Polytope(g, h))

    def test_reference_length_matches_t_star(self):
        sv = VehicleState(9.0, 5.0, 13.0, 0.0)
        pov = VehicleState(0.0, 5.0, 18.0, 0.0)
        m_sv = build_matrices(13.0, 0.1)
        m_pov = build_matrices(18.0, 0.1)
        cap = find_min_capture_time(sv, pov, 7.0, 2.0, self._lane_space(),
                                    self._lane_space(), m_sv, m_pov)
        assert cap is not None
        assert len(cap.reference) == round(cap.t_star / 0.1) + 1

    def test_reference_respects_state_rows(self):
        space = self._lane_space()
        sv = VehicleState(9.0, 5.0, 13.0, 0.0)
        pov = VehicleState(0.0, 5.0, 18.0, 0.0)
        m_sv = build_matrices(13.0, 0.1)
        m_pov = build_matrices(18.0, 0.1)
        ref = plan_worst_case(sv, pov, 7.0, 2.0, space, space, m_sv, m_pov)
        assert ref is not None
        for s in ref[1:]:
            assert np.all(space.state.violations(s.as_array()) <= 1e-6)

    def test_absent_when_unreachable(self):
        space = self._lane_space()
        sv = VehicleState(400.0, 5.0, 13.0, 0.0)
        pov = VehicleState(0.0, 5.0, 18.0, 0.0)
        m_sv = build_matrices(13.0, 0.1)
        m_pov = build_matrices(18.0, 0.1)
        assert plan_worst_case(sv, pov, 7.0, 2.0, space, space, m_sv, m_pov) is None

    def test_final_position_near_every_gridded_evasion(self):
        # small-horizon capture: the plan must end within c of the evader's
        # endpoint for every action-grid response
        from oracles import _offset_cloud
        space = default_space()
        sv = VehicleState(2.5, 0.5, 15.0, 0.0)
        pov = VehicleState(0.0, 0.0, 15.0, 0.0)
        m = build_matrices(15.0, 0.1)
        cap = find_min_capture_time(sv, pov, 7.0, 0.5, space, space, m, m)
        assert cap is not None
        n = round(cap.t_star / 0.1)
        end = cap.reference[-1].position
        ballistic = sv.position + np.array([sv.v * 0.1 * n, 0.0])
        cloud = _offset_cloud(np.linspace(*AX_BOUNDS, 4),
                              np.linspace(*AY_BOUNDS, 4), n, 0.1)
        dists = np.linalg.norm(ballistic + cloud - end, axis=1)
        assert float(np.max(dists)) <= 7.0 + 0.5


class TestHelpers:
    def test_distance_bound_is_lower_bound(self):
        rng = np.random.default_rng(4)
        space = default_space()
        for _ in range(15):
            sv = VehicleState(rng.uniform(3, 25), rng.uniform(-3, 3),
                              rng.uniform(6, 25), rng.uniform(-0.1, 0.1))
            pov = VehicleState(0.0, 0.0, rng.uniform(6, 25), 0.0)
            n = int(rng.integers(1, 8))
            m_sv = build_matrices(sv.v, 0.2)
            m_pov = build_matrices(pov.v, 0.2)
            m0 = condense(sv, m_sv, n)
            m1 = condense(pov, m_pov, n)
            w = m0.base[n][:2] - m1.base[n][:2]
            lb = capture_distance_bound(w, np.eye(2), space, m_pov, n, pov.v)
            res = best_response_minimax(sv, pov, n, space, space, m_sv, m_pov)
            assert lb * lb <= res.value + 1e-6

    def test_unavoidable_relaxation_zero_inside(self):
        space = default_space()
        s = VehicleState(0, 5, 20, 0)
        model = condense(s, build_matrices(20.0, 0.1), 10)
        g = np.array([[0, 1, 0, 0.0], [0, -1, 0, 0]])
        poly = Polytope(g, np.array([100.0, 100.0]))
        relax = unavoidable_relaxation(model, poly, space.action)
        assert np.allclose(relax, 0.0)

    def test_unavoidable_relaxation_covers_drift(self):
        # heading drift makes a tight lateral row unavoidably violated
        space = default_space()
        s = VehicleState(0, 0.0, 10, 0.2)
        model = condense(s, build_matrices(10.0, 0.1), 10)
        poly = Polytope(np.array([[0, 1, 0, 0.0]]), np.array([0.05]))
        relax = unavoidable_relaxation(model, poly, space.action)
        assert relax.max() > 0.0
