"""Kinematic bicycle model and the navigation MPC that tracks planned
template references with acceleration and steering controls.

The simulation plant for every vehicle is the bicycle model. Planners emit
template references (states over the horizon at the planning step); the
MPC linearizes the bicycle dynamics about the reference, maps the template
action bounds into acceleration and steering terms, and solves a tracking
QP each tick, applying only the first control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Polytope, VehicleState, wrap_angle
from .qp import QpFailureError, QpProblem, QpStatus, solve
from .template import AdmissibleSpace

_SPEED_FLOOR = 0.1   # below this a reference cannot define curvature


class SteerOutOfRangeError(ValueError):
    pass


class DegenerateReferenceError(ValueError):
    pass


@dataclass(frozen=True)
class AnchorState:
    """Bicycle state; same quantities as VehicleState, kept as a separate
    type to mark which model a value belongs to."""

    x: float
    y: float
    phi: float
    v: float

    def to_vehicle_state(self) -> VehicleState:
        return VehicleState(self.x, self.y, self.v, self.phi)

    @staticmethod
    def from_vehicle_state(s: VehicleState) -> "AnchorState":
        return AnchorState(s.x, s.y, s.phi, s.v)

    def as_array(self) -> np.ndarray:
        """Array in planning order [x, y, v, phi]."""
        return np.array([self.x, self.y, self.v, self.phi])


@dataclass(frozen=True)
class AnchorControl:
    a: float
    steer: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.steer)):
            raise ValueError("control components must be finite")


@dataclass(frozen=True)
class BicycleParams:
    wheelbase: float = 2.7
    steer_max: float = 0.6
    steer_rate_max: float = 0.8

    def __post_init__(self):
        if not (self.wheelbase > 0 and self.steer_max > 0 and self.steer_rate_max > 0):
            raise ValueError("bicycle parameters must be positive")


def anchor_step(s: AnchorState, u: AnchorControl, p: BicycleParams, delta: float) -> AnchorState:
    """One bicycle step. Speed is floored at zero; heading wraps."""
    if abs(u.steer) > p.steer_max + 1e-12:
        raise SteerOutOfRangeError(f"|steer|={abs(u.steer):.4f} exceeds {p.steer_max}")
    x = s.x + s.v * math.cos(s.phi) * delta
    y = s.y + s.v * math.sin(s.phi) * delta
    phi = wrap_angle(s.phi + (s.v / p.wheelbase) * math.tan(u.steer) * delta)
    v = max(s.v + u.a * delta, 0.0)
    return AnchorState(x, y, phi, v)


def _nominal_controls(reference: Sequence[VehicleState], p: BicycleParams, delta: float):
    """Recover the accelerations and steering angles that reproduce the
    reference under the bicycle model."""
    a_nom, steer_nom = [], []
    for s0, s1 in zip(reference[:-1], reference[1:]):
        if s0.v < _SPEED_FLOOR:
            raise DegenerateReferenceError("reference speed too small for curvature recovery")
        a_nom.append((s1.v - s0.v) / delta)
        dphi = wrap_angle(s1.phi - s0.phi)
        steer_nom.append(math.atan(dphi * p.wheelbase / (delta * s0.v)))
    return np.array(a_nom), np.array(steer_nom)


def linearize_reference(reference: Sequence[VehicleState], p: BicycleParams, delta: float):
    """Time-varying affine model (A_t, B_t, c_t) about the reference, in
    planning order [x, y, v, phi]. The affine residual makes the reference
    an exact fixed point: rolling from reference[0] with the nominal
    controls reproduces the reference."""
    if len(reference) < 2:
        raise DegenerateReferenceError("reference needs at least 2 states")
    a_nom, steer_nom = _nominal_controls(reference, p, delta)
    out = []
    for t, s in enumerate(reference[:-1]):
        v, phi, st = s.v, s.phi, steer_nom[t]
        ca, sa = math.cos(phi), math.sin(phi)
        a_t = np.array([
            [1.0, 0.0, delta * ca, -v * delta * sa],
            [0.0, 1.0, delta * sa, v * delta * ca],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, (delta / p.wheelbase) * math.tan(st), 1.0],
        ])
        b_t = np.zeros((4, 2))
        b_t[2, 0] = delta
        b_t[3, 1] = (delta / p.wheelbase) * v * (1.0 + math.tan(st) ** 2)
        s_next = reference[t + 1].as_array()
        u_nom = np.array([a_nom[t], st])
        c_t = s_next - a_t @ s.as_array() - b_t @ u_nom
        out.append((a_t, b_t, c_t, u_nom))
    return out


def _extract_bounds(poly: Polytope, axis: int):
    lo, hi = -np.inf, np.inf
    for g_row, h_val in zip(poly.g, poly.h):
        nz = np.nonzero(g_row)[0]
        if len(nz) != 1 or nz[0] != axis:
            continue
        if g_row[axis] > 0:
            hi = min(hi, h_val / g_row[axis])
        else:
            lo = max(lo, h_val / g_row[axis])
    return lo, hi


class AnchorMpc:
    """Receding-horizon tracker for one vehicle. Holds the previously
    applied steering angle (for the rate rows) and a warm start."""

    def __init__(self, params: BicycleParams, spaces: AdmissibleSpace, weights,
                 delta: float, horizon_cap: Optional[int] = None):
        self.params = params
        self.spaces = spaces
        self.weights = weights
        self.delta = delta
        self.horizon_cap = horizon_cap
        self.last_steer = 0.0
        self._warm: Optional[np.ndarray] = None

    def fallback_control(self, a_min: Optional[float] = None) -> AnchorControl:
        """Hold the previous steering, brake at the longitudinal minimum."""
        if a_min is None:
            a_min, _ = _extract_bounds(self.spaces.action, 0)
        return AnchorControl(a_min if math.isfinite(a_min) else 0.0, self.last_steer)

    def track(self, current: AnchorState, reference: Sequence[VehicleState],
              state_rows: Optional[Polytope] = None,
              state_rates: Optional[np.ndarray] = None,
              state_const_rows: Optional[np.ndarray] = None) -> AnchorControl:
        """First control of the tracking QP. Raises QpFailureError when the
        subproblem cannot be solved; the caller applies fallback_control."""
        if len(reference) < 2:
            raise DegenerateReferenceError("reference needs at least 2 states")
        if self.horizon_cap is not None and len(reference) > self.horizon_cap + 1:
            reference = reference[:self.horizon_cap + 1]
        m = len(reference) - 1
        p = self.params
        lin = linearize_reference(reference, p, self.delta)
        rows_poly = self.spaces.state if state_rows is None else state_rows

        # states as affine functions of the 2m controls (a_t, steer_t)
        n_u = 2 * m
        s_maps = []                     # (S_t, s0_t): s_t = S_t u + s0_t
        s_mat = np.zeros((4, n_u))
        s_off = current.as_array()
        for t in range(m):
            a_t, b_t, c_t, _ = lin[t]
            s_mat = a_t @ s_mat
            s_mat[:, 2 * t:2 * t + 2] += b_t
            s_off = a_t @ s_off + c_t
            s_maps.append((s_mat.copy(), s_off.copy()))

        h = np.zeros((n_u, n_u))
        g = np.zeros(n_u)
        for t in range(m):
            q = self.weights.q_f if t == m - 1 else self.weights.q_r
            s_mat, s_off = s_maps[t]
            err0 = s_off - reference[t + 1].as_array()
            h += 2.0 * s_mat.T @ q @ s_mat
            g += 2.0 * s_mat.T @ q @ err0

        g_rows, h_rows = [], []
        rate = p.steer_rate_max * self.delta
        act_g, act_h = self.spaces.action.g, self.spaces.action.h
        for t in range(m):
            ia, ist = 2 * t, 2 * t + 1
            # template action rows over (a_x, a_y) map to (a, steer) via
            # a_x = a and a_y = v^2 tan(steer)/L, small-angle linearized
            # about the per-step reference speed
            coef = reference[t].v ** 2 / p.wheelbase
            for g_row, h_val in zip(act_g, act_h):
                row = np.zeros(n_u)
                row[ia] = g_row[0]
                row[ist] = g_row[1] * coef
                g_rows.append(row)
                h_rows.append(h_val)
            g_rows.append(_unit(n_u, ist, 1.0)); h_rows.append(p.steer_max)
            g_rows.append(_unit(n_u, ist, -1.0)); h_rows.append(p.steer_max)
            # steering rate
            row = np.zeros(n_u)
            row[ist] = 1.0
            prev = self.last_steer
            if t > 0:
                row[2 * t - 1] = -1.0
                prev = 0.0
            g_rows.append(row.copy()); h_rows.append(rate + prev)
            g_rows.append(-row); h_rows.append(rate - prev)

        # slacken each state row, per step, by the residual the best control
        # sequence cannot avoid: subproblems stay feasible under tracking
        # error, and recovery is forced at the rate the dynamics allow.
        # the assumed authority must match the QP's own rows, so steering
        # is capped by the mapped lateral-acceleration bound per step.
        # keep-out rows marked const get one horizon-wide slack instead,
        # so they never pin the full control sequence
        a_lo, a_hi = _extract_bounds(self.spaces.action, 0)
        ay_lo, ay_hi = _extract_bounds(self.spaces.action, 1)
        ay_amp = min(abs(ay_lo) if math.isfinite(ay_lo) else math.inf,
                     ay_hi if math.isfinite(ay_hi) else math.inf)
        u_lo = np.zeros(n_u)
        u_hi = np.zeros(n_u)
        for t in range(m):
            coef_lat = reference[t].v ** 2 / p.wheelbase
            steer_eff = p.steer_max
            if math.isfinite(ay_amp) and coef_lat > 1e-9:
                steer_eff = min(steer_eff, ay_amp / coef_lat)
            u_lo[2 * t] = a_lo if math.isfinite(a_lo) else 0.0
            u_hi[2 * t] = a_hi if math.isfinite(a_hi) else 0.0
            u_lo[2 * t + 1] = -steer_eff
            u_hi[2 * t + 1] = steer_eff
        relax_steps, bounds, coefs = [], [], []
        for t in range(m):
            s_mat, s_off = s_maps[t]
            bound = rows_poly.h.copy()
            if state_rates is not None:
                bound = bound + state_rates * ((t + 1) * self.delta)
            coef = rows_poly.g @ s_mat
            best = np.sum(np.minimum(coef * u_lo, coef * u_hi), axis=1)
            relax_steps.append(np.maximum(rows_poly.g @ s_off - bound + best, 0.0))
            bounds.append(bound)
            coefs.append(coef)
        relax_steps = np.array(relax_steps)
        if state_const_rows is not None and np.any(state_const_rows):
            worst = relax_steps.max(axis=0)
            relax_steps[:, state_const_rows] = worst[state_const_rows]
        for t in range(m):
            _, s_off = s_maps[t]
            g_rows.append(coefs[t])
            h_rows.append(bounds[t] + relax_steps[t] - rows_poly.g @ s_off)

        g_all = np.vstack([np.atleast_2d(r) for r in g_rows])
        h_all = np.concatenate([np.atleast_1d(r) for r in h_rows])
        problem = QpProblem(h, g, Polytope(g_all, h_all))

        x0 = None
        if self._warm is not None and self._warm.shape[0] >= n_u:
            cand = self._warm[:n_u]
            if problem.ineq.contains(cand, slack=1e-9):
                x0 = cand
        sol = solve(problem, x0=x0)
        if sol.status is QpStatus.INFEASIBLE:
            self._warm = None
            raise QpFailureError("tracking MPC infeasible", sol)

        u = sol.x
        self._warm = np.concatenate([u[2:], u[-2:]])
        ctrl = AnchorControl(float(u[0]), float(np.clip(u[1], -p.steer_max, p.steer_max)))
        self.last_steer = ctrl.steer
        return ctrl


def _unit(n, idx, val):
    row = np.zeros(n)
    row[idx] = val
    return row


def mpc_track(current: AnchorState, reference: Sequence[VehicleState],
              p: BicycleParams, spaces: AdmissibleSpace, weights,
              delta: float, last_steer: float = 0.0) -> AnchorControl:
    """One-shot tracking call for tests and scripts; engine code holds an
    AnchorMpc per vehicle instead."""
    mpc = AnchorMpc(p, spaces, weights, delta)
    mpc.last_steer = last_steer
    return mpc.track(current, reference)


def template_control_to_anchor(a_x: float, a_y: float, v: float,
                               p: BicycleParams) -> AnchorControl:
    """Map accelerations onto pedal and steering: a = a_x and the steering
    angle whose yaw rate reproduces the lateral acceleration at speed v."""
    v_eff = max(v, 1.0)
    steer = math.atan(p.wheelbase * a_y / (v_eff * v_eff))
    return AnchorControl(a_x, float(np.clip(steer, -p.steer_max, p.steer_max)))
