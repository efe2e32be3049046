"""Predictive pursuit planning.

When no capture time qualifies, the adversarial vehicle tracks a forecast
of the subject instead: the subject is assumed to hold its current control
(clipped admissible, zeroed once the forecast would exit the state rows),
and the planner solves a convex tracking QP that minimizes the weighted
state difference between the two vehicles over the horizon, subject to the
adversary's own state and action rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Polytope, VehicleState
from .qp import QpFailureError, QpProblem, QpStatus, solve
from .template import (AdmissibleSpace, TemplateControl, TemplateMatrices,
                       clip_to_polytope, step)
from .worstcase import (CondensedModel, _action_rows, _state_rows, condense,
                        initial_violation, unavoidable_relaxation)


@dataclass(frozen=True)
class TrackingWeights:
    """Running and terminal cost matrices over the 4-state difference."""

    q_r: np.ndarray
    q_f: np.ndarray

    def __post_init__(self):
        for name in ("q_r", "q_f"):
            q = np.asarray(getattr(self, name), dtype=float)
            if q.shape != (4, 4):
                raise ValueError(f"{name} must be 4x4")
            q = 0.5 * (q + q.T)
            if float(np.linalg.eigvalsh(q)[0]) < -1e-8:
                raise ValueError(f"{name} must be positive semidefinite")
            q.setflags(write=False)
            object.__setattr__(self, name, q)

    @staticmethod
    def lateral_emphasis() -> "TrackingWeights":
        return TrackingWeights(np.diag([1.0, 100.0, 0.1, 0.1]),
                               np.diag([1.0, 100.0, 0.1, 0.1]))


@dataclass
class SvPrediction:
    states: list                  # n+1 template states in the SV frame
    assumed_control: TemplateControl

    @property
    def horizon_steps(self) -> int:
        return len(self.states) - 1


def predict_sv(sv: VehicleState, last_control: TemplateControl, t_bar: float,
               mats: TemplateMatrices, space: AdmissibleSpace,
               traditional: bool = False) -> SvPrediction:
    """Forecast the subject holding its current control. traditional=True
    switches to the zero-control steady state. The held control is zeroed
    from the first step whose successor would leave the state rows, so the
    forecast is always an exact rollout of the emitted control sequence."""
    n = int(round(t_bar / mats.delta))
    if n < 1 or abs(n * mats.delta - t_bar) > 1e-9:
        raise ValueError("t_bar must be a positive multiple of delta")
    held = np.zeros(2) if traditional else clip_to_polytope(last_control.as_array(), space.action)
    held_ctrl = TemplateControl(float(held[0]), float(held[1]))
    zero = TemplateControl(0.0, 0.0)
    relax = initial_violation(space.state, sv.as_array())
    bounds = space.state.relaxed(relax)

    states = [sv]
    u = held_ctrl
    for _ in range(n):
        nxt = step(states[-1], u, mats)
        if u is not zero and not bounds.contains(nxt.as_array(), slack=1e-9):
            u = zero
            nxt = step(states[-1], u, mats)
        states.append(nxt)
    return SvPrediction(states, held_ctrl)


def plan_tracking(prediction: SvPrediction, pov_state: VehicleState,
                  weights: TrackingWeights,
                  pov_space: AdmissibleSpace, pov_mats: TemplateMatrices,
                  sv_rot: Optional[np.ndarray] = None,
                  pov_rot: Optional[np.ndarray] = None,
                  warm: Optional[np.ndarray] = None,
                  state_rates: Optional[np.ndarray] = None,
                  state_const_rows: Optional[np.ndarray] = None) -> tuple:
    """Track the forecast: minimize sum of weighted squared differences
    between the adversary's rolled-out states and the forecast states.
    Positions are compared in world coordinates (frames may differ), speed
    and local heading directly. Returns (reference states in the POV
    frame, controls (n, 2), QpSolution)."""
    n = prediction.horizon_steps
    if n < 1:
        raise ValueError("prediction must cover at least one step")
    r0 = np.eye(2) if sv_rot is None else np.asarray(sv_rot, dtype=float)
    r1 = np.eye(2) if pov_rot is None else np.asarray(pov_rot, dtype=float)
    t0 = np.eye(4)
    t0[:2, :2] = r0
    t1 = np.eye(4)
    t1[:2, :2] = r1

    model = condense(pov_state, pov_mats, n)
    # stack cost over t = 1..n (the t = 0 term is constant in the controls)
    h = np.zeros((2 * n, 2 * n))
    g = np.zeros(2 * n)
    for t in range(1, n + 1):
        q = weights.q_f if t == n else weights.q_r
        m_t = t1 @ model.phi[t]
        err0 = t1 @ model.base[t] - t0 @ prediction.states[t].as_array()
        h += 2.0 * m_t.T @ q @ m_t
        g += 2.0 * m_t.T @ q @ err0

    relax = unavoidable_relaxation(model, pov_space.state, pov_space.action,
                                   state_rates, state_const_rows)
    rows = _action_rows(pov_space.action, n).intersect(
        _state_rows(model, pov_space.state, relax, state_rates))

    x0 = None
    if warm is not None:
        w = np.asarray(warm, dtype=float).ravel()
        if w.shape[0] == 2 * n and rows.contains(w, slack=1e-9):
            x0 = w
    sol = solve(QpProblem(h, g, rows), x0=x0)
    if sol.status is QpStatus.INFEASIBLE:
        raise QpFailureError("tracking subproblem infeasible after relaxation", sol)

    controls = sol.x.reshape(n, 2)
    states = [pov_state]
    for a_x, a_y in controls:
        states.append(step(states[-1], TemplateControl(float(a_x), float(a_y)), pov_mats))
    return states, controls, sol
