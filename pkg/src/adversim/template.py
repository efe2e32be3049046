"""Discrete-time locally linearized planning model and admissible
state-action polytopes.

The planning state is s = [x, y, v, phi], the control u = [a_x, a_y]
(longitudinal and lateral acceleration). One step is s' = A s + B u with

    A = [[1, 0, D, 0 ],      B = [[0,   0   ],
         [0, 1, 0, vD],           [0,   0   ],
         [0, 0, 1, 0 ],           [D,   0   ],
         [0, 0, 0, 1 ]]           [0, D / v ]]

for time step D and linearization speed v. Valid for small local course
angles and small speed changes around v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Polytope, VehicleState


class NonPositiveSpeedError(ValueError):
    """Linearization speed must be strictly positive (the model divides by it)."""


class EmptyBoxError(ValueError):
    """An action box needs min < max on each axis."""


@dataclass(frozen=True)
class TemplateMatrices:
    a: np.ndarray
    b: np.ndarray
    v_tilde: float
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        self.a.setflags(write=False)
        self.b.setflags(write=False)


@dataclass(frozen=True)
class TemplateControl:
    a_x: float
    a_y: float

    def __post_init__(self):
        if not (math.isfinite(self.a_x) and math.isfinite(self.a_y)):
            raise ValueError("control components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.a_x, self.a_y])


def build_matrices(v_tilde: float, delta: float) -> TemplateMatrices:
    """Assemble the step matrices for a linearization speed and time step."""
    if v_tilde <= 0:
        raise NonPositiveSpeedError(f"v_tilde must be > 0, got {v_tilde}")
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    a = np.eye(4)
    a[0, 2] = delta
    a[1, 3] = v_tilde * delta
    b = np.zeros((4, 2))
    b[2, 0] = delta
    b[3, 1] = delta / v_tilde
    return TemplateMatrices(a, b, v_tilde, delta)


def step(s: VehicleState, u: TemplateControl, m: TemplateMatrices) -> VehicleState:
    """One linear step s' = A s + B u. No clamping; constraint enforcement
    is the planners' job."""
    out = m.a @ s.as_array() + m.b @ u.as_array()
    return VehicleState.from_array(out)


def rollout(s0: VehicleState, u_seq: Sequence[TemplateControl], m: TemplateMatrices) -> list:
    """Propagate N controls from s0; returns N + 1 states starting with s0."""
    if len(u_seq) < 1:
        raise ValueError("u_seq must contain at least one control")
    states = [s0]
    for u in u_seq:
        states.append(step(states[-1], u, m))
    return states


def default_action_polytope(a_x_bounds, a_y_bounds, kamm_octagon: bool = False) -> Polytope:
    """Box constraints on (a_x, a_y), optionally cut by four diagonal rows
    |a_x| + |a_y| <= r with r = max absolute bound. The cut set is an inner
    approximation of the friction circle a_x^2 + a_y^2 <= r^2."""
    ax_min, ax_max = float(a_x_bounds[0]), float(a_x_bounds[1])
    ay_min, ay_max = float(a_y_bounds[0]), float(a_y_bounds[1])
    if not (ax_min < ax_max and ay_min < ay_max):
        raise EmptyBoxError("need min < max on both action axes")
    g = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
    h = [ax_max, -ax_min, ay_max, -ay_min]
    if kamm_octagon:
        r = max(abs(ax_min), abs(ax_max), abs(ay_min), abs(ay_max))
        for sx in (1.0, -1.0):
            for sy in (1.0, -1.0):
                g.append([sx, sy])
                h.append(r)
    return Polytope(np.array(g), np.array(h))


def lane_center(lane_index: int, lane_width: float) -> float:
    return (lane_index + 0.5) * lane_width


def lane_state_polytope(lane_count: int, lane_width: float, v_range,
                        vehicle_width: float = 2.0, phi_max: float = 0.3) -> Polytope:
    """Operable-domain rows over [x, y, v, phi]: the vehicle center stays
    inside the drivable band (road minus half a vehicle width per side),
    speed inside v_range, heading within phi_max. x is unconstrained."""
    if lane_count < 1 or lane_width <= 0:
        raise ValueError("need lane_count >= 1 and lane_width > 0")
    v_min, v_max = float(v_range[0]), float(v_range[1])
    if v_min >= v_max:
        raise ValueError("invalid speed range")
    y_lo = 0.5 * vehicle_width
    y_hi = lane_count * lane_width - 0.5 * vehicle_width
    g = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, -1.0],
    ])
    h = np.array([y_hi, -y_lo, v_max, -v_min, phi_max, phi_max])
    return Polytope(g, h)


def band_rows(y_lo: float, y_hi: float) -> Polytope:
    """Dedicated lateral-band rows over the 4-state."""
    g = np.array([[0.0, 1.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0]])
    return Polytope(g, np.array([y_hi, -y_lo]))


@dataclass(frozen=True)
class AdmissibleSpace:
    """Paired action and state constraint sets for one vehicle."""

    action: Polytope
    state: Polytope

    def __post_init__(self):
        for name, poly, probe_dim in (("action", self.action, 2), ("state", self.state, 4)):
            if poly.dim != probe_dim:
                raise ValueError(f"{name} polytope must have dimension {probe_dim}")
            if _feasibility_probe(poly) is None:
                raise ValueError(f"{name} polytope is empty")


def _feasibility_probe(poly: Polytope) -> Optional[np.ndarray]:
    """Find any point satisfying the rows, or None. Deferred import keeps
    the solver dependency one-way."""
    from . import qp

    prob = qp.QpProblem(np.eye(poly.dim), np.zeros(poly.dim), poly)
    sol = qp.solve(prob)
    if sol.status is qp.QpStatus.INFEASIBLE:
        return None
    return sol.x


def clip_to_polytope(u: np.ndarray, poly: Polytope) -> np.ndarray:
    """Shrink a control toward the origin until it satisfies the rows.

    Assumes the origin is admissible, which holds for every action set
    built here. Deterministic and cheap, used for prediction clamping."""
    u = np.asarray(u, dtype=float)
    resid = poly.g @ u - poly.h
    if np.all(resid <= 1e-12):
        return u
    # largest alpha in [0, 1] with G(alpha u) <= h; rows with g@u <= 0 never bind
    gu = poly.g @ u
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(gu > 1e-15, poly.h / gu, np.inf)
    alpha = float(np.clip(np.min(ratios), 0.0, 1.0))
    return alpha * u
