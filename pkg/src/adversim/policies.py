"""Subject-vehicle driving policies: IDM car following, gap-acceptance
lane changes executed by a PD lateral controller, and an externally
commanded policy for human drivers."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .anchor import AnchorControl
from .core import Snapshot, VehicleState, wrap_angle
from .template import TemplateControl, lane_center

LEAD_RANGE = 150.0   # ignore vehicles further ahead than this


@dataclass(frozen=True)
class IdmParams:
    v0: float = 21.0          # desired speed, m/s
    t_headway: float = 1.5    # desired time headway, s
    a_max: float = 0.67       # maximum acceleration, m/s^2
    b_comf: float = 1.7       # comfortable deceleration (positive), m/s^2
    s0: float = 2.0           # jam distance, m
    delta_exp: float = 4.0    # acceleration exponent

    def __post_init__(self):
        for name in ("v0", "t_headway", "a_max", "b_comf", "s0", "delta_exp"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def aggressive_idm(base: Optional[IdmParams] = None) -> IdmParams:
    """Preset willing to accelerate well beyond what adversarial planning
    assumes (2.6 m/s^2) and to cruise faster."""
    base = base or IdmParams()
    return replace(base, a_max=2.6, v0=max(base.v0, 28.0))


@dataclass(frozen=True)
class LaneChangeParams:
    lead_gap_min: float = 1.0    # time gap to the new lead, s
    lag_gap_min: float = 1.5     # time gap to the new lag, s
    cooldown: float = 3.0        # s between completed changes
    pd_kp: float = 0.5           # 1/s^2
    pd_kd: float = 1.2           # 1/s
    yaw_rate_max: float = 0.25   # rad/s
    abort_after: float = 4.0     # give up on a blocked change after this long

    def __post_init__(self):
        for name in ("lead_gap_min", "lag_gap_min", "cooldown", "pd_kp", "pd_kd",
                     "yaw_rate_max", "abort_after"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class PolicyState:
    current_lane: int
    target_lane: Optional[int] = None
    cooldown_remaining: float = 0.0
    last_control: TemplateControl = TemplateControl(0.0, 0.0)
    lc_elapsed: float = 0.0      # time spent in the current change


def idm_accel(v: float, gap: float, closing_speed: float, lead_exists: bool,
              p: IdmParams) -> float:
    """IDM acceleration a_max [1 - (v/v0)^d - (s*/gap)^2] with desired gap
    s* = s0 + vT + v dv / (2 sqrt(a_max b)). The dynamic part of s* is
    floored at zero (a receding lead never increases the desired gap,
    which keeps the response monotone in the closing speed). Free-road
    term only without a lead. Unclamped; callers clip into their box."""
    free = 1.0 - (v / p.v0) ** p.delta_exp
    if not lead_exists:
        return p.a_max * free
    if gap <= 0:
        raise ValueError("gap must be positive when a lead exists")
    dynamic = v * p.t_headway + v * closing_speed / (2.0 * math.sqrt(p.a_max * p.b_comf))
    s_star = p.s0 + max(dynamic, 0.0)
    return p.a_max * (free - (s_star / gap) ** 2)


def lateral_pd(y_err: float, heading_err: float, v: float, p: LaneChangeParams,
               a_y_bounds=( -1.0, 1.0)) -> float:
    """Lateral acceleration command toward zero offset and heading, with
    the implied yaw rate |a_y| / v capped and the action box applied."""
    a_y = -(p.pd_kp * y_err + p.pd_kd * v * math.sin(heading_err))
    yaw_cap = p.yaw_rate_max * max(v, 0.0)
    a_y = float(np.clip(a_y, -yaw_cap, yaw_cap))
    return float(np.clip(a_y, a_y_bounds[0], a_y_bounds[1]))


@dataclass
class RoadGeometry:
    lane_count: int
    lane_width: float

    def lane_of(self, y: float) -> int:
        return int(np.clip(math.floor(y / self.lane_width), 0, self.lane_count - 1))

    def center(self, lane: int) -> float:
        return lane_center(lane, self.lane_width)


def _longitudinal(s: VehicleState) -> float:
    return s.v * math.cos(s.phi)


LANE_OVERLAP_MARGIN = 0.5   # vehicles encroaching this far past the lane edge count


def find_lead(snapshot: Snapshot, lane: int, road: RoadGeometry,
              vehicle_length: float = 5.0,
              overlap_margin: float = LANE_OVERLAP_MARGIN):
    """Nearest vehicle ahead of the SV laterally inside (or encroaching on)
    the lane. Returns (bumper gap m, closing speed m/s) or None. Closing
    speed uses longitudinal velocities, so oncoming traffic closes fast."""
    sv = snapshot.sv
    center = road.center(lane)
    half = road.lane_width / 2.0 + overlap_margin
    best = None
    for pov in snapshot.povs:
        if abs(pov.y - center) >= half:
            continue
        dx = pov.x - sv.x
        if dx <= 0 or dx > LEAD_RANGE:
            continue
        if best is None or dx < best[0]:
            best = (dx, pov)
    if best is None:
        return None
    dx, pov = best
    gap = max(dx - vehicle_length, 0.05)
    closing = _longitudinal(sv) - _longitudinal(pov)
    return gap, closing


def _find_lag(snapshot: Snapshot, lane: int, road: RoadGeometry,
              vehicle_length: float = 5.0,
              overlap_margin: float = LANE_OVERLAP_MARGIN):
    sv = snapshot.sv
    center = road.center(lane)
    half = road.lane_width / 2.0 + overlap_margin
    best = None
    for pov in snapshot.povs:
        if abs(pov.y - center) >= half:
            continue
        dx = sv.x - pov.x
        if dx <= 0 or dx > LEAD_RANGE:
            continue
        if best is None or dx < best[0]:
            best = (dx, pov)
    if best is None:
        return None
    dx, pov = best
    return max(dx - vehicle_length, 0.05), pov.v


def lane_change_decision(snapshot: Snapshot, state: PolicyState,
                         p: LaneChangeParams, idm: IdmParams,
                         road: RoadGeometry, vehicle_length: float = 5.0,
                         merge_target: Optional[int] = None,
                         overlap_margin: float = LANE_OVERLAP_MARGIN,
                         mode: str = "utility") -> Optional[int]:
    """Propose an adjacent lane change, or None.

    mode "utility" (default): the candidate lane's IDM acceleration must
    beat the current lane's. mode "speed": the naturalistic reading, a
    driver held below its desired speed by a lead wants out and checks
    only the gaps. Both modes gate on lead and lag time-gap acceptance
    and never change onto a vehicle running alongside; ties prefer the
    left lane. merge_target forces consideration of that side with the
    desire condition waived (merging intent)."""
    if state.cooldown_remaining > 0:
        return None
    sv = snapshot.sv
    lane = state.current_lane

    def accel_in(lane_idx: int) -> float:
        lead = find_lead(snapshot, lane_idx, road, vehicle_length, overlap_margin)
        if lead is None:
            return idm_accel(sv.v, 0.0, 0.0, False, idm)
        return idm_accel(sv.v, lead[0], lead[1], True, idm)

    current_lead = find_lead(snapshot, lane, road, vehicle_length, overlap_margin)
    current_a = accel_in(lane)
    speed_desire = current_lead is not None and sv.v < idm.v0 - 1.0
    best_lane, best_a = None, current_a
    candidates = [lane + 1, lane - 1]   # left first for the tie-break
    for cand in candidates:
        if cand < 0 or cand >= road.lane_count:
            continue
        toward_merge = merge_target is not None and (
            (merge_target > lane and cand == lane + 1)
            or (merge_target < lane and cand == lane - 1))
        cand_a = accel_in(cand)
        if not toward_merge:
            if mode == "speed":
                if not speed_desire:
                    continue
            elif cand_a <= current_a + 1e-12:
                continue
        # never change onto a vehicle running alongside
        center = road.center(cand)
        half = road.lane_width / 2.0 + overlap_margin
        blocked = any(abs(pov.y - center) < half
                      and abs(pov.x - sv.x) < vehicle_length + 1.0
                      for pov in snapshot.povs)
        if blocked:
            continue
        lead = find_lead(snapshot, cand, road, vehicle_length, overlap_margin)
        if lead is not None:
            lead_gap_t = lead[0] / max(sv.v, 1.0)
            if lead_gap_t < p.lead_gap_min:
                continue
        lag = _find_lag(snapshot, cand, road, vehicle_length, overlap_margin)
        if lag is not None:
            lag_gap_t = lag[0] / max(lag[1], 1.0)
            if lag_gap_t < p.lag_gap_min:
                continue
        if toward_merge or best_lane is None or cand_a > best_a + 1e-12:
            best_lane, best_a = cand, cand_a
            if toward_merge:
                break
    return best_lane


class IdmLanePolicy:
    """IDM longitudinal control composed with lane-keeping or lane-change
    lateral control. Deterministic; all state lives in PolicyState."""

    LANE_DONE_Y = 0.2
    LANE_DONE_PHI = 0.02

    def __init__(self, idm: IdmParams, lc: LaneChangeParams, road: RoadGeometry,
                 action_bounds=((-1.7, 0.67), (-1.0, 1.0)),
                 vehicle_length: float = 5.0,
                 v_floor: Optional[float] = None,
                 merge_target: Optional[int] = None,
                 lane_changes: bool = True,
                 overlap_margin: float = LANE_OVERLAP_MARGIN,
                 decision_mode: str = "utility"):
        self.idm = idm
        self.lc = lc
        self.road = road
        self.ax_bounds, self.ay_bounds = action_bounds
        self.vehicle_length = vehicle_length
        self.v_floor = v_floor
        self.merge_target = merge_target
        self.lane_changes = lane_changes
        self.overlap_margin = overlap_margin
        self.decision_mode = decision_mode

    def initial_state(self, sv: VehicleState) -> PolicyState:
        return PolicyState(current_lane=self.road.lane_of(sv.y))

    def step(self, snapshot: Snapshot, state: PolicyState, delta: float):
        sv = snapshot.sv
        cooldown = max(state.cooldown_remaining - delta, 0.0)
        target = state.target_lane
        lc_elapsed = state.lc_elapsed + delta if target is not None else 0.0

        if target is not None:
            center = self.road.center(target)
            if abs(sv.y - center) < self.LANE_DONE_Y and abs(sv.phi) < self.LANE_DONE_PHI:
                state = replace(state, current_lane=target, target_lane=None,
                                cooldown_remaining=self.lc.cooldown)
                target = None
                cooldown = self.lc.cooldown
                lc_elapsed = 0.0
            elif lc_elapsed > self.lc.abort_after and abs(sv.y - center) > self.LANE_DONE_Y:
                # blocked change: give up, fall back to the lane under us
                state = replace(state, current_lane=self.road.lane_of(sv.y),
                                target_lane=None, cooldown_remaining=self.lc.cooldown)
                target = None
                cooldown = self.lc.cooldown
                lc_elapsed = 0.0
        if target is None and cooldown <= 0 and self.lane_changes:
            proposal = lane_change_decision(snapshot, replace(state, cooldown_remaining=0.0),
                                            self.lc, self.idm, self.road,
                                            self.vehicle_length, self.merge_target,
                                            self.overlap_margin, self.decision_mode)
            if proposal is not None:
                target = proposal
                lc_elapsed = 0.0

        # longitudinal: follow the lead in the current lane, and during a
        # change also the one in the target lane, taking the safer of the two
        lanes = [state.current_lane] if target is None else [state.current_lane, target]
        a_x = None
        for lane in lanes:
            lead = find_lead(snapshot, lane, self.road, self.vehicle_length,
                             self.overlap_margin)
            a = (idm_accel(sv.v, lead[0], lead[1], True, self.idm) if lead
                 else idm_accel(sv.v, 0.0, 0.0, False, self.idm))
            a_x = a if a_x is None else min(a_x, a)
        if self.v_floor is not None:
            a_x = max(a_x, (self.v_floor - sv.v) / delta)
        a_x = float(np.clip(a_x, self.ax_bounds[0], self.ax_bounds[1]))

        goal_lane = target if target is not None else state.current_lane
        y_err = sv.y - self.road.center(goal_lane)
        a_y = lateral_pd(y_err, sv.phi, sv.v, self.lc, self.ay_bounds)

        control = TemplateControl(a_x, a_y)
        new_state = replace(state, target_lane=target, cooldown_remaining=cooldown,
                            last_control=control, lc_elapsed=lc_elapsed)
        return control, new_state


class ConstantPolicy:
    """Holds a fixed control; the zero default gives a coasting subject."""

    def __init__(self, a_x: float = 0.0, a_y: float = 0.0,
                 action_bounds=((-1.7, 0.67), (-1.0, 1.0))):
        ax = float(np.clip(a_x, action_bounds[0][0], action_bounds[0][1]))
        ay = float(np.clip(a_y, action_bounds[1][0], action_bounds[1][1]))
        self._u = TemplateControl(ax, ay)

    def initial_state(self, sv: VehicleState) -> PolicyState:
        return PolicyState(current_lane=0)

    def step(self, snapshot: Snapshot, state: PolicyState, delta: float):
        return self._u, replace(state, last_control=self._u)


class ExternalCommandPolicy:
    """Zero-order hold over externally supplied anchor commands, with a
    watchdog: commands older than watchdog seconds decay to coasting, the
    steering unwinding at the rate limit. set_command may be called from
    another thread; last writer wins."""

    def __init__(self, watchdog: float = 0.5, steer_rate_max: float = 0.8,
                 a_bounds=(-1.7, 0.67), steer_max: float = 0.6):
        self.watchdog = watchdog
        self.steer_rate_max = steer_rate_max
        self.a_bounds = a_bounds
        self.steer_max = steer_max
        self._lock = threading.Lock()
        self._cmd = AnchorControl(0.0, 0.0)
        self._cmd_time: Optional[float] = None
        self._now = 0.0

    def on_tick(self, t: float):
        with self._lock:
            self._now = t

    def set_command(self, a: float, steer: float):
        a = float(np.clip(a, self.a_bounds[0], self.a_bounds[1]))
        steer = float(np.clip(steer, -self.steer_max, self.steer_max))
        with self._lock:
            self._cmd = AnchorControl(a, steer)
            self._cmd_time = self._now

    def take_control(self, t: Optional[float] = None) -> AnchorControl:
        with self._lock:
            now = self._now if t is None else t
            if self._cmd_time is None:
                return AnchorControl(0.0, 0.0)
            age = now - self._cmd_time
            if age <= self.watchdog:
                return self._cmd
            # stale: coast, unwind steering toward zero at the rate limit
            overshoot = age - self.watchdog
            mag = max(abs(self._cmd.steer) - self.steer_rate_max * overshoot, 0.0)
            return AnchorControl(0.0, math.copysign(mag, self._cmd.steer) if mag else 0.0)
