"""Closed-loop scenario runner.

Per tick at the planning rate: read the subject control from its policy,
plan every adversarial vehicle independently (capture scan first, tracking
fallback), track each plan with the bicycle MPC, step all plants, check
termination, log. Adversaries never interact with each other; each one
plans inside a dedicated operable polytope, with longitudinal ordering
rows recomputed from the live snapshot where lateral bands overlap.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .anchor import (AnchorControl, AnchorMpc, AnchorState, BicycleParams,
                     DegenerateReferenceError, anchor_step,
                     template_control_to_anchor)
from .core import (Polytope, RunLog, Snapshot, TerminationKind,
                   TerminationReason, TickRecord, VehicleDims, VehicleState,
                   capture_check, frame_polytope, rect_collision, rotation,
                   state_from_frame, state_to_frame)
from .policies import (ConstantPolicy, ExternalCommandPolicy, IdmLanePolicy,
                       IdmParams, LaneChangeParams, RoadGeometry)
from .predictive import SvPrediction, TrackingWeights, plan_tracking, predict_sv
from .qp import QpFailureError
from .template import (AdmissibleSpace, TemplateControl, TemplateMatrices,
                       build_matrices, default_action_polytope, lane_center,
                       rollout)
from .worstcase import CaptureResult, WorstCasePlanner

BAND_MARGIN = 0.4          # extra inset of dedicated bands, keeps POVs apart
REAR_END_EXTRA_GAP = 2.0   # added to vehicle length for the keep-out zone
ORDER_EXTRA_GAP = 4.0      # follower ordering margin on top of vehicle length
ZONE_RECOVERY_SPEED = 1.0  # m/s a vehicle caught inside a keep-out zone must yield
MIN_LINEARIZE_SPEED = 0.5

MODE_WORST_CASE = "worst_case"
MODE_PREDICTIVE = "predictive"
MODE_LANE_KEEP = "lane_keep"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class VehicleSpec:
    vid: str
    role: str                       # "sv" | "pov"
    init: VehicleState
    dims: VehicleDims
    frame_heading: float = 0.0
    policy: Optional[dict] = None       # SV only
    assignment: Optional[dict] = None   # POV only


@dataclass(frozen=True)
class EngineConfig:
    delta: float
    t_bar: float
    capture_diameter: float
    timeout: float
    seed: int
    lane_count: int
    lane_width: float
    a_x_bounds: tuple
    a_y_bounds: tuple
    v_range: tuple
    vehicles: tuple
    phi_max: float = 0.3
    kamm_octagon: bool = False
    capture_terminal: bool = False
    digest: str = ""
    name: str = "scenario"

    def __post_init__(self):
        if self.delta <= 0:
            raise ConfigError("delta must be positive")
        steps = self.t_bar / self.delta
        if self.t_bar <= 0 or abs(steps - round(steps)) > 1e-9:
            raise ConfigError("t_bar must be a positive multiple of delta")
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")
        roles = [v.role for v in self.vehicles]
        if roles.count("sv") != 1 or roles.count("pov") < 1:
            raise ConfigError("need exactly one sv and at least one pov")
        states = [v.init for v in self.vehicles]
        dims = [v.dims for v in self.vehicles]
        for i in range(len(states)):
            for j in range(i + 1, len(states)):
                if rect_collision(states[i], dims[i], states[j], dims[j]):
                    raise ConfigError(f"initial snapshot has overlap between "
                                      f"{self.vehicles[i].vid} and {self.vehicles[j].vid}")

    @property
    def sv(self) -> VehicleSpec:
        return next(v for v in self.vehicles if v.role == "sv")

    @property
    def povs(self) -> tuple:
        return tuple(v for v in self.vehicles if v.role == "pov")


@dataclass
class PovAssignment:
    pov_id: str
    band: tuple                       # (y_lo, y_hi) world, margin applied
    no_rear_end: bool
    ahead_of: Optional[str]
    planning: str                     # "adversarial" | "lane_keep"
    operable_frame: Polytope          # static rows in the POV planning frame
    frame_heading: float
    stay_ahead_gap: Optional[float] = None   # lead-role: keep this far ahead of the SV


@dataclass(frozen=True)
class ModeRecord:
    t: float
    pov_id: str
    mode: str
    t_star: Optional[float] = None


@dataclass
class PlanResult:
    pov_id: str
    mode: str
    reference_world: list
    reference_frame: list
    t_star: Optional[float] = None
    fault: bool = False
    capture: Optional[CaptureResult] = None


def _band_for_lanes(lanes, lane_width: float, vehicle_width: float,
                    lane_count: int) -> tuple:
    lanes = sorted(set(int(l) for l in lanes))
    if not lanes or lanes[0] < 0 or lanes[-1] >= lane_count:
        raise ConfigError(f"lane set {lanes} outside the road")
    lo = lanes[0] * lane_width + vehicle_width / 2.0 + BAND_MARGIN
    hi = (lanes[-1] + 1) * lane_width - vehicle_width / 2.0 - BAND_MARGIN
    if lo >= hi:
        raise ConfigError("dedicated band is empty after margins")
    return lo, hi


def _operable_frame_polytope(y_band, v_range, phi_max, frame_heading) -> Polytope:
    g_yv = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, -1.0, 0.0],
    ])
    h_yv = np.array([y_band[1], -y_band[0], v_range[1], -v_range[0]])
    mapped = frame_polytope(Polytope(g_yv, h_yv), frame_heading)
    phi_rows = Polytope(np.array([[0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.0, -1.0]]),
                        np.array([phi_max, phi_max]))
    return mapped.intersect(phi_rows)


def assign_pov_constraints(config: EngineConfig) -> list:
    """Build each adversary's dedicated operable polytope and verify the
    non-interaction precondition: lateral bands pairwise disjoint, or an
    explicit longitudinal ordering between the overlapping pair."""
    out = []
    for spec in config.povs:
        a = spec.assignment or {}
        lanes = a.get("lanes", list(range(config.lane_count)))
        band = _band_for_lanes(lanes, config.lane_width, spec.dims.width, config.lane_count)
        operable = _operable_frame_polytope(band, config.v_range, config.phi_max,
                                            spec.frame_heading)
        out.append(PovAssignment(
            pov_id=spec.vid,
            band=band,
            no_rear_end=bool(a.get("no_rear_end", False)),
            ahead_of=a.get("ahead_of"),
            planning=a.get("planning", "adversarial"),
            operable_frame=operable,
            frame_heading=spec.frame_heading,
            stay_ahead_gap=a.get("stay_ahead_gap"),
        ))
    ids = {p.pov_id for p in out}
    for p in out:
        if p.ahead_of is not None and p.ahead_of not in ids:
            raise ConfigError(f"{p.pov_id} ordered against unknown vehicle {p.ahead_of}")
    for i in range(len(out)):
        for j in range(i + 1, len(out)):
            bi, bj = out[i].band, out[j].band
            disjoint = bi[1] < bj[0] or bj[1] < bi[0]
            ordered = out[i].ahead_of == out[j].pov_id or out[j].ahead_of == out[i].pov_id
            if not disjoint and not ordered:
                raise ConfigError(
                    f"operable bands of {out[i].pov_id} and {out[j].pov_id} overlap "
                    "without a longitudinal ordering")
    return out


def _build_policy(config: EngineConfig, road: RoadGeometry):
    spec = config.sv
    pconf = dict(spec.policy or {"type": "idm_lane"})
    ptype = pconf.pop("type", "idm_lane")
    bounds = (config.a_x_bounds, config.a_y_bounds)
    if ptype == "constant":
        u = pconf.get("u", [0.0, 0.0])
        return ConstantPolicy(u[0], u[1], bounds)
    if ptype == "external":
        return ExternalCommandPolicy(a_bounds=config.a_x_bounds)
    if ptype == "idm_lane":
        idm = IdmParams(**pconf.get("idm", {}))
        lc = LaneChangeParams(**pconf.get("lane_change", {}))
        v_floor = pconf.get("v_floor", config.v_range[0])
        merge_target = pconf.get("merge_target")
        from .policies import LANE_OVERLAP_MARGIN
        return IdmLanePolicy(idm, lc, road, bounds, spec.dims.length,
                             v_floor=v_floor, merge_target=merge_target,
                             lane_changes=pconf.get("lane_changes", True),
                             overlap_margin=pconf.get("overlap_margin", LANE_OVERLAP_MARGIN),
                             decision_mode=pconf.get("decision_mode", "utility"))
    raise ConfigError(f"unknown policy type {ptype!r}")


class ScenarioEngine:
    """Owns all mutable run state; single-threaded stepping loop."""

    def __init__(self, config: EngineConfig, bicycle: Optional[BicycleParams] = None,
                 weights: Optional[TrackingWeights] = None):
        self.config = config
        self.road = RoadGeometry(config.lane_count, config.lane_width)
        self.bicycle = bicycle or BicycleParams()
        self.weights = weights or TrackingWeights.lateral_emphasis()
        self.assignments = assign_pov_constraints(config)
        self.action_poly = default_action_polytope(
            config.a_x_bounds, config.a_y_bounds, config.kamm_octagon)
        self.policy = _build_policy(config, self.road)
        self.planner = WorstCasePlanner(config.capture_diameter, config.t_bar)
        self.horizon_steps = int(round(config.t_bar / config.delta))

        self._sv_spec = config.sv
        self._pov_specs = config.povs
        sv_band = (self._sv_spec.dims.width / 2.0,
                   config.lane_count * config.lane_width - self._sv_spec.dims.width / 2.0)
        self._sv_state_poly = _operable_frame_polytope(
            sv_band, config.v_range, config.phi_max, self._sv_spec.frame_heading)
        self._mpcs = {
            spec.vid: AnchorMpc(self.bicycle,
                                AdmissibleSpace(self.action_poly, asg.operable_frame),
                                self.weights, config.delta,
                                horizon_cap=self.horizon_steps)
            for spec, asg in zip(self._pov_specs, self.assignments)
        }
        self._tracking_warm: dict = {}
        self._last_mode: dict = {}
        self.mode_records: list = []
        self.faults: list = []

    # ----- planning -------------------------------------------------

    def _sv_control_estimate(self, sv_now: VehicleState,
                             sv_prev: Optional[VehicleState]) -> TemplateControl:
        """Estimate the subject's current control by differencing the last
        two observed states (its internals are not observable)."""
        if sv_prev is None:
            return TemplateControl(0.0, 0.0)
        d = self.config.delta
        th = self._sv_spec.frame_heading
        now = state_to_frame(sv_now, th)
        prev = state_to_frame(sv_prev, th)
        a_x = (now.v - prev.v) / d
        a_y = now.v * (now.phi - prev.phi) / d
        return TemplateControl(a_x, a_y)

    def _braking_margin(self, follower: VehicleState, leader: VehicleState) -> float:
        """Extra keep-out distance so the follower can always shed its
        speed surplus at full braking without touching the leader."""
        vf = follower.v * math.cos(follower.phi)
        vl = leader.v * math.cos(leader.phi)
        brake = abs(self.config.a_x_bounds[0])
        return max(0.0, (vf * vf - vl * vl) / (2.0 * brake))

    def _dynamic_rows(self, asg: PovAssignment, snapshot: Snapshot,
                      pov_state: VehicleState, pov_dims: VehicleDims):
        """Per-tick keep-out rows in world coordinates: never move in
        behind the subject while sharing its lane laterally, and respect
        an explicit follower ordering against another adversary. Bounds
        anchored to a moving vehicle advance with its ballistic motion
        (the rate), so forward motion stays feasible over the horizon;
        a braking-aware margin keeps the line reachable without ever
        building up speed the follower could not shed.
        Returns (Polytope in planning frame, per-row bound rates) or None."""
        rows_g, rows_h, rates = [], [], []
        sv = snapshot.sv
        if asg.no_rear_end and abs(pov_state.y - sv.y) < self.config.lane_width:
            gap = pov_dims.length + REAR_END_EXTRA_GAP
            back_edge = sv.x - gap
            # keep out of [sv.x - gap, sv.x]; from inside, exit via the nearest edge
            ahead = (pov_state.x >= sv.x
                     or (back_edge < pov_state.x
                         and (sv.x - pov_state.x) < (pov_state.x - back_edge)))
            if ahead:
                rows_g.append([-1.0, 0.0, 0.0, 0.0])  # stay ahead of the subject
                rows_h.append(-sv.x)
                rates.append(0.0)
            else:
                rows_g.append([1.0, 0.0, 0.0, 0.0])   # stay behind the zone
                rows_h.append(back_edge - self._braking_margin(pov_state, sv))
                rate = sv.v * math.cos(sv.phi)
                if pov_state.x > back_edge:
                    # caught inside (an overtake flip): the bound advances
                    # slower than the subject until the vehicle has yielded
                    # its way back out
                    rate -= ZONE_RECOVERY_SPEED
                rates.append(rate)
        if asg.stay_ahead_gap is not None:
            # lead role: hold position ahead of the subject's current x;
            # re-anchored every replan, so pressing toward the line is
            # allowed but camping alongside is not
            rows_g.append([-1.0, 0.0, 0.0, 0.0])
            rows_h.append(-(sv.x + asg.stay_ahead_gap))
            rates.append(0.0)
        if asg.ahead_of is not None:
            leader = self._state_of(snapshot, asg.ahead_of)
            if leader is not None:
                gap = pov_dims.length + ORDER_EXTRA_GAP
                rows_g.append([1.0, 0.0, 0.0, 0.0])
                rows_h.append(leader.x - gap)
                rate = leader.v * math.cos(leader.phi)
                if pov_state.x > leader.x - gap:
                    rate -= ZONE_RECOVERY_SPEED
                rates.append(rate)
        if not rows_g:
            return None
        world = Polytope(np.array(rows_g), np.array(rows_h))
        return frame_polytope(world, asg.frame_heading), np.array(rates)

    def _state_of(self, snapshot: Snapshot, vid: str) -> Optional[VehicleState]:
        for spec, st in zip(self._pov_specs, snapshot.povs):
            if spec.vid == vid:
                return st
        return None

    def _lane_keep_reference(self, pov_frame: VehicleState) -> list:
        """Constant-speed straight reference at the nearest lane center,
        used when both planners fail or planning is disabled."""
        # lane centers expressed in the planning frame share the world grid
        centers = [lane_center(i, self.config.lane_width) for i in range(self.config.lane_count)]
        y_candidates = centers + [-c for c in centers]
        y_ref = min(y_candidates, key=lambda c: abs(pov_frame.y - c))
        v_ref = max(pov_frame.v, 1.0)   # keep the curvature recovery well posed
        mats = build_matrices(v_ref, self.config.delta)
        start = VehicleState(pov_frame.x, y_ref, v_ref, 0.0)
        zeros = [TemplateControl(0.0, 0.0)] * self.horizon_steps
        return rollout(start, zeros, mats)

    def plan_tick(self, snapshot: Snapshot, sv_prev: Optional[VehicleState] = None,
                  record_captures: bool = False) -> list:
        """Independent per-adversary planning against the current snapshot."""
        cfg = self.config
        th_sv = self._sv_spec.frame_heading
        sv_frame_state = state_to_frame(snapshot.sv, th_sv)
        sv_rot = rotation(th_sv)[:2, :2] if th_sv else np.eye(2)
        sv_mats = build_matrices(max(sv_frame_state.v, MIN_LINEARIZE_SPEED), cfg.delta)
        sv_space = AdmissibleSpace(self.action_poly, self._sv_state_poly)
        prediction: Optional[SvPrediction] = None

        results = []
        for spec, asg, pov_world in zip(self._pov_specs, self.assignments, snapshot.povs):
            th = asg.frame_heading
            pov_frame = state_to_frame(pov_world, th)
            pov_rot = rotation(th)[:2, :2] if th else np.eye(2)
            pov_mats = build_matrices(max(pov_frame.v, MIN_LINEARIZE_SPEED), cfg.delta)
            operable = asg.operable_frame
            rates = None
            const_rows = None
            dyn = self._dynamic_rows(asg, snapshot, pov_world, spec.dims)
            if dyn is not None:
                dyn_poly, dyn_rates = dyn
                n_static = asg.operable_frame.nrows
                operable = operable.intersect(dyn_poly)
                rates = np.concatenate([np.zeros(n_static), dyn_rates])
                const_rows = np.concatenate(
                    [np.zeros(n_static, dtype=bool),
                     np.ones(len(dyn_rates), dtype=bool)])
            pov_space = AdmissibleSpace(self.action_poly, operable)

            result = None
            if asg.planning == "adversarial":
                try:
                    cap = self.planner.plan(spec.vid, sv_frame_state, pov_frame,
                                            sv_space, pov_space, sv_mats, pov_mats,
                                            sv_rot=sv_rot, pov_rot=pov_rot,
                                            pov_state_rates=rates,
                                            pov_const_rows=const_rows)
                except QpFailureError as exc:
                    cap = None
                    self.faults.append((snapshot.t, spec.vid, f"worst_case: {exc}"))
                if cap is not None:
                    ref_frame = cap.press_reference or cap.reference
                    result = PlanResult(spec.vid, MODE_WORST_CASE,
                                        [state_from_frame(s, th) for s in ref_frame],
                                        ref_frame, t_star=cap.t_star,
                                        capture=cap if record_captures else None)
                else:
                    if prediction is None:
                        est = self._sv_control_estimate(snapshot.sv, sv_prev)
                        prediction = predict_sv(sv_frame_state, est, cfg.t_bar,
                                                sv_mats, sv_space)
                    try:
                        ref_frame, controls, _ = plan_tracking(
                            prediction, pov_frame, self.weights, pov_space, pov_mats,
                            sv_rot=sv_rot, pov_rot=pov_rot,
                            warm=self._tracking_warm.get(spec.vid),
                            state_rates=rates, state_const_rows=const_rows)
                        self._tracking_warm[spec.vid] = np.vstack(
                            [controls[1:], controls[-1:]]).reshape(-1)
                        result = PlanResult(spec.vid, MODE_PREDICTIVE,
                                            [state_from_frame(s, th) for s in ref_frame],
                                            ref_frame)
                    except QpFailureError as exc:
                        self.faults.append((snapshot.t, spec.vid, f"predictive: {exc}"))
                        result = None
            if result is None:
                ref_frame = self._lane_keep_reference(pov_frame)
                result = PlanResult(spec.vid, MODE_LANE_KEEP,
                                    [state_from_frame(s, th) for s in ref_frame],
                                    ref_frame, fault=(asg.planning == "adversarial"))
            if self._last_mode.get(spec.vid) != result.mode:
                self.mode_records.append(ModeRecord(snapshot.t, spec.vid,
                                                    result.mode, result.t_star))
                self._last_mode[spec.vid] = result.mode
            results.append(result)
        return results

    # ----- stepping loop --------------------------------------------

    def run(self, observer: Optional[Callable] = None,
            pace_hz: Optional[float] = None,
            stop_flag: Optional[Callable] = None,
            record_captures: bool = False,
            external_policy: Optional[ExternalCommandPolicy] = None) -> RunLog:
        cfg = self.config
        delta = cfg.delta
        specs = list(cfg.vehicles)
        ids = tuple(s.vid for s in specs)
        roles = tuple(s.role for s in specs)
        log = RunLog(ids, roles, delta, cfg.digest)
        pov_offset = {s.vid: i for i, s in enumerate(specs)}
        sv_idx = next(i for i, s in enumerate(specs) if s.role == "sv")

        plants = [AnchorState.from_vehicle_state(s.init) for s in specs]
        policy = external_policy if external_policy is not None else self.policy
        external = isinstance(policy, ExternalCommandPolicy)
        policy_state = None if external else policy.initial_state(specs[sv_idx].init)

        sv_prev: Optional[VehicleState] = None
        termination = None
        n_ticks = int(round(cfg.timeout / delta))
        next_deadline = time.monotonic()

        for k in range(n_ticks):
            t = round(k * delta, 9)
            states = [p.to_vehicle_state() for p in plants]
            sv_state = states[sv_idx]
            pov_states = tuple(states[i] for i, s in enumerate(specs) if s.role == "pov")
            snapshot = Snapshot(sv_state, pov_states, t)

            if stop_flag is not None and stop_flag():
                termination = TerminationReason(TerminationKind.EXTERNAL_STOP, t)
                break

            captured = tuple(capture_check(snapshot, cfg.capture_diameter))
            if cfg.capture_terminal and any(captured):
                j = captured.index(True)
                termination = TerminationReason(TerminationKind.CAPTURE_ONLY, t, pov=j)
                break

            # subject control
            if external:
                policy.on_tick(t)
                sv_ctrl = policy.take_control(t)
            else:
                u_tpl, policy_state = policy.step(snapshot, policy_state, delta)
                sv_ctrl = template_control_to_anchor(
                    u_tpl.a_x, u_tpl.a_y, sv_state.v, self.bicycle)

            # adversary planning and tracking
            t_plan0 = time.perf_counter()
            plans = self.plan_tick(snapshot, sv_prev, record_captures=record_captures)
            log.plan_times.append(time.perf_counter() - t_plan0)
            controls = [None] * len(specs)
            controls[sv_idx] = (sv_ctrl.a, sv_ctrl.steer)
            for plan, spec, asg in zip(plans, self._pov_specs, self.assignments):
                i = pov_offset[spec.vid]
                mpc = self._mpcs[spec.vid]
                frame_state = AnchorState.from_vehicle_state(
                    state_to_frame(states[i], asg.frame_heading))
                rows = asg.operable_frame
                rates = None
                const_rows = None
                dyn = self._dynamic_rows(asg, snapshot, states[i], spec.dims)
                if dyn is not None:
                    n_static = asg.operable_frame.nrows
                    rows = rows.intersect(dyn[0])
                    rates = np.concatenate([np.zeros(n_static), dyn[1]])
                    const_rows = np.concatenate(
                        [np.zeros(n_static, dtype=bool),
                         np.ones(len(dyn[1]), dtype=bool)])
                try:
                    ctrl = mpc.track(frame_state, plan.reference_frame,
                                     state_rows=rows, state_rates=rates,
                                     state_const_rows=const_rows)
                except (QpFailureError, DegenerateReferenceError) as exc:
                    self.faults.append((t, spec.vid, f"mpc: {exc}"))
                    ctrl = mpc.fallback_control(cfg.a_x_bounds[0])
                controls[i] = (ctrl.a, ctrl.steer)
                if plan.capture is not None:
                    log.captures.append({
                        "t": t, "pov_id": spec.vid, "capture": plan.capture,
                        "sv_state": state_to_frame(sv_state, self._sv_spec.frame_heading),
                        "sv_heading": self._sv_spec.frame_heading,
                        "pov_heading": asg.frame_heading,
                    })

            rec = TickRecord(
                t=t, states=tuple(states), controls=tuple(controls),
                modes=tuple(p.mode for p in plans),
                t_star=tuple(p.t_star for p in plans),
                captured=captured)
            log.append(rec)
            if observer is not None:
                observer(self._wire_snapshot(rec, plans))

            # step every plant
            for i, spec in enumerate(specs):
                a, steer = controls[i]
                plants[i] = anchor_step(plants[i], AnchorControl(a, steer),
                                        self.bicycle, delta)
            sv_prev = sv_state

            # post-step collision checks
            new_states = [p.to_vehicle_state() for p in plants]
            t_next = round((k + 1) * delta, 9)
            for i, s in enumerate(specs):
                if s.role != "pov":
                    continue
                if rect_collision(new_states[sv_idx], specs[sv_idx].dims, new_states[i], s.dims):
                    j = [q.vid for q in self._pov_specs].index(s.vid)
                    termination = TerminationReason(TerminationKind.COLLISION, t_next, pov=j)
                    break
            if termination is None:
                pov_idx = [i for i, s in enumerate(specs) if s.role == "pov"]
                for ii in range(len(pov_idx)):
                    for jj in range(ii + 1, len(pov_idx)):
                        a, b = pov_idx[ii], pov_idx[jj]
                        if rect_collision(new_states[a], specs[a].dims, new_states[b], specs[b].dims):
                            termination = TerminationReason(
                                TerminationKind.COLLISION, t_next, pov=ii,
                                detail=f"pov-pov overlap {specs[a].vid}/{specs[b].vid}")
                            break
                    if termination is not None:
                        break
            if termination is not None:
                break

            if pace_hz:
                next_deadline += 1.0 / pace_hz
                lag = next_deadline - time.monotonic()
                if lag > 0:
                    time.sleep(lag)

        if termination is None:
            termination = TerminationReason(TerminationKind.TIMEOUT, round(n_ticks * delta, 9))
        log.termination = termination
        if observer is not None:
            observer({"termination": termination.to_json_dict()})
        return log

    def _wire_snapshot(self, rec: TickRecord, plans) -> dict:
        cfg = self.config
        vehicles = []
        pov_j = 0
        for i, spec in enumerate(cfg.vehicles):
            s = rec.states[i]
            entry = {"id": spec.vid, "role": spec.role,
                     "x": s.x, "y": s.y, "v": s.v, "phi": s.phi,
                     "u": [rec.controls[i][0], rec.controls[i][1]]}
            if spec.role == "pov":
                plan = plans[pov_j]
                entry["mode"] = plan.mode
                entry["t_star"] = plan.t_star
                entry["waypoints"] = [[p.x, p.y] for p in plan.reference_world]
                pov_j += 1
            vehicles.append(entry)
        return {"t": rec.t, "vehicles": vehicles,
                "capture_diameter": cfg.capture_diameter}


def run_scenario(config: EngineConfig, record_captures: bool = False,
                 **kwargs) -> RunLog:
    """Build an engine for the configuration and execute one run."""
    return ScenarioEngine(config).run(record_captures=record_captures, **kwargs)
