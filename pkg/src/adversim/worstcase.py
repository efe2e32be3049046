"""Worst-case capture planning.

Scans look-ahead horizons for the smallest time at which the adversarial
vehicle can force the center distance below the capture diameter against
every admissible subject response, then plans by approximating the saddle
point of

    min over POV controls, max over SV controls of final squared distance

with alternating best responses: the POV half-step is a convex QP over the
linear rollout map, the SV half-step is conditional-gradient ascent of a
convex quadratic over the per-step action box (vertex seeking, feasible
with respect to the SV state rows). Each POV half-step never increases the
value and each SV half-step never decreases it; both facts are recorded in
the iteration history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import Polytope, VehicleState
from .qp import QpFailureError, QpProblem, QpStatus, solve
from .template import AdmissibleSpace, TemplateControl, TemplateMatrices, rollout

_SWEEP_TOL = 1e-4
_MAX_SWEEPS = 20
_RIDGE = 1e-7


@dataclass
class CondensedModel:
    """Stacked affine rollout map for one vehicle over n steps:
    state(t) = f_pow[t] @ s0 + phi[t] @ u_flat, u_flat of length 2n."""

    n: int
    mats: TemplateMatrices
    s0: np.ndarray
    f_pow: np.ndarray       # (n+1, 4, 4)
    phi: np.ndarray         # (n+1, 4, 2n)
    base: np.ndarray        # (n+1, 4) ballistic states

    @property
    def final_pos_map(self) -> np.ndarray:
        return self.phi[self.n][:2]

    @property
    def final_pos_base(self) -> np.ndarray:
        return self.base[self.n][:2]


def condense(s0: VehicleState, m: TemplateMatrices, n: int) -> CondensedModel:
    """Closed-form powers: A = I + N with N nilpotent of order 2, so
    A^t = I + t N and A^j B has x/y entries j*delta^2 and v/phi entries
    delta and delta/v_tilde."""
    d, vt = m.delta, m.v_tilde
    s0a = s0.as_array()
    f_pow = np.tile(np.eye(4), (n + 1, 1, 1))
    phi = np.zeros((n + 1, 4, 2 * n))
    for t in range(n + 1):
        f_pow[t, 0, 2] = t * d
        f_pow[t, 1, 3] = t * vt * d
        for i in range(t):
            j = t - 1 - i
            phi[t, 0, 2 * i] = j * d * d
            phi[t, 1, 2 * i + 1] = j * d * d
            phi[t, 2, 2 * i] = d
            phi[t, 3, 2 * i + 1] = d / vt
    base = f_pow @ s0a
    return CondensedModel(n, m, s0a, f_pow, phi, base)


def _action_rows(poly: Polytope, n: int) -> Polytope:
    """Per-step action rows stacked block-diagonally over u_flat."""
    m_rows, dim = poly.g.shape
    g = np.zeros((n * m_rows, n * dim))
    h = np.tile(poly.h, n)
    for i in range(n):
        g[i * m_rows:(i + 1) * m_rows, i * dim:(i + 1) * dim] = poly.g
    return Polytope(g, h)


def _state_rows(model: CondensedModel, poly: Polytope, relax: np.ndarray,
                rates: Optional[np.ndarray] = None) -> Polytope:
    """State rows applied to every future state t = 1..n. relax is the
    (n, rows) per-step slack from unavoidable_relaxation; rates lets a
    row's bound advance linearly in time (keep-out zones anchored to
    moving vehicles)."""
    n = model.n
    m_rows = poly.g.shape[0]
    g = np.zeros((n * m_rows, 2 * n))
    h = np.zeros(n * m_rows)
    relax = np.atleast_2d(relax)
    for t in range(1, n + 1):
        sl = slice((t - 1) * m_rows, t * m_rows)
        g[sl] = poly.g @ model.phi[t]
        h[sl] = poly.h + relax[min(t - 1, relax.shape[0] - 1)] - poly.g @ model.base[t]
        if rates is not None:
            h[sl] += rates * (t * model.mats.delta)
    return Polytope(g, h)


def initial_violation(poly: Polytope, s0: np.ndarray) -> np.ndarray:
    return np.maximum(poly.g @ s0 - poly.h, 0.0)


def unavoidable_relaxation(model: CondensedModel, poly: Polytope,
                           action: Polytope,
                           rates: Optional[np.ndarray] = None,
                           const_rows: Optional[np.ndarray] = None) -> np.ndarray:
    """Per-step, per-row slack no admissible control sequence can beat: the
    best-case residual of each row at each step (heading drift, for one,
    makes near-term lateral rows violated no matter the control). Shaped
    (n, rows). Slackening by exactly this keeps subproblems feasible while
    forcing recovery at the rate the dynamics allow, so tracking error
    cannot ratchet a vehicle out of its operable set.

    Rows masked in const_rows instead get one constant slack, the worst
    best-case residual over the horizon: keep-out rows re-anchored every
    replan must not pin the whole control sequence to one recovery profile,
    which would conflict with other rows' recovery directions."""
    lo, hi = _box_from_polytope(action)
    lo = np.where(np.isfinite(lo), lo, 0.0)
    hi = np.where(np.isfinite(hi), hi, 0.0)
    lo_vec = np.tile(lo, model.n)
    hi_vec = np.tile(hi, model.n)
    out = np.zeros((model.n, poly.nrows))
    for t in range(1, model.n + 1):
        coef = poly.g @ model.phi[t]
        best = np.sum(np.minimum(coef * lo_vec, coef * hi_vec), axis=1)
        bound = poly.h if rates is None else poly.h + rates * (t * model.mats.delta)
        out[t - 1] = np.maximum(poly.g @ model.base[t] - bound + best, 0.0)
    if const_rows is not None and np.any(const_rows):
        worst = out.max(axis=0)
        out[:, const_rows] = worst[const_rows]
    return out


@dataclass
class MinimaxResult:
    pov_controls: np.ndarray    # (n, 2)
    sv_controls: np.ndarray     # (n, 2)
    value: float                # final squared world distance, m^2
    iterations: int
    converged: bool
    value_history: list = field(default_factory=list)  # (phase, value) pairs
    relaxed: bool = False


@dataclass
class CaptureResult:
    t_star: float
    reference: list             # POV template states, planning frame, len n+1
    minimax: MinimaxResult
    press_reference: Optional[list] = None   # longer-horizon plan for tracking
                                             # when t_star is too short to steer by


@dataclass
class ScanEntry:
    horizon_steps: int
    value: Optional[float]      # minimax value when solved
    bound: Optional[float]      # distance lower bound when pruned
    pruned: bool
    converged: bool = False


def _box_from_polytope(poly: Polytope) -> tuple:
    """Extract per-axis bounds from box-like action rows. Rows that are not
    plus or minus a coordinate axis are ignored here and enforced by
    rejection in the ascent."""
    dim = poly.dim
    lo = np.full(dim, -np.inf)
    hi = np.full(dim, np.inf)
    for g_row, h_val in zip(poly.g, poly.h):
        nz = np.nonzero(g_row)[0]
        if len(nz) != 1:
            continue
        k = nz[0]
        if g_row[k] > 0:
            hi[k] = min(hi[k], h_val / g_row[k])
        else:
            lo[k] = max(lo[k], h_val / g_row[k])
    return lo, hi


def _ascent_feasible(u_flat, rows: Polytope, action: Polytope, n: int) -> bool:
    if rows.nrows and not rows.contains(u_flat, slack=1e-7):
        return False
    u = u_flat.reshape(n, 2)
    return bool(np.all(action.g @ u.T <= action.h[:, None] + 1e-9))


def _sv_ascent(u0_flat, e0, e1, w, u1_flat, sv_action: Polytope,
               sv_state_rows: Polytope, n: int, max_moves: int = 50):
    """Conditional-gradient ascent of ||w + E0 u0 - E1 u1||^2 over the SV
    action box. The maximum of a convex quadratic over a box sits at a
    vertex; each move goes to the gradient-maximizing vertex if it improves
    and stays admissible, otherwise to the feasibility-clipped point on the
    segment toward it."""
    lo, hi = _box_from_polytope(sv_action)
    lo_full = np.tile(lo, n)
    hi_full = np.tile(hi, n)
    target = w - e1 @ u1_flat

    def value(u):
        d = target + e0 @ u
        return float(d @ d)

    u = u0_flat.copy()
    best = value(u)
    for _ in range(max_moves):
        grad = 2.0 * e0.T @ (target + e0 @ u)
        vertex = np.where(grad > 0.0, hi_full, lo_full)
        vertex = np.where(np.isfinite(vertex), vertex, 0.0)
        if np.allclose(vertex, u, atol=1e-12):
            break
        candidate = vertex
        if not _ascent_feasible(candidate, sv_state_rows, sv_action, n):
            # back off along the segment until the state rows hold
            du = vertex - u
            alpha = 1.0
            if sv_state_rows.nrows:
                num = sv_state_rows.h - sv_state_rows.g @ u
                den = sv_state_rows.g @ du
                mask = den > 1e-12
                if np.any(mask):
                    alpha = min(1.0, float(np.min(num[mask] / den[mask])))
            alpha = max(alpha, 0.0)
            candidate = u + alpha * du
            if not _ascent_feasible(candidate, sv_state_rows, sv_action, n):
                break
        v_new = value(candidate)
        if v_new <= best + 1e-12:
            break
        u, best = candidate, v_new
    return u, best


def best_response_minimax(sv_state: VehicleState, pov_state: VehicleState,
                          horizon_steps: int,
                          sv_space: AdmissibleSpace, pov_space: AdmissibleSpace,
                          sv_mats: TemplateMatrices, pov_mats: TemplateMatrices,
                          sv_rot: Optional[np.ndarray] = None,
                          pov_rot: Optional[np.ndarray] = None,
                          u_pov: Optional[np.ndarray] = None,
                          u_sv: Optional[np.ndarray] = None,
                          tol: float = _SWEEP_TOL,
                          max_sweeps: int = _MAX_SWEEPS,
                          reject_above: Optional[float] = None,
                          pov_state_rates: Optional[np.ndarray] = None,
                          pov_const_rows: Optional[np.ndarray] = None) -> MinimaxResult:
    """Alternating best response for one POV against one SV over a fixed
    horizon. States are given in each vehicle's planning frame; sv_rot and
    pov_rot map frame positions to world (identity when omitted)."""
    n = int(horizon_steps)
    if n < 1:
        raise ValueError("horizon_steps must be >= 1")
    r0 = np.eye(2) if sv_rot is None else np.asarray(sv_rot, dtype=float)
    r1 = np.eye(2) if pov_rot is None else np.asarray(pov_rot, dtype=float)

    m0 = condense(sv_state, sv_mats, n)
    m1 = condense(pov_state, pov_mats, n)
    e0 = r0 @ m0.final_pos_map
    e1 = r1 @ m1.final_pos_map
    w = r0 @ m0.final_pos_base - r1 @ m1.final_pos_base

    relax0 = unavoidable_relaxation(m0, sv_space.state, sv_space.action)
    relax1 = unavoidable_relaxation(m1, pov_space.state, pov_space.action,
                                    pov_state_rates, pov_const_rows)
    relaxed = bool(relax0.max(initial=0.0) > 1e-9 or relax1.max(initial=0.0) > 1e-9)

    pov_rows = _action_rows(pov_space.action, n).intersect(
        _state_rows(m1, pov_space.state, relax1, pov_state_rates))
    sv_state_rows = _state_rows(m0, sv_space.state, relax0)

    u1 = np.zeros(2 * n) if u_pov is None else np.asarray(u_pov, dtype=float).ravel().copy()
    u0 = np.zeros(2 * n) if u_sv is None else np.asarray(u_sv, dtype=float).ravel().copy()

    def value(u0v, u1v):
        d = w + e0 @ u0v - e1 @ u1v
        return float(d @ d)

    u1_feasible = pov_rows.contains(u1, slack=1e-9)
    history = [("init", value(u0, u1))]
    warm_x, warm_set = (u1 if u1_feasible else None), ()
    current = history[0][1]
    converged = False
    sweeps = 0

    for sweeps in range(1, max_sweeps + 1):
        before = current

        # POV half-step: convex QP, fixed SV plan
        target = w + e0 @ u0
        hess = 2.0 * (e1.T @ e1) + 2.0 * _RIDGE * np.eye(2 * n)
        grad = -2.0 * e1.T @ target
        sol = solve(QpProblem(hess, grad, pov_rows), x0=warm_x, warm_set=warm_set)
        if sol.status is QpStatus.INFEASIBLE:
            raise QpFailureError("pursuit subproblem infeasible after relaxation", sol)
        v_qp = value(u0, sol.x)
        # the ridge can nudge the argmin; never trade away feasibility or value
        if not u1_feasible or v_qp <= current + 1e-12:
            u1 = sol.x
            u1_feasible = True
            warm_x, warm_set = sol.x, sol.active_set
            current = v_qp
        history.append(("pov", current))

        # a completed minimization against any fixed evader plan lower-bounds
        # the saddle value, so a high one rejects the horizon soundly
        if reject_above is not None and current > reject_above:
            break

        # SV half-step: vertex-seeking ascent, fixed POV plan
        u0, current = _sv_ascent(u0, e0, e1, w, u1, sv_space.action, sv_state_rows, n)
        history.append(("sv", current))

        if abs(current - before) < tol:
            converged = True
            break

    return MinimaxResult(u1.reshape(n, 2), u0.reshape(n, 2), current,
                         sweeps, converged, history, relaxed)


def _offset_box(space: AdmissibleSpace, mats: TemplateMatrices, n: int,
                v0: float) -> tuple:
    """Over-approximation of the reachable final-position offsets (frame
    coordinates, relative to ballistic) under the action box: the offset is
    delta^2 * sum((n-1-i) u_i), and the longitudinal component is further
    limited by the speed band (a vehicle at the floor cannot lose more
    ground than holding the floor the whole horizon)."""
    lo, hi = _box_from_polytope(space.action)
    scale = mats.delta ** 2 * (n * (n - 1) / 2.0)
    x_lo = scale * (lo[0] if np.isfinite(lo[0]) else 0.0)
    x_hi = scale * (hi[0] if np.isfinite(hi[0]) else 0.0)
    y_amp = scale * max(abs(lo[1]) if np.isfinite(lo[1]) else 0.0,
                        abs(hi[1]) if np.isfinite(hi[1]) else 0.0)
    v_lo, v_hi = _extract_state_speed_bounds(space.state)
    horizon = n * mats.delta
    if np.isfinite(v_lo):
        x_lo = max(x_lo, -max(v0 - v_lo, 0.0) * horizon)
    if np.isfinite(v_hi):
        x_hi = min(x_hi, max(v_hi - v0, 0.0) * horizon)
    return x_lo, x_hi, -y_amp, y_amp


def _extract_state_speed_bounds(poly: Polytope) -> tuple:
    lo, hi = -np.inf, np.inf
    for g_row, h_val in zip(poly.g, poly.h):
        nz = np.nonzero(g_row)[0]
        if len(nz) != 1 or nz[0] != 2:
            continue
        if g_row[2] > 0:
            hi = min(hi, h_val / g_row[2])
        else:
            lo = max(lo, h_val / g_row[2])
    return lo, hi


def capture_distance_bound(w_world: np.ndarray, pov_rot: np.ndarray,
                           pov_space: AdmissibleSpace, mats: TemplateMatrices,
                           n: int, v0: float) -> float:
    """Lower bound on the minimax distance at horizon n: the distance from
    the ballistic relative position to the adversary's reachable offset
    box, with the subject held ballistic (a valid relaxation: fixing the
    maximizer can only shrink the value, enlarging the reachable set can
    only shrink the distance)."""
    x_lo, x_hi, y_lo, y_hi = _offset_box(pov_space, mats, n, v0)
    w_frame = pov_rot.T @ w_world
    dx = max(x_lo - w_frame[0], w_frame[0] - x_hi, 0.0)
    dy = max(y_lo - w_frame[1], w_frame[1] - y_hi, 0.0)
    return float(np.hypot(dx, dy))


def find_min_capture_time(sv_state: VehicleState, pov_state: VehicleState,
                          c: float, t_bar: float,
                          sv_space: AdmissibleSpace, pov_space: AdmissibleSpace,
                          sv_mats: TemplateMatrices, pov_mats: TemplateMatrices,
                          sv_rot: Optional[np.ndarray] = None,
                          pov_rot: Optional[np.ndarray] = None,
                          warm: Optional[MinimaxResult] = None,
                          scan_log: Optional[list] = None,
                          pov_state_rates: Optional[np.ndarray] = None,
                          pov_const_rows: Optional[np.ndarray] = None) -> Optional[CaptureResult]:
    """Scan horizons delta, 2 delta, ..., t_bar in increasing order and
    return the first whose converged minimax value certifies capture
    (value <= c^2). Horizons where even a cooperating SV stays out of
    reach are pruned by a ballistic bound and recorded as such."""
    if c <= 0:
        raise ValueError("capture diameter must be positive")
    delta = pov_mats.delta
    n_max = int(round(t_bar / delta))
    if n_max < 1 or abs(n_max * delta - t_bar) > 1e-9:
        raise ValueError("t_bar must be a positive multiple of delta")
    r0 = np.eye(2) if sv_rot is None else np.asarray(sv_rot, dtype=float)
    r1 = np.eye(2) if pov_rot is None else np.asarray(pov_rot, dtype=float)

    u_pov_warm = None if warm is None else warm.pov_controls.reshape(-1).copy()
    u_sv_warm = None if warm is None else warm.sv_controls.reshape(-1).copy()

    m0_full = condense(sv_state, sv_mats, n_max)
    m1_full = condense(pov_state, pov_mats, n_max)

    reject_margin = (c + 0.05) ** 2
    for n in range(1, n_max + 1):
        w_n = r0 @ m0_full.base[n][:2] - r1 @ m1_full.base[n][:2]
        lb = capture_distance_bound(w_n, r1, pov_space, pov_mats, n, pov_state.v)
        if lb > c:
            if scan_log is not None:
                scan_log.append(ScanEntry(n, None, lb, True))
            continue
        u_pov0 = _resize_controls(u_pov_warm, n)
        u_sv0 = _resize_controls(u_sv_warm, n)
        res = best_response_minimax(sv_state, pov_state, n, sv_space, pov_space,
                                    sv_mats, pov_mats, sv_rot=sv_rot, pov_rot=pov_rot,
                                    u_pov=u_pov0, u_sv=u_sv0,
                                    reject_above=reject_margin,
                                    pov_state_rates=pov_state_rates,
                                    pov_const_rows=pov_const_rows)
        if scan_log is not None:
            scan_log.append(ScanEntry(n, res.value, None, False, res.converged))
        u_pov_warm = res.pov_controls.reshape(-1)
        u_sv_warm = res.sv_controls.reshape(-1)
        if res.converged and res.value <= c * c:
            controls = [TemplateControl(float(a), float(b)) for a, b in res.pov_controls]
            reference = rollout(pov_state, controls, pov_mats)
            return CaptureResult(n * delta, reference, res)
    return None


def _resize_controls(u_flat: Optional[np.ndarray], n: int) -> Optional[np.ndarray]:
    if u_flat is None:
        return None
    have = u_flat.shape[0] // 2
    if have >= n:
        return u_flat[:2 * n]
    out = np.zeros(2 * n)
    out[:2 * have] = u_flat
    return out


def plan_worst_case(sv_state, pov_state, c, t_bar, sv_space, pov_space,
                    sv_mats, pov_mats, **kwargs) -> Optional[list]:
    """Reference trajectory for the capture plan, or None when no horizon
    up to t_bar qualifies."""
    cap = find_min_capture_time(sv_state, pov_state, c, t_bar, sv_space,
                                pov_space, sv_mats, pov_mats, **kwargs)
    return None if cap is None else cap.reference


class WorstCasePlanner:
    """Per-POV warm-start cache around the capture-time scan. One instance
    per engine; calls for different POV ids are independent."""

    def __init__(self, c: float, t_bar: float, min_press_steps: int = 5):
        self.c = c
        self.t_bar = t_bar
        self.min_press_steps = min_press_steps
        self._warm: dict = {}

    def plan(self, pov_id, sv_state, pov_state, sv_space, pov_space,
             sv_mats, pov_mats, sv_rot=None, pov_rot=None,
             scan_log: Optional[list] = None,
             pov_state_rates: Optional[np.ndarray] = None,
             pov_const_rows: Optional[np.ndarray] = None) -> Optional[CaptureResult]:
        cap = find_min_capture_time(
            sv_state, pov_state, self.c, self.t_bar, sv_space, pov_space,
            sv_mats, pov_mats, sv_rot=sv_rot, pov_rot=pov_rot,
            warm=self._warm.get(pov_id), scan_log=scan_log,
            pov_state_rates=pov_state_rates, pov_const_rows=pov_const_rows)
        if cap is None:
            self._warm.pop(pov_id, None)
            return None
        self._warm[pov_id] = cap.minimax
        n_star = len(cap.reference) - 1
        n_press = min(self.min_press_steps, int(round(self.t_bar / pov_mats.delta)))
        if n_star < n_press:
            # a sub-half-second certificate carries no positional control
            # authority; replan over a usable horizon for the tracker while
            # keeping the certified minimal capture time
            press = best_response_minimax(
                sv_state, pov_state, n_press, sv_space, pov_space,
                sv_mats, pov_mats, sv_rot=sv_rot, pov_rot=pov_rot,
                u_pov=_resize_controls(cap.minimax.pov_controls.reshape(-1), n_press),
                u_sv=_resize_controls(cap.minimax.sv_controls.reshape(-1), n_press),
                pov_state_rates=pov_state_rates, pov_const_rows=pov_const_rows)
            controls = [TemplateControl(float(a), float(b)) for a, b in press.pov_controls]
            cap.press_reference = rollout(pov_state, controls, pov_mats)
            self._warm[pov_id] = press
        return cap
