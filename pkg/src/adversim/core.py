"""Core domain types: vehicle states, snapshots, linear constraint sets,
collision geometry, and deterministic run logging."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(phi: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    phi = math.fmod(phi, TWO_PI)
    if phi <= -math.pi:
        phi += TWO_PI
    elif phi > math.pi:
        phi -= TWO_PI
    return phi


def rotation(theta: float) -> np.ndarray:
    """2x2 rotation matrix mapping local coordinates to world coordinates."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class VehicleState:
    """Planar vehicle state [x, y, v, phi]: position (m), speed (m/s),
    heading (rad, 0 along +x). Speed is nonnegative; heading is wrapped
    to (-pi, pi] on construction."""

    x: float
    y: float
    v: float
    phi: float

    def __post_init__(self):
        for name in ("x", "y", "v", "phi"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite, got {val}")
        if self.v < 0.0:
            raise ValueError(f"speed must be >= 0, got {self.v}")
        object.__setattr__(self, "phi", wrap_angle(self.phi))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.v, self.phi])

    @staticmethod
    def from_array(arr) -> "VehicleState":
        x, y, v, phi = (float(a) for a in arr)
        return VehicleState(x, y, v, phi)


def state_to_frame(s: VehicleState, frame_heading: float) -> VehicleState:
    """Express a world state in a frame rotated by frame_heading.

    Positions rotate, speed is unchanged, heading becomes relative to the
    frame axis. Round-trips exactly with state_from_frame."""
    if frame_heading == 0.0:
        return s
    p = rotation(-frame_heading) @ s.position
    return VehicleState(float(p[0]), float(p[1]), s.v, wrap_angle(s.phi - frame_heading))


def state_from_frame(s: VehicleState, frame_heading: float) -> VehicleState:
    if frame_heading == 0.0:
        return s
    p = rotation(frame_heading) @ s.position
    return VehicleState(float(p[0]), float(p[1]), s.v, wrap_angle(s.phi + frame_heading))


@dataclass(frozen=True)
class VehicleDims:
    """Bounding rectangle of a vehicle, meters."""

    length: float
    width: float

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ValueError("vehicle dimensions must be positive")

    @property
    def half_diag(self) -> float:
        return 0.5 * math.hypot(self.length, self.width)


@dataclass(frozen=True)
class Snapshot:
    """Combined states of the subject vehicle and k >= 1 adversarial
    vehicles at one instant."""

    sv: VehicleState
    povs: tuple
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "povs", tuple(self.povs))
        if len(self.povs) < 1:
            raise ValueError("a snapshot needs at least one POV")

    @property
    def k(self) -> int:
        return len(self.povs)


@dataclass(frozen=True)
class Polytope:
    """Linear constraint set {z : G z <= h}."""

    g: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.g, dtype=float))
        h = np.asarray(self.h, dtype=float).ravel()
        if g.shape[0] != h.shape[0]:
            raise ValueError(f"row mismatch: G has {g.shape[0]} rows, h has {h.shape[0]}")
        g.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h", h)

    @property
    def dim(self) -> int:
        return self.g.shape[1]

    @property
    def nrows(self) -> int:
        return self.g.shape[0]

    def contains(self, z, slack: float = 1e-9) -> bool:
        z = np.asarray(z, dtype=float).ravel()
        return bool(np.all(self.g @ z <= self.h + slack))

    def violations(self, z) -> np.ndarray:
        """Signed row residuals G z - h (positive means violated)."""
        z = np.asarray(z, dtype=float).ravel()
        return self.g @ z - self.h

    def intersect(self, other: "Polytope") -> "Polytope":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return Polytope(np.vstack([self.g, other.g]), np.concatenate([self.h, other.h]))

    def with_rows(self, g_extra, h_extra) -> "Polytope":
        return self.intersect(Polytope(np.atleast_2d(g_extra), np.atleast_1d(h_extra)))

    def relaxed(self, amounts) -> "Polytope":
        """Slacken each row's bound by a nonnegative amount."""
        amounts = np.asarray(amounts, dtype=float).ravel()
        return Polytope(self.g, self.h + np.maximum(amounts, 0.0))

    def affine_preimage(self, m, offset) -> "Polytope":
        """Rows valid for z where the original rows apply to M z + offset."""
        m = np.asarray(m, dtype=float)
        offset = np.asarray(offset, dtype=float).ravel()
        return Polytope(self.g @ m, self.h - self.g @ offset)


def frame_polytope(world: Polytope, frame_heading: float) -> Polytope:
    """Map a state polytope over [x, y, v, phi] world coordinates into a
    rotated planning frame."""
    if frame_heading == 0.0:
        return world
    m = np.eye(4)
    m[:2, :2] = rotation(frame_heading)
    offset = np.array([0.0, 0.0, 0.0, frame_heading])
    return world.affine_preimage(m, offset)


class TerminationKind(Enum):
    COLLISION = "collision"
    TIMEOUT = "timeout"
    CAPTURE_ONLY = "capture_only"
    EXTERNAL_STOP = "external_stop"


@dataclass(frozen=True)
class TerminationReason:
    kind: TerminationKind
    t: float
    pov: Optional[int] = None
    detail: str = ""

    def to_json_dict(self) -> dict:
        d = {"reason": self.kind.value, "t": self.t}
        if self.pov is not None:
            d["pov"] = self.pov
        if self.detail:
            d["detail"] = self.detail
        return d


@dataclass(frozen=True)
class TickRecord:
    """One logged simulation tick: states at time t plus the controls and
    planner modes applied over [t, t + delta)."""

    t: float
    states: tuple
    controls: tuple            # per vehicle (a, steer)
    modes: tuple               # per POV: "worst_case" | "predictive" | "lane_keep"
    t_star: tuple              # per POV: float seconds or None
    captured: tuple = ()       # per POV l2-capture flag


@dataclass
class RunLog:
    """Chronological record of one scenario run. Identical configuration
    and seed must reproduce this byte for byte once serialized."""

    vehicle_ids: tuple
    roles: tuple
    delta: float
    config_digest: str
    entries: list = field(default_factory=list)
    termination: Optional[TerminationReason] = None
    captures: list = field(default_factory=list)   # in-memory planner artifacts, not serialized
    plan_times: list = field(default_factory=list)  # wall seconds per planning tick

    def append(self, rec: TickRecord):
        if self.entries and rec.t <= self.entries[-1].t:
            raise ValueError("tick times must be strictly increasing")
        self.entries.append(rec)


def runlog_to_jsonl(log: RunLog) -> str:
    """Serialize a run: one JSON object per tick, then a termination line."""
    lines = []
    for rec in log.entries:
        vehicles = []
        for i, s in enumerate(rec.states):
            vehicles.append({
                "id": log.vehicle_ids[i],
                "role": log.roles[i],
                "x": s.x, "y": s.y, "v": s.v, "phi": s.phi,
                "u": [rec.controls[i][0], rec.controls[i][1]],
            })
        obj = {
            "t": rec.t,
            "vehicles": vehicles,
            "mode": list(rec.modes),
            "t_star": list(rec.t_star),
        }
        lines.append(json.dumps(obj, separators=(",", ":")))
    if log.termination is not None:
        lines.append(json.dumps({"termination": log.termination.to_json_dict(),
                                 "config_digest": log.config_digest},
                                separators=(",", ":")))
    return "\n".join(lines) + "\n"


def runlog_to_csv(log: RunLog) -> str:
    """Per-vehicle time series, grouped by vehicle: id,role,t,x,y,v,phi,a,steer."""
    rows = ["id,role,t,x,y,v,phi,a,steer"]
    for i, vid in enumerate(log.vehicle_ids):
        for rec in log.entries:
            s = rec.states[i]
            a, steer = rec.controls[i]
            rows.append(f"{vid},{log.roles[i]},{rec.t!r},{s.x!r},{s.y!r},{s.v!r},{s.phi!r},{a!r},{steer!r}")
    return "\n".join(rows) + "\n"


def capture_check(snapshot: Snapshot, c: float) -> list:
    """Per-POV flags: center distance strictly below the capture diameter.

    Distance exactly c is safe."""
    if c <= 0:
        raise ValueError("capture diameter must be positive")
    p0 = snapshot.sv.position
    return [bool(np.linalg.norm(p0 - pov.position) < c) for pov in snapshot.povs]


def min_pov_distance(snapshot: Snapshot) -> tuple:
    """Smallest SV-to-POV center distance and its POV index (lowest wins ties)."""
    p0 = snapshot.sv.position
    best_d, best_j = math.inf, 0
    for j, pov in enumerate(snapshot.povs):
        d = float(np.linalg.norm(p0 - pov.position))
        if d < best_d:
            best_d, best_j = d, j
    return best_d, best_j


def _rect_corners(s: VehicleState, dims: VehicleDims) -> np.ndarray:
    r = rotation(s.phi)
    hl, hw = 0.5 * dims.length, 0.5 * dims.width
    local = np.array([[hl, hw], [hl, -hw], [-hl, -hw], [-hl, hw]])
    return local @ r.T + s.position


def rect_collision(a: VehicleState, da: VehicleDims, b: VehicleState, db: VehicleDims) -> bool:
    """Oriented-rectangle overlap via the separating-axis test.

    Touching edges count as collision."""
    diff = b.position - a.position
    axes = []
    for phi in (a.phi, b.phi):
        r = rotation(phi)
        axes.append(r[:, 0])
        axes.append(r[:, 1])
    ua, va = rotation(a.phi)[:, 0], rotation(a.phi)[:, 1]
    ub, vb = rotation(b.phi)[:, 0], rotation(b.phi)[:, 1]
    for axis in axes:
        ra = 0.5 * da.length * abs(axis @ ua) + 0.5 * da.width * abs(axis @ va)
        rb = 0.5 * db.length * abs(axis @ ub) + 0.5 * db.width * abs(axis @ vb)
        if abs(axis @ diff) > ra + rb + 1e-12:
            return False
    return True


def _seg_seg_distance(p1, p2, q1, q2) -> float:
    """Distance between two 2D segments."""
    def point_seg(p, a, b):
        ab = b - a
        denom = float(ab @ ab)
        if denom < 1e-18:
            return float(np.linalg.norm(p - a))
        t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
        return float(np.linalg.norm(p - (a + t * ab)))

    d1, d2 = p2 - p1, q2 - q1
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(cross) > 1e-12:
        r = q1 - p1
        t = (r[0] * d2[1] - r[1] * d2[0]) / cross
        u = (r[0] * d1[1] - r[1] * d1[0]) / cross
        if 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0:
            return 0.0
    return min(point_seg(q1, p1, p2), point_seg(q2, p1, p2),
               point_seg(p1, q1, q2), point_seg(p2, q1, q2))


def rect_min_distance(a: VehicleState, da: VehicleDims, b: VehicleState, db: VehicleDims) -> float:
    """Minimum boundary distance between two oriented rectangles, 0 when
    they overlap or touch."""
    if rect_collision(a, da, b, db):
        return 0.0
    ca, cb = _rect_corners(a, da), _rect_corners(b, db)
    best = math.inf
    for i in range(4):
        for j in range(4):
            d = _seg_seg_distance(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4])
            if d < best:
                best = d
    return best
