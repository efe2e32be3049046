"""Scenario file handling: strict schema validation, override plumbing,
canonical serialization, and the configuration digest that stamps run logs."""

from __future__ import annotations

import hashlib
import json
import math
from importlib import resources
from pathlib import Path
from typing import Optional

from .core import VehicleDims, VehicleState
from .engine import ConfigError, EngineConfig, VehicleSpec

_SIM_KEYS = {"delta", "t_bar", "timeout", "capture_diameter", "seed", "capture_terminal"}
_ROAD_KEYS = {"lane_count", "lane_width"}
_CONSTRAINT_KEYS = {"a_x", "a_y", "v_range", "phi_max", "kamm_octagon"}
_VEHICLE_KEYS = {"id", "role", "init", "dims", "frame", "policy", "assignment"}
_TOP_KEYS = {"name", "description", "sim", "road", "constraints", "vehicles"}
_POLICY_KEYS = {"type", "idm", "lane_change", "v_floor", "merge_target", "u",
                "lane_changes", "overlap_margin", "decision_mode"}
_ASSIGNMENT_KEYS = {"lanes", "no_rear_end", "ahead_of", "planning", "stay_ahead_gap"}
_IDM_KEYS = {"v0", "t_headway", "a_max", "b_comf", "s0", "delta_exp"}
_LC_KEYS = {"lead_gap_min", "lag_gap_min", "cooldown", "pd_kp", "pd_kd",
            "yaw_rate_max", "abort_after"}


def _require_keys(obj: dict, allowed: set, where: str, required: set = frozenset()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"missing keys in {where}: {sorted(missing)}")


def _number(obj, where: str) -> float:
    if not isinstance(obj, (int, float)) or isinstance(obj, bool) or not math.isfinite(obj):
        raise ConfigError(f"{where} must be a finite number")
    return float(obj)


def _pair(obj, where: str) -> tuple:
    if not isinstance(obj, (list, tuple)) or len(obj) != 2:
        raise ConfigError(f"{where} must be a pair")
    return (_number(obj[0], where), _number(obj[1], where))


def config_digest(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def parse_scenario(doc: dict) -> EngineConfig:
    """Validate a scenario document and build the engine configuration.
    Unknown keys anywhere are rejected."""
    _require_keys(doc, _TOP_KEYS, "scenario", {"sim", "road", "vehicles"})
    sim = doc["sim"]
    _require_keys(sim, _SIM_KEYS, "sim", {"delta", "t_bar", "timeout", "capture_diameter"})
    road = doc["road"]
    _require_keys(road, _ROAD_KEYS, "road", _ROAD_KEYS)
    cons = doc.get("constraints", {})
    _require_keys(cons, _CONSTRAINT_KEYS, "constraints")

    vehicles = doc["vehicles"]
    if not isinstance(vehicles, list) or not vehicles:
        raise ConfigError("vehicles must be a non-empty array")
    specs = []
    seen_ids = set()
    for idx, v in enumerate(vehicles):
        where = f"vehicles[{idx}]"
        _require_keys(v, _VEHICLE_KEYS, where, {"id", "role", "init"})
        vid = v["id"]
        if not isinstance(vid, str) or not vid:
            raise ConfigError(f"{where}.id must be a non-empty string")
        if vid in seen_ids:
            raise ConfigError(f"duplicate vehicle id {vid!r}")
        seen_ids.add(vid)
        role = v["role"]
        if role not in ("sv", "pov"):
            raise ConfigError(f"{where}.role must be 'sv' or 'pov'")
        init = v["init"]
        if not isinstance(init, list) or len(init) != 4:
            raise ConfigError(f"{where}.init must be [x, y, v, phi]")
        dims = v.get("dims", {"length": 5.0, "width": 2.0})
        _require_keys(dims, {"length", "width"}, f"{where}.dims")
        frame = v.get("frame", "forward")
        if frame not in ("forward", "oncoming"):
            raise ConfigError(f"{where}.frame must be 'forward' or 'oncoming'")
        policy = v.get("policy")
        assignment = v.get("assignment")
        if role == "sv":
            if assignment is not None:
                raise ConfigError(f"{where}: assignment belongs to POVs")
            if policy is not None:
                _require_keys(policy, _POLICY_KEYS, f"{where}.policy")
                if "idm" in policy:
                    _require_keys(policy["idm"], _IDM_KEYS, f"{where}.policy.idm")
                if "lane_change" in policy:
                    _require_keys(policy["lane_change"], _LC_KEYS, f"{where}.policy.lane_change")
        else:
            if policy is not None:
                raise ConfigError(f"{where}: policy belongs to the SV")
            if assignment is not None:
                _require_keys(assignment, _ASSIGNMENT_KEYS, f"{where}.assignment")
                planning = assignment.get("planning", "adversarial")
                if planning not in ("adversarial", "lane_keep"):
                    raise ConfigError(f"{where}.assignment.planning invalid")
        specs.append(VehicleSpec(
            vid=vid, role=role,
            init=VehicleState(*(float(c) for c in init)),
            dims=VehicleDims(_number(dims.get("length", 5.0), f"{where}.dims.length"),
                             _number(dims.get("width", 2.0), f"{where}.dims.width")),
            frame_heading=math.pi if frame == "oncoming" else 0.0,
            policy=policy, assignment=assignment))

    return EngineConfig(
        delta=_number(sim["delta"], "sim.delta"),
        t_bar=_number(sim["t_bar"], "sim.t_bar"),
        capture_diameter=_number(sim["capture_diameter"], "sim.capture_diameter"),
        timeout=_number(sim["timeout"], "sim.timeout"),
        seed=int(sim.get("seed", 0)),
        capture_terminal=bool(sim.get("capture_terminal", False)),
        lane_count=int(road["lane_count"]),
        lane_width=_number(road["lane_width"], "road.lane_width"),
        a_x_bounds=_pair(cons.get("a_x", [-1.7, 0.67]), "constraints.a_x"),
        a_y_bounds=_pair(cons.get("a_y", [-1.0, 1.0]), "constraints.a_y"),
        v_range=_pair(cons.get("v_range", [5.0, 45.0]), "constraints.v_range"),
        phi_max=_number(cons.get("phi_max", 0.3), "constraints.phi_max"),
        kamm_octagon=bool(cons.get("kamm_octagon", False)),
        vehicles=tuple(specs),
        digest=config_digest(doc),
        name=doc.get("name", "scenario"),
    )


def scenario_to_dict(doc: dict) -> dict:
    """Canonical round-trip form: parse-validated documents serialize to an
    equal document."""
    parse_scenario(doc)
    return json.loads(json.dumps(doc, sort_keys=True))


def _coerce(value: str):
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def apply_overrides(doc: dict, overrides) -> dict:
    """Apply key=value overrides with dotted paths into a copy of the
    document, for example sim.capture_diameter=7 or
    vehicles.0.policy.idm.a_max=2.6."""
    out = json.loads(json.dumps(doc))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like path=value")
        path, value = item.split("=", 1)
        parts = path.split(".")
        node = out
        for part in parts[:-1]:
            if isinstance(node, list):
                node = node[int(part)]
            elif isinstance(node, dict):
                node = node.setdefault(part, {})
            else:
                raise ConfigError(f"cannot descend into {part!r} of {path!r}")
        leaf = parts[-1]
        if isinstance(node, list):
            node[int(leaf)] = _coerce(value)
        else:
            node[leaf] = _coerce(value)
    return out


def load_scenario_file(path) -> dict:
    """Read a scenario document from a path or a bundled scenario name."""
    p = Path(path)
    if not p.exists():
        bundled = bundled_scenario_path(str(path))
        if bundled is not None:
            p = bundled
        else:
            raise FileNotFoundError(f"no scenario file or bundled scenario {path!r}")
    with open(p, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {p}: {exc}") from exc


def bundled_scenario_path(name: str) -> Optional[Path]:
    stem = name[:-5] if name.endswith(".json") else name
    root = resources.files("adversim").joinpath("scenarios")
    candidate = root.joinpath(f"{stem}.json")
    try:
        if candidate.is_file():
            with resources.as_file(candidate) as concrete:
                return Path(concrete)
    except (FileNotFoundError, ModuleNotFoundError):
        return None
    return None


def bundled_scenario_names() -> list:
    root = resources.files("adversim").joinpath("scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))
