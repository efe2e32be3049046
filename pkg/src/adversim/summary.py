"""Run summaries: the statistics emitted next to every log, computable
both from a live RunLog and, for verification, from the serialized JSONL."""

from __future__ import annotations

import json
import math
from typing import Optional

from .core import RunLog


def summarize_runlog(log: RunLog, capture_diameter: float) -> dict:
    """Termination, collision time, closest approach, per-adversary mode
    transition counts and capture-time series."""
    pov_ids = [vid for vid, role in zip(log.vehicle_ids, log.roles) if role == "pov"]
    sv_i = log.roles.index("sv")
    pov_is = [i for i, r in enumerate(log.roles) if r == "pov"]

    min_dist = math.inf
    transitions = {vid: 0 for vid in pov_ids}
    first_worst_case = {vid: None for vid in pov_ids}
    t_star_series = {vid: [] for vid in pov_ids}
    capture_events = 0
    last_mode = {vid: None for vid in pov_ids}

    for rec in log.entries:
        sv = rec.states[sv_i]
        for j, i in enumerate(pov_is):
            p = rec.states[i]
            d = math.hypot(sv.x - p.x, sv.y - p.y)
            if d < min_dist:
                min_dist = d
            vid = pov_ids[j]
            mode = rec.modes[j]
            if last_mode[vid] is not None and mode != last_mode[vid]:
                transitions[vid] += 1
            if mode == "worst_case" and first_worst_case[vid] is None:
                first_worst_case[vid] = rec.t
            last_mode[vid] = mode
            if rec.t_star[j] is not None:
                t_star_series[vid].append([rec.t, rec.t_star[j]])
        if rec.captured and any(rec.captured):
            capture_events += 1

    term = log.termination.to_json_dict() if log.termination else None
    collision_time = (log.termination.t
                      if log.termination and log.termination.kind.value == "collision"
                      else None)
    return {
        "termination": term,
        "collision_time": collision_time,
        "min_distance": None if math.isinf(min_dist) else min_dist,
        "mode_transitions": transitions,
        "first_worst_case": first_worst_case,
        "t_star_series": t_star_series,
        "capture_tick_count": capture_events,
        "capture_diameter": capture_diameter,
        "ticks": len(log.entries),
    }


def summarize_jsonl(text: str, capture_diameter: float) -> dict:
    """Recompute the same statistics from a serialized log, independently
    of the in-memory path."""
    min_dist = math.inf
    transitions: dict = {}
    first_worst_case: dict = {}
    t_star_series: dict = {}
    last_mode: dict = {}
    capture_events = 0
    termination = None
    ticks = 0

    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if "termination" in obj:
            termination = obj["termination"]
            continue
        ticks += 1
        sv = next(v for v in obj["vehicles"] if v["role"] == "sv")
        povs = [v for v in obj["vehicles"] if v["role"] == "pov"]
        any_capture = False
        for j, p in enumerate(povs):
            vid = p["id"]
            d = math.hypot(sv["x"] - p["x"], sv["y"] - p["y"])
            if d < min_dist:
                min_dist = d
            if d < capture_diameter:
                any_capture = True
            mode = obj["mode"][j]
            transitions.setdefault(vid, 0)
            first_worst_case.setdefault(vid, None)
            t_star_series.setdefault(vid, [])
            if vid in last_mode and last_mode[vid] != mode:
                transitions[vid] += 1
            if mode == "worst_case" and first_worst_case[vid] is None:
                first_worst_case[vid] = obj["t"]
            last_mode[vid] = mode
            if obj["t_star"][j] is not None:
                t_star_series[vid].append([obj["t"], obj["t_star"][j]])
        if any_capture:
            capture_events += 1

    collision_time = (termination.get("t")
                      if termination and termination.get("reason") == "collision"
                      else None)
    return {
        "termination": termination,
        "collision_time": collision_time,
        "min_distance": None if math.isinf(min_dist) else min_dist,
        "mode_transitions": transitions,
        "first_worst_case": first_worst_case,
        "t_star_series": t_star_series,
        "capture_tick_count": capture_events,
        "capture_diameter": capture_diameter,
        "ticks": ticks,
    }
