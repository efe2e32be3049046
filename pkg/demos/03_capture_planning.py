"""Worst-case capture planning: how the minimal capture time appears and
shrinks as the pursuer closes in, and what the certified plan looks like."""

import numpy as np

from adversim import VehicleState, build_matrices, find_min_capture_time
from adversim.core import Polytope
from adversim.template import AdmissibleSpace, default_action_polytope

action = default_action_polytope((-1.7, 0.67), (-1.0, 1.0))
lane_rows = Polytope(
    np.array([[0, 1, 0, 0], [0, -1, 0, 0], [0, 0, 1, 0],
              [0, 0, -1, 0], [0, 0, 0, 1], [0, 0, 0, -1.0]]),
    np.array([10.1, -1.0, 45.0, -5.0, 0.3, 0.3]))
space = AdmissibleSpace(action, lane_rows)

print("evader 5 m/s faster closing from behind, capture diameter 7 m")
print(f"{'gap m':>7} {'T* s':>6} {'certified value m^2':>20}")
for gap in (40.0, 25.0, 15.0, 10.0, 8.0, 6.0, 4.0):
    sv = VehicleState(gap, 5.55, 13.0, 0.0)     # subject ahead, slower
    pov = VehicleState(0.0, 5.55, 18.0, 0.0)    # pursuer closing at 5 m/s
    cap = find_min_capture_time(sv, pov, c=7.0, t_bar=2.0,
                                sv_space=space, pov_space=space,
                                sv_mats=build_matrices(13.0, 0.1),
                                pov_mats=build_matrices(18.0, 0.1))
    if cap is None:
        print(f"{gap:7.1f} {'none':>6}")
    else:
        print(f"{gap:7.1f} {cap.t_star:6.1f} {cap.minimax.value:20.2f}")

print("\nthe capture scan prunes unreachable horizons and logs the rest:")
scan = []
sv = VehicleState(9.0, 5.55, 13.0, 0.0)
pov = VehicleState(0.0, 5.55, 18.0, 0.0)
cap = find_min_capture_time(sv, pov, 7.0, 2.0, space, space,
                            build_matrices(13.0, 0.1), build_matrices(18.0, 0.1),
                            scan_log=scan)
for entry in scan:
    if entry.pruned:
        print(f"  horizon {entry.horizon_steps:2d}: pruned, distance bound "
              f"{entry.bound:.2f} m > 7")
    else:
        print(f"  horizon {entry.horizon_steps:2d}: minimax value {entry.value:8.2f} "
              f"{'<= 49, capture' if entry.value <= 49 else '> 49'}")
print(f"minimal capture time: {cap.t_star} s, plan length {len(cap.reference)} states")
