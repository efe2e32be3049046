"""Tour of the linearized planning model: single steps, rollouts, and the
admissible state-action sets."""

import numpy as np

from adversim import (TemplateControl, VehicleState, build_matrices,
                      default_action_polytope, lane_state_polytope, rollout,
                      step)

# Highway-speed linearization at the 10 Hz planning step
m = build_matrices(v_tilde=18.0, delta=0.1)
print("A =\n", m.a)
print("B =\n", m.b)

s0 = VehicleState(x=0.0, y=5.55, v=18.0, phi=0.0)
print("\ncoast one step:  ", step(s0, TemplateControl(0.0, 0.0), m))
print("full brake step: ", step(s0, TemplateControl(-1.7, 0.0), m))
print("swerve step:     ", step(s0, TemplateControl(0.0, 1.0), m))

# two seconds of gentle weaving
controls = [TemplateControl(0.0, 0.8 * np.sin(0.1 * np.pi * k)) for k in range(20)]
path = rollout(s0, controls, m)
print("\nweave endpoint:", path[-1])

# the admissible sets used throughout: acceleration box and lane band
action = default_action_polytope((-1.7, 0.67), (-1.0, 1.0))
state = lane_state_polytope(lane_count=3, lane_width=3.7, v_range=(5.0, 45.0))
print("\naction box admits coasting:", action.contains([0.0, 0.0]))
print("action box rejects hard throttle:", not action.contains([1.0, 0.0]))
print("lane band admits lane-1 center:", state.contains([0.0, 5.55, 18.0, 0.0]))
print("lane band rejects off-road:", not state.contains([0.0, 0.5, 18.0, 0.0]))

# every planned state in this file satisfies the band
inside = all(state.contains(s.as_array()) for s in path)
print("weave stays on the road:", inside)
