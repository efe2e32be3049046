"""Predictive pursuit: forecast the subject under its held control, then
track the forecast. The lateral weight of 100 is what makes the adversary
mirror lane changes, the blocking behavior."""

import numpy as np

from adversim import (TemplateControl, TrackingWeights, VehicleState,
                      build_matrices, plan_tracking, predict_sv)
from adversim.core import Polytope
from adversim.template import AdmissibleSpace, default_action_polytope

action = default_action_polytope((-1.7, 0.67), (-1.0, 1.0))
lane_rows = Polytope(
    np.array([[0, 1, 0, 0], [0, -1, 0, 0], [0, 0, 1, 0],
              [0, 0, -1, 0], [0, 0, 0, 1], [0, 0, 0, -1.0]]),
    np.array([10.1, -1.0, 45.0, -5.0, 0.3, 0.3]))
space = AdmissibleSpace(action, lane_rows)
mats = build_matrices(18.0, 0.1)

# the subject was just observed drifting left while braking lightly
sv = VehicleState(0.0, 5.55, 18.0, 0.02)
held = TemplateControl(-0.3, 0.6)
pred = predict_sv(sv, held, t_bar=2.0, mats=mats, space=space)
print("assumed control:", pred.assumed_control)
print("forecast endpoint:", pred.states[-1])

# adversary 25 m ahead in the same lane tracks that forecast
pov = VehicleState(25.0, 5.55, 18.0, 0.0)
ref, controls, sol = plan_tracking(pred, pov, TrackingWeights.lateral_emphasis(),
                                   space, mats)
print("\nadversary plan, every fourth step:")
print(f"{'t':>4} {'x':>8} {'y':>6} {'v':>6}   vs forecast y")
for k in range(0, 21, 4):
    print(f"{k*0.1:4.1f} {ref[k].x:8.2f} {ref[k].y:6.2f} {ref[k].v:6.2f}"
          f"   {pred.states[k].y:6.2f}")
print("\nthe plan brakes toward the subject and mirrors its drift;")
print(f"terminal lateral error: {abs(ref[-1].y - pred.states[-1].y):.3f} m")
print(f"controls stay inside the box: "
      f"{all(action.contains(u) for u in controls)}")
