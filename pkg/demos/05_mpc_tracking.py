"""Bicycle-model MPC tracking a weaving template reference. Saves a plot
when matplotlib is importable, prints the error statistics either way."""

import math

import numpy as np

from adversim import AnchorState, BicycleParams, TrackingWeights, VehicleState
from adversim.anchor import AnchorMpc, anchor_step
from adversim.core import Polytope
from adversim.template import AdmissibleSpace, default_action_polytope

params = BicycleParams()
spaces = AdmissibleSpace(
    default_action_polytope((-1.7, 0.67), (-1.0, 1.0)),
    Polytope(np.array([[0, 1, 0, 0], [0, -1, 0, 0], [0, 0, 1, 0],
                       [0, 0, -1, 0], [0, 0, 0, 1], [0, 0, 0, -1.0]]),
             np.array([1e6, 1e6, 45.0, -5.0, 0.3, 0.3])))


def reference(t0, n, delta=0.1, amp=1.85, period=8.0, vx=18.0):
    w = 2 * math.pi / period
    out = []
    for k in range(n + 1):
        t = t0 + k * delta
        y = amp * math.sin(w * t)
        yd = amp * w * math.cos(w * t)
        out.append(VehicleState(vx * t, y, math.hypot(vx, yd), math.atan2(yd, vx)))
    return out


mpc = AnchorMpc(params, spaces, TrackingWeights.lateral_emphasis(), 0.1)
r0 = reference(0.0, 1)[0]
state = AnchorState(r0.x, r0.y, r0.phi, r0.v)

ts, ys, refs, steers, accs = [], [], [], [], []
for k in range(200):
    ref = reference(k * 0.1, 20)
    ctrl = mpc.track(state, ref)
    state = anchor_step(state, ctrl, params, 0.1)
    ts.append((k + 1) * 0.1)
    ys.append(state.y)
    refs.append(ref[1].y)
    steers.append(ctrl.steer)
    accs.append(ctrl.a)

errs = np.array(ys) - np.array(refs)
print(f"20 s weave at 18 m/s, half-lane amplitude")
print(f"lateral rms error : {np.sqrt(np.mean(errs ** 2)):.3f} m")
print(f"peak lateral error: {np.max(np.abs(errs)):.3f} m")
print(f"steer range       : [{min(steers):+.4f}, {max(steers):+.4f}] rad")
print(f"accel range       : [{min(accs):+.3f}, {max(accs):+.3f}] m/s^2")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    ax1.plot(ts, refs, label="reference", lw=2)
    ax1.plot(ts, ys, label="tracked", ls="--")
    ax1.set_ylabel("lateral position m")
    ax1.legend()
    ax2.plot(ts, steers)
    ax2.set_ylabel("steering rad")
    ax2.set_xlabel("time s")
    fig.tight_layout()
    fig.savefig("demo_mpc_tracking.png", dpi=120)
    print("wrote demo_mpc_tracking.png")
except ImportError:
    print("matplotlib not available, skipping the plot")
