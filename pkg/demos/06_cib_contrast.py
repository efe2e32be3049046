"""The capture-diameter trade-off on the lead-brake scenario: c = 7 ends in
a collision, c = 12 engages earlier but only corners the subject."""

import numpy as np

from adversim.config import load_scenario_file, parse_scenario
from adversim.engine import ScenarioEngine
from adversim.summary import summarize_runlog

histories = {}
for name in ("cib_c7", "cib_c12"):
    cfg = parse_scenario(load_scenario_file(name))
    log = ScenarioEngine(cfg).run()
    s = summarize_runlog(log, cfg.capture_diameter)
    series = [(rec.t,
               float(np.hypot(rec.states[0].x - rec.states[1].x,
                              rec.states[0].y - rec.states[1].y)),
               rec.modes[0]) for rec in log.entries]
    histories[name] = series
    first_wc = s["first_worst_case"]["pov1"]
    print(f"== {name} (c = {cfg.capture_diameter:.0f} m)")
    print(f"   outcome            : {s['termination']['reason']}"
          + (f" at t = {s['collision_time']} s" if s["collision_time"] else ""))
    print(f"   pursuit engaged at : {first_wc} s")
    print(f"   closest approach   : {s['min_distance']:.2f} m")
    print(f"   mode transitions   : {s['mode_transitions']['pov1']}")

print("\ninterpretation: the larger capture ball certifies capture earlier,")
print("so the adversary slows down sooner and the subject settles at a")
print("survivable gap; the tight ball waits, then closes from an ambush.")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(9, 4.5))
    for name, series in histories.items():
        ts = [p[0] for p in series]
        ds = [p[1] for p in series]
        ax.plot(ts, ds, label=name)
        engaged = [t for t, _, mode in series if mode == "worst_case"]
        if engaged:
            ax.axvline(engaged[0], ls=":", lw=1)
    ax.axhline(7.0, color="gray", ls="--", lw=1, label="c = 7")
    ax.axhline(12.0, color="gray", ls="-.", lw=1, label="c = 12")
    ax.set_xlabel("time s")
    ax.set_ylabel("center distance m")
    ax.legend()
    fig.tight_layout()
    fig.savefig("demo_cib_contrast.png", dpi=120)
    print("wrote demo_cib_contrast.png")
except ImportError:
    print("matplotlib not available, skipping the plot")
