"""Drive the subject yourself over the websocket bridge.

Terminal 1:
    adversim serve cib_c7 --port 8700 --out /tmp/adversim

Browser: open http://127.0.0.1:8700/ (after building frontend/, see its
README) and steer with the arrow keys, R to reset.

This script instead runs a short scripted session in-process: it connects
a client, brakes hard for two seconds, and shows the adversary reacting.
"""

import json
import time

from fastapi.testclient import TestClient

from adversim.bridge import BridgeSession, make_app
from adversim.config import apply_overrides, load_scenario_file, parse_scenario

doc = apply_overrides(load_scenario_file("cib_c7"),
                      ["sim.timeout=6.0", 'vehicles.0.policy={"type": "external"}'])
session = BridgeSession(parse_scenario(doc), realtime=True)
app = make_app(session)

with TestClient(app) as client:
    with client.websocket_connect("/ws") as ws:
        announced = False
        while True:
            msg = json.loads(ws.receive_text())
            if "termination" in msg:
                print("terminated:", msg["termination"])
                break
            t = msg["t"]
            sv = next(v for v in msg["vehicles"] if v["role"] == "sv")
            pov = next(v for v in msg["vehicles"] if v["role"] == "pov")
            # a real client streams its command at 10 Hz; stale commands
            # decay to coasting through the watchdog
            a_cmd = -1.7 if 1.0 <= t <= 3.0 else 0.0
            ws.send_text(json.dumps({"type": "control", "a": a_cmd, "steer": 0.0}))
            if a_cmd and not announced:
                announced = True
                print("-> streaming full braking for two seconds")
            if round(t * 10) % 10 == 0:
                gap = pov["x"] - sv["x"]
                print(f"t={t:4.1f}  sv v={sv['v']:5.2f} u={sv['u']}  "
                      f"pov v={pov['v']:5.2f} mode={pov['mode']}  gap={gap:5.1f} m")
session.stop()
