import json
import statistics
import time

import pytest
from fastapi.testclient import TestClient

from adversim.bridge import BridgeSession, make_app
from adversim.config import apply_overrides, load_scenario_file, parse_scenario


def make_session(timeout=4.0, realtime=True, **extra):
    overrides = [f"sim.timeout={timeout}",
                 'vehicles.0.policy={"type": "external"}'] + list(extra.get("overrides", []))
    doc = apply_overrides(load_scenario_file("cib_c7"), overrides)
    return BridgeSession(parse_scenario(doc), realtime=realtime)


def recv_snapshot(ws, deadline=5.0):
    end = time.monotonic() + deadline
    while time.monotonic() < end:
        msg = json.loads(ws.receive_text())
        if "t" in msg:
            return msg
    raise TimeoutError("no snapshot")


class TestBroadcast:
    def test_snapshots_arrive_in_order(self):
        session = make_session(timeout=2.0)
        app = make_app(session)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                times = [recv_snapshot(ws)["t"] for _ in range(10)]
        session.stop()
        assert times == sorted(times)
        assert len(set(times)) == len(times)

    def test_snapshot_schema(self):
        session = make_session(timeout=2.0)
        app = make_app(session)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                snap = recv_snapshot(ws)
        session.stop()
        assert {"t", "vehicles", "capture_diameter"} <= set(snap)
        roles = {v["role"] for v in snap["vehicles"]}
        assert roles == {"sv", "pov"}
        pov = next(v for v in snap["vehicles"] if v["role"] == "pov")
        assert "mode" in pov and "waypoints" in pov

    def test_no_clients_engine_unaffected(self):
        session = make_session(timeout=1.0, realtime=False)
        session.start()
        session._thread.join(timeout=30)
        assert session.last_runlog is not None
        assert len(session.last_runlog.entries) == 10


class TestCommands:
    def test_control_reflected_within_three_ticks(self):
        session = make_session(timeout=4.0)
        app = make_app(session)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                snap = recv_snapshot(ws)
                sent_at = snap["t"]
                ws.send_text(json.dumps({"type": "control", "a": 0.5, "steer": 0.02}))
                reflected_at = None
                for _ in range(40):
                    snap = recv_snapshot(ws)
                    sv = next(v for v in snap["vehicles"] if v["role"] == "sv")
                    if sv["u"][0] == pytest.approx(0.5) and \
                       sv["u"][1] == pytest.approx(0.02):
                        reflected_at = snap["t"]
                        break
                assert reflected_at is not None, "command never reflected"
                assert reflected_at - sent_at <= 3 * 0.1 + 1e-9
        session.stop()

    def test_out_of_range_control_clamped(self):
        session = make_session(timeout=3.0)
        app = make_app(session)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                recv_snapshot(ws)
                ws.send_text(json.dumps({"type": "control", "a": 99.0, "steer": 0.0}))
                for _ in range(30):
                    snap = recv_snapshot(ws)
                    sv = next(v for v in snap["vehicles"] if v["role"] == "sv")
                    if sv["u"][0] > 0:
                        assert sv["u"][0] == pytest.approx(0.67)
                        break
                else:
                    pytest.fail("clamped command never appeared")
        session.stop()

    def test_malformed_message_answered_with_error(self):
        session = make_session(timeout=3.0)
        app = make_app(session)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                ws.send_text("this is not json")
                end = time.monotonic() + 5.0
                reply = None
                while time.monotonic() < end:
                    msg = json.loads(ws.receive_text())
                    if msg.get("type") == "error":
                        reply = msg
                        break
                assert reply is not None
        session.stop()

    def test_unknown_type_answered_with_error(self):
        session = make_session(timeout=3.0)
        app = make_app(session)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                ws.send_text(json.dumps({"type": "nonsense"}))
                end = time.monotonic() + 5.0
                got_error = False
                while time.monotonic() < end:
                    msg = json.loads(ws.receive_text())
                    if msg.get("type") == "error":
                        got_error = True
                        break
                assert got_error
        session.stop()

    def test_stop_terminates_run_externally(self):
        session = make_session(timeout=30.0)
        app = make_app(session)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                recv_snapshot(ws)
                ws.send_text(json.dumps({"type": "stop"}))
                end = time.monotonic() + 10.0
                term = None
                while time.monotonic() < end:
                    msg = json.loads(ws.receive_text())
                    if "termination" in msg:
                        term = msg["termination"]
                        break
                assert term is not None and term["reason"] == "external_stop"
        session.stop()


class TestTiming:
    def test_tick_jitter_with_active_client(self):
        # the engine must keep its own clock while broadcasting
        session = make_session(timeout=3.0)
        app = make_app(session)
        arrivals = []
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                recv_snapshot(ws)
                for _ in range(20):
                    recv_snapshot(ws)
                    arrivals.append(time.monotonic())
        session.stop()
        gaps = [b - a for a, b in zip(arrivals, arrivals[1:])]
        median_gap = statistics.median(gaps)
        assert abs(median_gap - 0.1) <= 0.01   # within 10 percent of the tick

    def test_first_snapshot_is_initial_condition(self):
        session = make_session(timeout=2.0)
        app = make_app(session)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                snap = recv_snapshot(ws)
        session.stop()
        assert snap["t"] == 0.0
        sv = next(v for v in snap["vehicles"] if v["role"] == "sv")
        assert sv["x"] == 0.0 and sv["v"] == 18.0


class TestSessionSemantics:
    def test_reset_restarts_from_initial_condition(self):
        session = make_session(timeout=30.0)
        app = make_app(session)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                first = recv_snapshot(ws)
                assert first["t"] == 0.0
                # let the run advance, then ask for a fresh one
                while recv_snapshot(ws)["t"] < 1.0:
                    pass
                ws.send_text(json.dumps({"type": "reset"}))
                end = time.monotonic() + 10.0
                fresh = None
                while time.monotonic() < end:
                    snap = recv_snapshot(ws, deadline=10.0)
                    if snap["t"] == 0.0:
                        fresh = snap
                        break
                assert fresh is not None, "no restart observed"
                sv = next(v for v in fresh["vehicles"] if v["role"] == "sv")
                assert sv["x"] == 0.0 and sv["y"] == 5.55 and sv["v"] == 18.0
        session.stop()

    def test_second_client_is_spectator(self):
        session = make_session(timeout=6.0)
        app = make_app(session)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as driver:
                recv_snapshot(driver)
                with client.websocket_connect("/ws") as spectator:
                    recv_snapshot(spectator)
                    spectator.send_text(json.dumps(
                        {"type": "control", "a": 0.5, "steer": 0.0}))
                    # the spectator's command must never reach the subject
                    for _ in range(15):
                        snap = recv_snapshot(driver)
                        sv = next(v for v in snap["vehicles"] if v["role"] == "sv")
                        assert sv["u"][0] == 0.0
        session.stop()

    def test_backlog_drop_rule(self):
        # unit-level: a client that stops draining its queue is dropped
        # after the backlog limit instead of stalling the broadcaster
        import asyncio

        from adversim.bridge import BACKLOG_LIMIT, _Client

        session = make_session(timeout=2.0, realtime=False)

        class InlineLoop:
            def call_soon_threadsafe(self, fn):
                fn()

        client = _Client(ws=None, loop=InlineLoop())
        client.queue = asyncio.Queue(maxsize=BACKLOG_LIMIT)
        session._clients.append(client)
        for k in range(BACKLOG_LIMIT):
            session._broadcast({"t": k})
            assert not client.dropped
        session._broadcast({"t": BACKLOG_LIMIT})
        assert client.dropped


class TestServePreflight:
    def test_busy_port_raises(self):
        import socket

        from adversim.bridge import preflight_bind

        with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as holder:
            holder.bind(("127.0.0.1", 0))
            port = holder.getsockname()[1]
            holder.listen(1)
            with pytest.raises(OSError):
                preflight_bind("127.0.0.1", port)

    def test_free_port_passes(self):
        from adversim.bridge import preflight_bind

        preflight_bind("127.0.0.1", 0)
