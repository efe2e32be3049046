"""Websocket session layer between a running engine and browser clients.

One authoritative simulation per session. Every connected client receives
each tick's snapshot; only the first-connected client's control messages
are honored (later clients spectate). The engine never waits on the
network: snapshots go through bounded per-client queues and clients that
fall 32 messages behind are dropped.

Message schemas
  outbound: {"t", "vehicles": [{id, role, x, y, v, phi, u, mode?, t_star?,
             waypoints?}], "capture_diameter"} and a final {"termination"}
  inbound:  {"type": "control", "a": float, "steer": float}
            {"type": "reset"} | {"type": "stop"}
"""

from __future__ import annotations

import asyncio
import json
import logging
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse

from .engine import EngineConfig, ScenarioEngine
from .policies import ExternalCommandPolicy

log = logging.getLogger("adversim.bridge")

BACKLOG_LIMIT = 32

_PLACEHOLDER = """<!doctype html>
<html><head><title>adversim</title></head>
<body><h1>adversim session</h1>
<p>No web client bundle found. Connect to <code>/ws</code> directly,
or build the frontend and pass its dist directory to the server.</p>
</body></html>"""


class _Client:
    def __init__(self, ws: WebSocket, loop: asyncio.AbstractEventLoop):
        self.ws = ws
        self.loop = loop
        self.queue: asyncio.Queue = asyncio.Queue(maxsize=BACKLOG_LIMIT)
        self.dropped = False


class BridgeSession:
    """Engine lifecycle plus client fan-out for one scenario."""

    def __init__(self, config: EngineConfig, out_dir: Optional[Path] = None,
                 realtime: bool = True):
        self.config = config
        self.out_dir = out_dir
        self.realtime = realtime
        self.policy = ExternalCommandPolicy(
            a_bounds=config.a_x_bounds)
        self._clients: list = []
        self._clients_lock = threading.Lock()
        self._driver: Optional[_Client] = None
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self._run_index = 0
        self.last_runlog = None

    # ----- engine side (worker thread) --------------------------------

    def start(self):
        if self._thread is not None and self._thread.is_alive():
            return
        self._stop.clear()
        self._thread = threading.Thread(target=self._run_once, daemon=True)
        self._thread.start()

    def _run_once(self):
        engine = ScenarioEngine(self.config)
        pace = (1.0 / self.config.delta) if self.realtime else None
        runlog = engine.run(observer=self._broadcast, pace_hz=pace,
                            stop_flag=self._stop.is_set,
                            external_policy=self.policy)
        self.last_runlog = runlog
        if self.out_dir is not None:
            from .cli import _write_outputs
            name = f"{self.config.name}_run{self._run_index}"
            _write_outputs(self.out_dir, name, runlog, self.config.capture_diameter)
        self._run_index += 1

    def stop(self, join: bool = True):
        self._stop.set()
        if join and self._thread is not None:
            self._thread.join(timeout=10.0)

    def reset(self):
        """Restart from the initial snapshot with a fresh log."""
        self.stop(join=True)
        self.start()

    def _broadcast(self, payload: dict):
        data = json.dumps(payload, separators=(",", ":"))
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            if client.dropped:
                continue
            def push(c=client, d=data):
                try:
                    c.queue.put_nowait(d)
                except asyncio.QueueFull:
                    c.dropped = True
                    try:
                        c.queue.put_nowait(None)   # wake the sender to close
                    except asyncio.QueueFull:
                        pass
            try:
                client.loop.call_soon_threadsafe(push)
            except RuntimeError:
                client.dropped = True

    # ----- client side (event loop) ------------------------------------

    def register(self, ws: WebSocket, loop: asyncio.AbstractEventLoop) -> _Client:
        client = _Client(ws, loop)
        with self._clients_lock:
            self._clients.append(client)
            if self._driver is None or self._driver.dropped:
                self._driver = client
        return client

    def unregister(self, client: _Client):
        with self._clients_lock:
            if client in self._clients:
                self._clients.remove(client)
            if self._driver is client:
                self._driver = next((c for c in self._clients if not c.dropped), None)

    def is_driver(self, client: _Client) -> bool:
        with self._clients_lock:
            return self._driver is client

    def handle_command(self, client: _Client, raw: str) -> Optional[dict]:
        """Apply one inbound message; returns an error reply or None."""
        try:
            cmd = json.loads(raw)
            ctype = cmd.get("type")
        except (json.JSONDecodeError, AttributeError):
            return {"type": "error", "detail": "malformed message"}
        if ctype == "control":
            if not self.is_driver(client):
                return None   # spectators are read-only
            try:
                self.policy.set_command(float(cmd["a"]), float(cmd["steer"]))
            except (KeyError, TypeError, ValueError):
                return {"type": "error", "detail": "control needs numeric a and steer"}
            return None
        if ctype == "reset":
            threading.Thread(target=self.reset, daemon=True).start()
            return None
        if ctype == "stop":
            self._stop.set()
            return None
        return {"type": "error", "detail": f"unknown message type {ctype!r}"}


def make_app(session: BridgeSession, static_dir: Optional[Path] = None) -> FastAPI:
    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(_app):
        session.start()
        yield
        session.stop(join=False)

    app = FastAPI(lifespan=lifespan)

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        client = session.register(ws, asyncio.get_running_loop())

        async def sender():
            while True:
                item = await client.queue.get()
                if item is None or client.dropped:
                    break
                await ws.send_text(item)

        send_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await ws.receive_text()
                reply = session.handle_command(client, raw)
                if reply is not None:
                    await ws.send_text(json.dumps(reply, separators=(",", ":")))
        except WebSocketDisconnect:
            pass
        finally:
            session.unregister(client)
            client.dropped = True
            send_task.cancel()

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    else:
        @app.get("/")
        async def index():
            return HTMLResponse(_PLACEHOLDER)

    return app


def default_static_dir() -> Optional[Path]:
    """frontend/dist next to the repository root, when built."""
    here = Path(__file__).resolve()
    for parent in here.parents:
        cand = parent / "frontend" / "dist"
        if cand.is_dir():
            return cand
    return None


def preflight_bind(host: str, port: int):
    """Fail fast with OSError when the port is taken, so the CLI can map it
    to its exit code before the server machinery starts."""
    import socket

    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as probe:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))


def serve_session(config: EngineConfig, port: int, out_dir: Optional[Path] = None,
                  host: str = "127.0.0.1"):
    """Blocking server entry used by the CLI serve command."""
    import uvicorn

    preflight_bind(host, port)
    session = BridgeSession(config, out_dir=out_dir, realtime=True)
    app = make_app(session, static_dir=default_static_dir())
    uvicorn.run(app, host=host, port=port, log_level="warning")
