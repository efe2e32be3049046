import { DrivingInput, DEFAULT_INPUT } from './input.js';
import { Connection } from './net.js';
import { encodeCommand } from './protocol.js';
import { render, DEFAULT_RENDER, type Draw2D } from './render.js';
import {
  applyError, applySnapshot, applyStatus, applyTermination,
  initialViewState, type ViewState,
} from './state.js';

const canvas = document.getElementById('view') as HTMLCanvasElement;
canvas.width = DEFAULT_RENDER.width;
canvas.height = DEFAULT_RENDER.height;
const ctx = canvas.getContext('2d') as unknown as Draw2D;

let view: ViewState = initialViewState();

const wsUrl = `${location.protocol === 'https:' ? 'wss' : 'ws'}://${location.host}/ws`;
const conn = new Connection(wsUrl, {
  onMessage(msg) {
    if (msg.kind === 'snapshot') view = applySnapshot(view, msg.snapshot);
    else if (msg.kind === 'termination') view = applyTermination(view, msg.termination);
    else view = applyError(view, msg.detail);
  },
  onStatus(open) {
    view = applyStatus(view, open ? 'open' : 'closed');
  },
});

const input = new DrivingInput();
window.addEventListener('keydown', (e) => {
  const cmd = input.handleKey(e.code, true);
  if (cmd) conn.send(encodeCommand(cmd));
  if (e.code.startsWith('Arrow')) e.preventDefault();
});
window.addEventListener('keyup', (e) => {
  input.handleKey(e.code, false);
});

// stream the driving command at the simulation rate
setInterval(() => {
  if (view.status === 'open') {
    conn.send(encodeCommand(input.tick(DEFAULT_INPUT.periodMs / 1000)));
  }
}, DEFAULT_INPUT.periodMs);

function frame(): void {
  render(view, ctx);
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
