// Top-down renderer. Pure function of the view state over a minimal 2D
// context interface, so tests can record draw calls instead of pixels.

import type { WireVehicle } from './protocol.js';
import type { ViewState } from './state.js';

export interface Draw2D {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  rotate(rad: number): void;
  setLineDash(segments: number[]): void;
  fillText(text: string, x: number, y: number): void;
}

export interface RenderConfig {
  width: number;
  height: number;
  metersPerPixel: number;   // horizontal scale
  laneCount: number;
  laneWidth: number;
  vehicleLength: number;
  vehicleWidth: number;
}

export const DEFAULT_RENDER: RenderConfig = {
  width: 960,
  height: 360,
  metersPerPixel: 1 / 6,
  laneCount: 3,
  laneWidth: 3.7,
  vehicleLength: 5,
  vehicleWidth: 2,
};

const ROAD_COLOR = '#2b2b33';
const LANE_MARK = '#8a8a96';
const SV_COLOR = '#3b82f6';
const POV_COLOR = '#ef4444';
const WAYPOINT_COLOR = '#fbbf24';
const CAPTURE_COLOR = '#22d3ee';
const HUD_COLOR = '#e5e7eb';

export function formatMode(v: WireVehicle): string {
  if (v.mode === 'worst_case') {
    const t = v.t_star == null ? '' : `, T*=${v.t_star.toFixed(1)}s`;
    return `WORST-CASE${t}`;
  }
  if (v.mode === 'predictive') return 'PREDICTIVE';
  if (v.mode === 'lane_keep') return 'LANE-KEEP';
  return '';
}

export function render(view: ViewState, ctx: Draw2D, cfg: RenderConfig = DEFAULT_RENDER): void {
  ctx.fillStyle = '#111118';
  ctx.fillRect(0, 0, cfg.width, cfg.height);
  const snap = view.snapshot;
  if (!snap) {
    ctx.fillStyle = HUD_COLOR;
    ctx.font = '16px monospace';
    ctx.fillText(view.status === 'closed' ? 'disconnected' : 'waiting for snapshots...',
      cfg.width / 2 - 90, cfg.height / 2);
    return;
  }

  const sv = snap.vehicles.find((v) => v.role === 'sv');
  const px = 1 / cfg.metersPerPixel;
  const roadHeight = cfg.laneCount * cfg.laneWidth * px;
  const roadTop = (cfg.height - roadHeight) / 2;
  // camera: subject pinned at 30 percent of the width
  const originX = (sv ? sv.x : 0) - 0.3 * cfg.width * cfg.metersPerPixel;
  const toX = (x: number) => (x - originX) * px;
  const toY = (y: number) => roadTop + roadHeight - y * px;

  // road body and lane marks
  ctx.fillStyle = ROAD_COLOR;
  ctx.fillRect(0, roadTop, cfg.width, roadHeight);
  ctx.strokeStyle = LANE_MARK;
  ctx.lineWidth = 1;
  for (let lane = 1; lane < cfg.laneCount; lane += 1) {
    const y = toY(lane * cfg.laneWidth);
    ctx.setLineDash([12, 10]);
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(cfg.width, y);
    ctx.stroke();
  }
  ctx.setLineDash([]);

  // capture circle around the subject
  if (sv) {
    ctx.strokeStyle = CAPTURE_COLOR;
    ctx.lineWidth = 1.5;
    ctx.setLineDash([6, 6]);
    ctx.beginPath();
    ctx.arc(toX(sv.x), toY(sv.y), (snap.capture_diameter / 2) * px, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  // planned waypoints, then the vehicles on top
  ctx.fillStyle = WAYPOINT_COLOR;
  for (const v of snap.vehicles) {
    if (!v.waypoints) continue;
    for (const [wx, wy] of v.waypoints) {
      ctx.fillRect(toX(wx) - 1.5, toY(wy) - 1.5, 3, 3);
    }
  }
  for (const v of snap.vehicles) {
    ctx.save();
    ctx.translate(toX(v.x), toY(v.y));
    ctx.rotate(-v.phi);
    ctx.fillStyle = v.role === 'sv' ? SV_COLOR : POV_COLOR;
    ctx.fillRect(-cfg.vehicleLength * px / 2, -cfg.vehicleWidth * px / 2,
      cfg.vehicleLength * px, cfg.vehicleWidth * px);
    ctx.restore();
  }

  // HUD: time, subject speed, one line per adversary
  ctx.fillStyle = HUD_COLOR;
  ctx.font = '13px monospace';
  ctx.fillText(`t=${snap.t.toFixed(1)}s`, 12, 20);
  if (sv) ctx.fillText(`v=${sv.v.toFixed(1)} m/s`, 12, 38);
  let line = 0;
  for (const v of snap.vehicles) {
    if (v.role !== 'pov') continue;
    ctx.fillText(`${v.id}: ${formatMode(v)}`, 12, 56 + 18 * line);
    line += 1;
  }

  if (view.termination) {
    ctx.fillStyle = '#f87171';
    ctx.font = '20px monospace';
    ctx.fillText(`run over: ${view.termination.reason}  (R to reset)`,
      cfg.width / 2 - 160, 40);
  }
}
