// Wire schema shared with the simulation server.

export interface WireVehicle {
  id: string;
  role: 'sv' | 'pov';
  x: number;
  y: number;
  v: number;
  phi: number;
  u: [number, number];
  mode?: string;
  t_star?: number | null;
  waypoints?: [number, number][];
}

export interface WireSnapshot {
  t: number;
  vehicles: WireVehicle[];
  capture_diameter: number;
}

export interface WireTermination {
  reason: string;
  t: number;
  pov?: number;
  detail?: string;
}

export type ServerMessage =
  | { kind: 'snapshot'; snapshot: WireSnapshot }
  | { kind: 'termination'; termination: WireTermination }
  | { kind: 'error'; detail: string };

export type WireCommand =
  | { type: 'control'; a: number; steer: number }
  | { type: 'reset' }
  | { type: 'stop' };

export function parseServerMessage(raw: string): ServerMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof obj !== 'object' || obj === null) return null;
  const rec = obj as Record<string, unknown>;
  if ('termination' in rec) {
    return { kind: 'termination', termination: rec.termination as WireTermination };
  }
  if (rec.type === 'error') {
    return { kind: 'error', detail: String(rec.detail ?? '') };
  }
  if (typeof rec.t === 'number' && Array.isArray(rec.vehicles)) {
    return { kind: 'snapshot', snapshot: rec as unknown as WireSnapshot };
  }
  return null;
}

export function encodeCommand(cmd: WireCommand): string {
  return JSON.stringify(cmd);
}
