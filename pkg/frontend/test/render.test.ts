import { describe, expect, it } from 'vitest';

import type { WireSnapshot } from '../src/protocol.js';
import { formatMode, render } from '../src/render.js';
import { applySnapshot, applyTermination, initialViewState } from '../src/state.js';
import { RecordingContext } from './recorder.js';

function snapshot(t = 1.2, mode = 'predictive', tStar: number | null = null): WireSnapshot {
  return {
    t,
    capture_diameter: 7,
    vehicles: [
      { id: 'sv', role: 'sv', x: 100, y: 5.55, v: 18, phi: 0, u: [0, 0] },
      {
        id: 'pov1', role: 'pov', x: 120, y: 5.55, v: 16, phi: 0.02,
        u: [-1.7, 0], mode, t_star: tStar,
        waypoints: [[121, 5.5], [123, 5.4], [125, 5.3]],
      },
    ],
  };
}

describe('render', () => {
  it('shows a waiting screen without a snapshot', () => {
    const ctx = new RecordingContext();
    render(initialViewState(), ctx);
    expect(ctx.texts().some((t) => t.includes('waiting'))).toBe(true);
  });

  it('is a pure function of the view state', () => {
    const view = applySnapshot(initialViewState(), snapshot());
    const a = new RecordingContext();
    const b = new RecordingContext();
    render(view, a);
    render(view, b);
    expect(a.calls).toEqual(b.calls);
  });

  it('draws every vehicle, the waypoints, and the capture circle', () => {
    const view = applySnapshot(initialViewState(), snapshot());
    const ctx = new RecordingContext();
    render(view, ctx);
    const rects = ctx.calls.filter((c) => c.op === 'fillRect');
    // background, road, 3 waypoint dots, 2 vehicle bodies
    expect(rects.length).toBeGreaterThanOrEqual(7);
    expect(ctx.calls.some((c) => c.op === 'arc')).toBe(true);
    expect(ctx.calls.filter((c) => c.op === 'rotate').length).toBe(2);
  });

  it('hud shows worst-case mode with the capture time', () => {
    const view = applySnapshot(initialViewState(), snapshot(3.4, 'worst_case', 0.8));
    const ctx = new RecordingContext();
    render(view, ctx);
    const texts = ctx.texts();
    expect(texts).toContain('t=3.4s');
    expect(texts.some((t) => t.includes('WORST-CASE') && t.includes('T*=0.8s'))).toBe(true);
  });

  it('overlays the termination banner with a reset prompt', () => {
    let view = applySnapshot(initialViewState(), snapshot());
    view = applyTermination(view, { reason: 'collision', t: 12.3, pov: 0 });
    const ctx = new RecordingContext();
    render(view, ctx);
    expect(ctx.texts().some((t) => t.includes('collision') && t.includes('R to reset')))
      .toBe(true);
  });
});

describe('hud fidelity over recorded frames', () => {
  it('mode and capture time always equal the wire values', () => {
    // deterministic pseudo-random frame stream
    let seed = 42;
    const rand = () => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    const modes = ['predictive', 'worst_case', 'lane_keep'];
    for (let frame = 0; frame < 100; frame += 1) {
      const mode = modes[Math.floor(rand() * 3)];
      const tStar = mode === 'worst_case' ? Math.round(rand() * 20) / 10 : null;
      const snap = snapshot(Math.round(frame * 10) / 10, mode, tStar);
      const ctx = new RecordingContext();
      render(applySnapshot(initialViewState(), snap), ctx);
      const hudLine = ctx.texts().find((t) => t.startsWith('pov1:'));
      expect(hudLine).toBeDefined();
      expect(hudLine).toBe(`pov1: ${formatMode(snap.vehicles[1])}`);
      if (mode === 'worst_case') {
        expect(hudLine).toContain(`T*=${(tStar as number).toFixed(1)}s`);
      }
      expect(ctx.texts()).toContain(`t=${snap.t.toFixed(1)}s`);
    }
  });
});
