// Keyboard driving: arrow keys ramp the commanded acceleration and
// steering toward their bounds, releases decay back to zero, and a
// control message goes out every tick whether or not keys are down
// (the server watchdog expects a live stream while driving).

import type { WireCommand } from './protocol.js';

export interface InputConfig {
  aMin: number;
  aMax: number;
  steerMax: number;
  aRampPerSec: number;      // throttle build rate
  steerRampPerSec: number;
  decayFactor: number;      // release decay rate, multiple of the ramp
  periodMs: number;         // command emission period
}

export const DEFAULT_INPUT: InputConfig = {
  aMin: -1.7,
  aMax: 0.67,
  steerMax: 0.6,
  aRampPerSec: 2.0,
  steerRampPerSec: 0.5,
  decayFactor: 2.0,
  periodMs: 100,
};

export interface KeyState {
  up: boolean;
  down: boolean;
  left: boolean;
  right: boolean;
}

export function emptyKeys(): KeyState {
  return { up: false, down: false, left: false, right: false };
}

function towardZero(value: number, step: number): number {
  if (value > 0) return Math.max(0, value - step);
  if (value < 0) return Math.min(0, value + step);
  return 0;
}

export class DrivingInput {
  a = 0;
  steer = 0;
  private keys = emptyKeys();

  constructor(private cfg: InputConfig = DEFAULT_INPUT) {}

  setKeys(keys: Partial<KeyState>): void {
    this.keys = { ...this.keys, ...keys };
  }

  handleKey(code: string, pressed: boolean): WireCommand | null {
    switch (code) {
      case 'ArrowUp': this.keys.up = pressed; return null;
      case 'ArrowDown': this.keys.down = pressed; return null;
      case 'ArrowLeft': this.keys.left = pressed; return null;
      case 'ArrowRight': this.keys.right = pressed; return null;
      case 'KeyR': return pressed ? { type: 'reset' } : null;
      default: return null;
    }
  }

  /** Advance the ramps by dt seconds and produce this tick's command. */
  tick(dtSec: number): WireCommand {
    const c = this.cfg;
    if (this.keys.up && !this.keys.down) {
      this.a = Math.min(c.aMax, this.a + c.aRampPerSec * dtSec);
    } else if (this.keys.down && !this.keys.up) {
      this.a = Math.max(c.aMin, this.a - c.aRampPerSec * dtSec);
    } else {
      this.a = towardZero(this.a, c.decayFactor * c.aRampPerSec * dtSec);
    }
    if (this.keys.left && !this.keys.right) {
      this.steer = Math.min(c.steerMax, this.steer + c.steerRampPerSec * dtSec);
    } else if (this.keys.right && !this.keys.left) {
      this.steer = Math.max(-c.steerMax, this.steer - c.steerRampPerSec * dtSec);
    } else {
      this.steer = towardZero(this.steer, c.decayFactor * c.steerRampPerSec * dtSec);
    }
    return { type: 'control', a: this.a, steer: this.steer };
  }
}
