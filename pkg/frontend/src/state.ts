// Client view state: everything rendered comes from the latest snapshot,
// nothing here mutates simulation truth.

import type { WireSnapshot, WireTermination } from './protocol.js';

export type ConnectionStatus = 'connecting' | 'open' | 'closed';

export interface ViewState {
  snapshot: WireSnapshot | null;
  termination: WireTermination | null;
  status: ConnectionStatus;
  lastError: string | null;
}

export function initialViewState(): ViewState {
  return { snapshot: null, termination: null, status: 'connecting', lastError: null };
}

export function applySnapshot(state: ViewState, snap: WireSnapshot): ViewState {
  return { ...state, snapshot: snap, termination: null };
}

export function applyTermination(state: ViewState, term: WireTermination): ViewState {
  return { ...state, termination: term };
}

export function applyStatus(state: ViewState, status: ConnectionStatus): ViewState {
  return { ...state, status };
}

export function applyError(state: ViewState, detail: string): ViewState {
  return { ...state, lastError: detail };
}
