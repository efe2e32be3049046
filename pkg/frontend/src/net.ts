// Websocket plumbing with automatic reconnect.

import { parseServerMessage, type ServerMessage } from './protocol.js';

export interface NetCallbacks {
  onMessage(msg: ServerMessage): void;
  onStatus(open: boolean): void;
}

export class Connection {
  private ws: WebSocket | null = null;
  private closed = false;

  constructor(private url: string, private cb: NetCallbacks,
              private reconnectMs = 1000) {
    this.open();
  }

  private open(): void {
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => this.cb.onStatus(true);
    ws.onmessage = (evt) => {
      const msg = parseServerMessage(String(evt.data));
      if (msg) this.cb.onMessage(msg);
    };
    ws.onclose = () => {
      this.cb.onStatus(false);
      if (!this.closed) {
        setTimeout(() => this.open(), this.reconnectMs);
      }
    };
  }

  send(text: string): boolean {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(text);
      return true;
    }
    return false;
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
