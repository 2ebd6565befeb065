// Reconnecting WebSocket wrapper speaking the session protocol.

import { parseMessage, ProtocolError, type ProtocolMessage } from "./protocol.js";

export interface ConnectionCallbacks {
  onMessage: (msg: ProtocolMessage) => void;
  onStatus: (status: "connecting" | "open" | "closed") => void;
  onProtocolError?: (reason: string) => void;
}

type SocketFactory = (url: string) => WebSocket;

export class FeedbackConnection {
  private socket: WebSocket | null = null;
  private closedByUser = false;
  private retryMs = 500;

  constructor(
    private url: string,
    private callbacks: ConnectionCallbacks,
    private factory: SocketFactory = (u) => new WebSocket(u),
  ) {}

  connect(): void {
    this.callbacks.onStatus("connecting");
    const socket = this.factory(this.url);
    this.socket = socket;

    socket.onopen = () => {
      this.retryMs = 500;
      this.callbacks.onStatus("open");
    };
    socket.onmessage = (event: MessageEvent) => {
      try {
        this.callbacks.onMessage(parseMessage(String(event.data)));
      } catch (err) {
        if (err instanceof ProtocolError && this.callbacks.onProtocolError) {
          this.callbacks.onProtocolError(err.message);
        }
      }
    };
    socket.onclose = () => {
      this.socket = null;
      this.callbacks.onStatus("closed");
      if (!this.closedByUser) {
        const delay = this.retryMs;
        this.retryMs = Math.min(this.retryMs * 2, 10_000);
        setTimeout(() => this.connect(), delay);
      }
    };
  }

  get isOpen(): boolean {
    return this.socket !== null && this.socket.readyState === WebSocket.OPEN;
  }

  send(msg: ProtocolMessage): boolean {
    if (!this.isOpen || this.socket === null) return false;
    this.socket.send(JSON.stringify(msg));
    return true;
  }

  close(): void {
    this.closedByUser = true;
    this.socket?.close();
  }
}
