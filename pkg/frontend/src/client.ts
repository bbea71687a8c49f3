/** WebSocket session client.
 *
 * Steering sends the drawn stroke as a constraints message and feeds
 * returned frames into the viewer.  While disconnected, strokes queue
 * locally and flush on reconnect (the viewer shows an offline
 * indicator).
 */

import { parseServerMessage, type ConstraintFrame, type ServerMessage } from "./protocol.js";
import { strokeToConstraints, type StrokePoint } from "./stroke.js";
import { applyHello, ingestFrames, type ViewerState } from "./viewer.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface SessionClientOptions {
  url: string;
  seed: number;
  viewer: ViewerState;
  rootHeight?: number;
  socketFactory?: SocketFactory;
  onUpdate?: () => void;
  onError?: (code: string, detail: string) => void;
}

export class SessionClient {
  private socket: SocketLike | null = null;
  private outbox: ConstraintFrame[][] = [];
  private opened = false;
  readonly viewer: ViewerState;
  private readonly options: SessionClientOptions;

  constructor(options: SessionClientOptions) {
    this.options = options;
    this.viewer = options.viewer;
  }

  connect(): void {
    const factory =
      this.options.socketFactory ??
      ((url: string) => new WebSocket(url) as unknown as SocketLike);
    const socket = factory(this.options.url);
    this.socket = socket;
    socket.onopen = () => {
      this.opened = true;
      this.viewer.offline = false;
      this.flush();
    };
    socket.onmessage = (ev) => this.handleMessage(String(ev.data));
    socket.onclose = () => {
      this.opened = false;
      this.viewer.offline = true;
    };
    socket.onerror = () => {
      this.viewer.offline = true;
    };
  }

  close(): void {
    this.socket?.send(JSON.stringify({ type: "bye" }));
    this.socket?.close();
  }

  /** Convert a stroke and send it; queues while disconnected. */
  steer(points: StrokePoint[]): boolean {
    const frames = strokeToConstraints(points, this.options.rootHeight ?? 1.0);
    if (!frames) return false; // idle: nothing to send
    this.sendConstraints(frames);
    return true;
  }

  sendConstraints(frames: ConstraintFrame[]): void {
    if (!this.opened || !this.socket) {
      this.outbox.push(frames);
      this.viewer.offline = true;
      return;
    }
    this.viewer.constraintsSent += frames.length;
    this.socket.send(
      JSON.stringify({ type: "constraints", frames, seed: this.options.seed }),
    );
  }

  private flush(): void {
    while (this.outbox.length && this.socket) {
      const frames = this.outbox.shift()!;
      this.viewer.constraintsSent += frames.length;
      this.socket.send(
        JSON.stringify({ type: "constraints", frames, seed: this.options.seed }),
      );
    }
  }

  private handleMessage(raw: string): void {
    let message: ServerMessage;
    try {
      message = parseServerMessage(raw);
    } catch {
      this.options.onError?.("bad_server_message", raw.slice(0, 80));
      return;
    }
    switch (message.type) {
      case "hello":
        applyHello(this.viewer, message);
        break;
      case "frames":
        ingestFrames(this.viewer, message);
        break;
      case "error":
        this.options.onError?.(message.code, message.detail);
        break;
      case "bye":
        break;
    }
    this.options.onUpdate?.();
  }
}
