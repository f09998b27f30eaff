// WebSocket event stream with resume-on-reconnect.
//
// The server replays the record log from `from_seq`; we track the last seq
// we saw so a drop resumes exactly where it left off, and hand every frame
// to the consumer in order. Duplicate delivery across reconnects is
// filtered here by sequence number.

import type { RecordEvent } from "./types.js";

export type StreamStatus = "connecting" | "open" | "reconnecting" | "ended" | "closed";

type WebSocketCtor = new (url: string) => WebSocket;

export interface StreamHandlers {
  onEvent: (event: RecordEvent) => void;
  onStatus?: (status: StreamStatus) => void;
}

export class EventStream {
  lastSeq = -1;
  private ws: WebSocket | null = null;
  private stopped = false;
  private retryMs = 250;

  constructor(
    private readonly url: string,
    private readonly handlers: StreamHandlers,
    private readonly WebSocketImpl: WebSocketCtor = WebSocket,
  ) {}

  connect(fromSeq = 0): void {
    this.lastSeq = fromSeq - 1;
    this.open();
  }

  private open(): void {
    if (this.stopped) return;
    this.status("connecting");
    const ws = new this.WebSocketImpl(`${this.url}?from_seq=${this.lastSeq + 1}`);
    this.ws = ws;
    ws.onopen = () => {
      this.retryMs = 250;
      this.status("open");
    };
    ws.onmessage = (msg: MessageEvent) => {
      const frame = JSON.parse(String(msg.data));
      if (frame.type === "stream_end") {
        this.stopped = true;
        this.status("ended");
        ws.close();
        return;
      }
      const event = frame as RecordEvent;
      if (event.seq <= this.lastSeq) return; // duplicate across a reconnect
      this.lastSeq = event.seq;
      this.handlers.onEvent(event);
    };
    ws.onclose = () => {
      if (this.stopped) return;
      this.status("reconnecting");
      setTimeout(() => this.open(), this.retryMs);
      this.retryMs = Math.min(this.retryMs * 2, 5_000);
    };
    ws.onerror = () => {
      ws.close();
    };
  }

  close(): void {
    this.stopped = true;
    this.status("closed");
    this.ws?.close();
  }

  private status(s: StreamStatus): void {
    this.handlers.onStatus?.(s);
  }
}
