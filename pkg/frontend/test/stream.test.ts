import { describe, expect, it, vi } from "vitest";

import { EventStream } from "../src/stream.js";
import type { RecordEvent } from "../src/types.js";

// minimal scripted WebSocket: each instance replays a canned frame list
class FakeSocket {
  static scripts: string[][] = [];
  static urls: string[] = [];
  onopen: (() => void) | null = null;
  onmessage: ((m: { data: string }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;

  constructor(url: string) {
    FakeSocket.urls.push(url);
    const frames = FakeSocket.scripts.shift() ?? [];
    queueMicrotask(() => {
      this.onopen?.();
      for (const frame of frames) this.onmessage?.({ data: frame });
      this.onclose?.();
    });
  }

  close(): void {}
}

function frame(seq: number): string {
  const event: RecordEvent = { seq, type: "deal", frame: 1, turn: 1, data: {} };
  return JSON.stringify(event);
}

describe("EventStream", () => {
  it("resumes after a drop without duplicating events", async () => {
    vi.useFakeTimers();
    FakeSocket.scripts = [
      [frame(0), frame(1)],                    // connection drops after seq 1
      [frame(1), frame(2), '{"type": "stream_end"}'],  // server replays seq 1
    ];
    FakeSocket.urls = [];
    const seen: number[] = [];
    const statuses: string[] = [];
    const stream = new EventStream("ws://x/runs/r1/stream", {
      onEvent: (e) => seen.push(e.seq),
      onStatus: (s) => statuses.push(s),
    }, FakeSocket as any);
    stream.connect(0);
    await vi.runAllTimersAsync();
    expect(seen).toEqual([0, 1, 2]); // the replayed seq 1 was deduplicated
    expect(FakeSocket.urls).toEqual([
      "ws://x/runs/r1/stream?from_seq=0",
      "ws://x/runs/r1/stream?from_seq=2", // resumed from last seen + 1
    ]);
    expect(statuses).toContain("reconnecting");
    expect(statuses[statuses.length - 1]).toBe("ended");
    vi.useRealTimers();
  });
});
