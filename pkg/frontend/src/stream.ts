/** NDJSON event stream client: parse, dedup by event id, resume on drop.
 *
 * The gateway assigns every event a monotonically increasing id. The feed
 * ignores anything at or below the last id it has seen, so replays after a
 * reconnect (GET /stream?last_event_id=N) never produce duplicate points.
 */

import type { StreamEvent } from "./types.js";

/** Incremental newline-delimited JSON parser; tolerates partial chunks. */
export class NdjsonParser {
  private buffer = "";

  push(chunk: string): StreamEvent[] {
    this.buffer += chunk;
    const out: StreamEvent[] = [];
    let idx: number;
    while ((idx = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, idx).trim();
      this.buffer = this.buffer.slice(idx + 1);
      if (!line) continue;
      try {
        out.push(JSON.parse(line) as StreamEvent);
      } catch {
        // a torn line can only happen on reconnect; drop it
      }
    }
    return out;
  }
}

/** Orders and deduplicates events; heartbeats are passed through untracked. */
export class EventFeed {
  lastEventId = 0;
  dropped = 0;

  constructor(private readonly deliver: (event: StreamEvent) => void) {}

  accept(event: StreamEvent): boolean {
    if (event.event === "heartbeat") return false;
    if (typeof event.id !== "number" || event.id <= this.lastEventId) {
      this.dropped += 1;
      return false;
    }
    this.lastEventId = event.id;
    this.deliver(event);
    return true;
  }
}

export type ConnectionState = "connecting" | "live" | "reconnecting" | "stopped";

export interface StreamClientOptions {
  baseUrl: string;
  onEvent: (event: StreamEvent) => void;
  onState?: (state: ConnectionState) => void;
  /** delay before re-dialing after a drop (ms) */
  retryDelayMs?: number;
  fetchImpl?: typeof fetch;
}

/** Long-lived /stream connection with resume-by-last-event-id. */
export class StreamClient {
  private feed: EventFeed;
  private stopped = false;
  private readonly retryDelayMs: number;
  private readonly fetchImpl: typeof fetch;

  constructor(private readonly opts: StreamClientOptions) {
    this.feed = new EventFeed(opts.onEvent);
    this.retryDelayMs = opts.retryDelayMs ?? 1000;
    this.fetchImpl = opts.fetchImpl ?? fetch;
  }

  get lastEventId(): number {
    return this.feed.lastEventId;
  }

  stop(): void {
    this.stopped = true;
  }

  async run(): Promise<void> {
    while (!this.stopped) {
      this.opts.onState?.(this.feed.lastEventId ? "reconnecting" : "connecting");
      try {
        const url = `${this.opts.baseUrl}/stream?last_event_id=${this.feed.lastEventId}`;
        const resp = await this.fetchImpl(url);
        if (!resp.ok || !resp.body) throw new Error(`stream returned ${resp.status}`);
        this.opts.onState?.("live");
        await this.consume(resp.body);
      } catch {
        // fall through to retry
      }
      if (this.stopped) break;
      await new Promise((resolve) => setTimeout(resolve, this.retryDelayMs));
    }
    this.opts.onState?.("stopped");
  }

  private async consume(body: ReadableStream<Uint8Array>): Promise<void> {
    const reader = body.getReader();
    const decoder = new TextDecoder();
    const parser = new NdjsonParser();
    for (;;) {
      const { done, value } = await reader.read();
      if (this.stopped) {
        await reader.cancel().catch(() => undefined);
        return;
      }
      if (done) return;
      for (const event of parser.push(decoder.decode(value, { stream: true }))) {
        this.feed.accept(event);
      }
    }
  }
}
