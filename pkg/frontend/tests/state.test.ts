import { describe, expect, it } from "vitest";

import { ViewStore } from "../src/state.js";
import type { SessionSnapshot, StreamEvent } from "../src/types.js";

const stageEvent = (id: number, to: string, sessionId = "session-0001"): StreamEvent =>
  ({ id, event: "stage", data: { session_id: sessionId, from: "", to } }) as StreamEvent;

const metricEvent = (id: number, t: number, metrics: Record<string, number | boolean>): StreamEvent =>
  ({
    id,
    event: "metric",
    data: { sub_id: "sub-0001", xapp_id: "xapp-0001", t_ms: t, period_ms: 100, flow_ids: [], sample_count: 4, metrics },
  }) as StreamEvent;

const alertEvent = (id: number, alertId: string, kind: string, cleared = false): StreamEvent =>
  ({
    id,
    event: "alert",
    data: {
      alert_id: alertId,
      xapp_id: "xapp-0001",
      metric: "latency_ms",
      kind,
      value: 60,
      threshold: 50,
      t_ms: 100 * id,
      cleared,
      cleared_t_ms: cleared ? 100 * id : null,
    },
  }) as StreamEvent;

const snapshot = (stage: string): SessionSnapshot =>
  ({
    session_id: "session-0001",
    stage,
    profile: {},
    candidates: [],
    chosen_model: null,
    plan: null,
    instance_id: null,
    service_endpoint: null,
    xapp_ids: [],
    failure: null,
    transcript: [
      { seq: 1, kind: "message", role: "user", text: "hello" },
      { seq: 2, kind: "message", role: "agent", text: "what latency?" },
      { seq: 3, kind: "tool_call", name: "search_models" },
    ],
  }) as SessionSnapshot;

describe("ViewStore", () => {
  it("renders stage only from events or snapshots, never optimistically", () => {
    const store = new ViewStore();
    store.applySnapshot(snapshot("INTENT"));
    expect(store.stage).toBe("INTENT");
    store.applyEvent(stageEvent(1, "MODEL_MATCH"));
    expect(store.stage).toBe("MODEL_MATCH");
    // stage events for other sessions are ignored
    store.applyEvent(stageEvent(2, "FAILED", "session-0999"));
    expect(store.stage).toBe("MODEL_MATCH");
  });

  it("chat shows only message entries from the transcript", () => {
    const store = new ViewStore();
    store.applySnapshot(snapshot("INTENT"));
    expect(store.chat).toEqual([
      { role: "user", text: "hello" },
      { role: "agent", text: "what latency?" },
    ]);
  });

  it("input is enabled exactly in interactive stages", () => {
    const store = new ViewStore();
    store.applySnapshot(snapshot("INTENT"));
    expect(store.inputEnabled).toBe(true);
    for (const stage of ["MODEL_MATCH", "DEPLOY", "ADAPT", "MONITOR", "COMPLETE", "FAILED"]) {
      store.applyEvent(stageEvent(10 + Number(stage.length), stage));
      store.stage = stage;
      expect(store.inputEnabled).toBe(false);
    }
    store.stage = "AWAIT_MODEL_CHOICE";
    expect(store.inputEnabled).toBe(true);
  });

  it("charts are fed only from metric events and track sim time", () => {
    const store = new ViewStore();
    store.applyEvent(metricEvent(1, 100, { latency_ms: 10, throughput_mbps: 5, loss_rate: 0, jitter_ms: 1, available: true }));
    store.applyEvent(metricEvent(2, 200, { latency_ms: 12, throughput_mbps: 5, loss_rate: 0, jitter_ms: 1.2, available: true }));
    expect(store.charts.latency_ms.count()).toBe(2);
    expect(store.charts.latency_ms.latest()?.v).toBe(12);
    // boolean-valued metrics never land in numeric charts
    expect(store.charts.loss_rate.count()).toBe(2);
  });

  it("chart data is lossless over a 60 s window at 100 ms cadence", () => {
    const store = new ViewStore();
    for (let k = 0; k < 600; k++) {
      store.applyEvent(metricEvent(k + 1, 100 * (k + 1), { latency_ms: 10 + (k % 7) }));
    }
    expect(store.charts.latency_ms.count()).toBe(600);
    expect(store.metricEventsSeen).toBe(600);
  });

  it("duplicate stream deliveries do not duplicate chart points", () => {
    const store = new ViewStore();
    const e = metricEvent(1, 100, { latency_ms: 10 });
    store.applyEvent(e);
    store.applyEvent(e);
    expect(store.charts.latency_ms.count()).toBe(1);
  });

  it("banner feed preserves arrival order and drops cleared alerts", () => {
    const store = new ViewStore();
    store.applyEvent(alertEvent(1, "a-pred", "predicted_breach"));
    store.applyEvent(alertEvent(2, "a-obs", "observed_breach"));
    expect(store.banners().map((a) => a.kind)).toEqual(["predicted_breach", "observed_breach"]);
    store.applyEvent(alertEvent(3, "a-pred", "predicted_breach", true));
    expect(store.banners().map((a) => a.kind)).toEqual(["observed_breach"]);
  });

  it("recommendation cards accumulate", () => {
    const store = new ViewStore();
    store.applyEvent({
      id: 1,
      event: "recommendation",
      data: { kind: "relocate_service", detail: "move it", triggering_alerts: [] },
    } as StreamEvent);
    expect(store.recommendations).toHaveLength(1);
  });
});
