/** View-model store: the single place stream events and API snapshots land.
 *
 * Stage transitions are event-driven only — the store renders whatever
 * stage the gateway last announced, never an optimistic guess.  Chart
 * buffers are fed exclusively from stream metric events.
 */

import { RollingSeries } from "./charts.js";
import type {
  AlertPayload,
  CandidateCard,
  MetricIndication,
  MetricName,
  PlanPayload,
  RecommendationPayload,
  SessionSnapshot,
  StageChange,
  StreamEvent,
  TranscriptEntry,
} from "./types.js";
import { INTERACTIVE_STAGES, METRICS } from "./types.js";

export interface ChatLine {
  role: string;
  text: string;
}

export class ViewStore {
  sessionId: string | null = null;
  stage = "";
  chat: ChatLine[] = [];
  candidates: CandidateCard[] = [];
  chosenModelId: string | null = null;
  plan: PlanPayload | null = null;
  failure: string | null = null;
  alerts = new Map<string, AlertPayload>();
  alertOrder: string[] = [];
  recommendations: RecommendationPayload[] = [];
  charts: Record<MetricName, RollingSeries>;
  metricEventsSeen = 0;
  latestReport: Record<string, unknown> | null = null;
  listeners: Array<() => void> = [];

  constructor(chartWindowMs = 60_000) {
    this.charts = {
      latency_ms: new RollingSeries(chartWindowMs),
      throughput_mbps: new RollingSeries(chartWindowMs),
      loss_rate: new RollingSeries(chartWindowMs),
      jitter_ms: new RollingSeries(chartWindowMs),
    };
  }

  onChange(fn: () => void): void {
    this.listeners.push(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  get inputEnabled(): boolean {
    return this.sessionId !== null && INTERACTIVE_STAGES.has(this.stage);
  }

  /** Banner feed in arrival order: [kind, alert] pairs, uncleared first. */
  banners(): AlertPayload[] {
    return this.alertOrder.map((id) => this.alerts.get(id)!).filter((a) => !a.cleared);
  }

  applySnapshot(snapshot: SessionSnapshot): void {
    this.sessionId = snapshot.session_id;
    this.stage = snapshot.stage;
    this.candidates = snapshot.candidates;
    this.chosenModelId = snapshot.chosen_model?.model_id ?? null;
    this.plan = snapshot.plan;
    this.failure = snapshot.failure;
    this.chat = snapshot.transcript
      .filter((e: TranscriptEntry) => e.kind === "message")
      .map((e) => ({ role: e.role ?? "agent", text: e.text ?? "" }));
    this.notify();
  }

  appendChat(role: string, text: string): void {
    this.chat.push({ role, text });
    this.notify();
  }

  applyEvent(event: StreamEvent): void {
    switch (event.event) {
      case "stage": {
        const change = event.data as unknown as StageChange;
        if (this.sessionId === null || change.session_id === this.sessionId) {
          this.stage = change.to;
        }
        break;
      }
      case "metric": {
        const ind = event.data as unknown as MetricIndication;
        this.metricEventsSeen += 1;
        for (const name of METRICS) {
          const value = ind.metrics?.[name];
          if (typeof value === "number") {
            this.charts[name].append(ind.t_ms, value, event.id);
          }
        }
        break;
      }
      case "alert": {
        const alert = event.data as unknown as AlertPayload;
        if (!this.alerts.has(alert.alert_id)) this.alertOrder.push(alert.alert_id);
        this.alerts.set(alert.alert_id, alert);
        break;
      }
      case "recommendation": {
        this.recommendations.push(event.data as unknown as RecommendationPayload);
        break;
      }
      case "report": {
        this.latestReport = event.data ?? null;
        break;
      }
      default:
        return;
    }
    this.notify();
  }
}
