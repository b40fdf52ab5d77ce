/** Wire types mirrored from the gateway's JSON payloads. */

export interface StreamEvent {
  id: number;
  event: "metric" | "alert" | "report" | "recommendation" | "stage" | "heartbeat";
  data?: Record<string, unknown>;
}

export interface StageChange {
  session_id: string;
  from: string;
  to: string;
}

export interface MetricIndication {
  sub_id: string;
  xapp_id: string | null;
  t_ms: number;
  period_ms: number;
  flow_ids: string[];
  sample_count: number;
  metrics: Record<string, number | boolean | null>;
}

export interface AlertPayload {
  alert_id: string;
  xapp_id: string;
  metric: string;
  kind: "observed_breach" | "predicted_breach" | "anomaly" | "availability_loss";
  value: number;
  threshold: number;
  t_ms: number;
  cleared: boolean;
  cleared_t_ms: number | null;
}

export interface RecommendationPayload {
  kind: "relocate_service" | "adjust_policy" | "adjust_expectations";
  detail: string;
  triggering_alerts: string[];
}

export interface CandidateCard {
  model_id: string;
  downloads: number;
  likes: number;
  size_mb: number;
  gpu_required: boolean;
  servable: boolean | null;
  servability_reasons: string[];
}

export interface PlanPayload {
  model_id: string;
  node_id: string;
  resources: { cpu: number; mem_mb: number; gpu: number };
  deploy_at: number;
  score: number;
  scores_by_node: Record<string, number>;
}

export interface TranscriptEntry {
  seq: number;
  kind: "message" | "tool_call" | "tool_result";
  role?: string;
  text?: string;
  name?: string;
}

export interface SessionSnapshot {
  session_id: string;
  stage: string;
  profile: Record<string, unknown>;
  candidates: CandidateCard[];
  chosen_model: CandidateCard | null;
  plan: PlanPayload | null;
  instance_id: string | null;
  service_endpoint: { host: string; port: number; protocol: string } | null;
  xapp_ids: string[];
  failure: string | null;
  transcript: TranscriptEntry[];
}

export const METRICS = ["latency_ms", "throughput_mbps", "loss_rate", "jitter_ms"] as const;
export type MetricName = (typeof METRICS)[number];

export const INTERACTIVE_STAGES = new Set(["INTENT", "AWAIT_MODEL_CHOICE", "AWAIT_DEPLOY_CONFIRM"]);
