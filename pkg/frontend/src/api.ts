/** Thin typed client for the gateway endpoints the console is allowed to use. */

import type { PlanPayload, SessionSnapshot } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorName: string,
    detail: string,
  ) {
    super(detail);
  }
}

export class GatewayClient {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body !== undefined ? { "Content-Type": "application/json" } : undefined,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const text = await resp.text();
    const parsed = text ? JSON.parse(text) : {};
    if (!resp.ok) {
      throw new ApiError(resp.status, parsed.error ?? "HttpError", parsed.detail ?? text);
    }
    return parsed as T;
  }

  createSession(description: string): Promise<{ session_id: string; stage: string; reply: string }> {
    return this.request("POST", "/sessions", { description });
  }

  sendMessage(sessionId: string, text: string): Promise<{ stage: string; reply: string }> {
    return this.request("POST", `/sessions/${sessionId}/messages`, { text });
  }

  getSession(sessionId: string): Promise<SessionSnapshot> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  chooseModel(sessionId: string, index: number): Promise<{ stage: string; plan: PlanPayload }> {
    return this.request("POST", `/sessions/${sessionId}/model-choice`, { index });
  }

  confirmDeploy(
    sessionId: string,
    accept: boolean,
    nodeId?: string,
  ): Promise<{ stage: string; plan: PlanPayload | null }> {
    return this.request("POST", `/sessions/${sessionId}/deploy-confirm`, {
      accept,
      node_id: nodeId ?? null,
    });
  }

  simTime(): Promise<{ t_ms: number }> {
    return this.request("GET", "/sim/time");
  }

  advance(ms: number): Promise<{ t_ms: number }> {
    return this.request("POST", "/sim/advance", { ms });
  }
}
