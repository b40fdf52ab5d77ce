import { describe, expect, it } from "vitest";

import { ApiError, GatewayClient } from "../src/api.js";

interface Recorded {
  url: string;
  method: string;
  body: unknown;
}

function fakeFetch(status: number, payload: unknown, log: Recorded[]): typeof fetch {
  return (async (url: RequestInfo | URL, init?: RequestInit) => {
    log.push({
      url: String(url),
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    });
    return new Response(JSON.stringify(payload), { status });
  }) as typeof fetch;
}

describe("GatewayClient", () => {
  it("hits the documented endpoints with the documented bodies", async () => {
    const log: Recorded[] = [];
    const client = new GatewayClient("http://gw", fakeFetch(200, { ok: true }, log));
    await client.sendMessage("session-0001", "hello");
    await client.chooseModel("session-0001", 3);
    await client.confirmDeploy("session-0001", true, "edge-regional-1");
    await client.advance(1000);
    expect(log).toEqual([
      { url: "http://gw/sessions/session-0001/messages", method: "POST", body: { text: "hello" } },
      { url: "http://gw/sessions/session-0001/model-choice", method: "POST", body: { index: 3 } },
      {
        url: "http://gw/sessions/session-0001/deploy-confirm",
        method: "POST",
        body: { accept: true, node_id: "edge-regional-1" },
      },
      { url: "http://gw/sim/advance", method: "POST", body: { ms: 1000 } },
    ]);
  });

  it("maps error envelopes to ApiError", async () => {
    const client = new GatewayClient(
      "http://gw",
      fakeFetch(409, { error: "OutOfTurn", detail: "session is in stage DEPLOY" }, []),
    );
    const err = await client.sendMessage("s", "x").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.errorName).toBe("OutOfTurn");
  });
});
