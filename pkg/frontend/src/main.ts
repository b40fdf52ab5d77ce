/** DOM wiring for the operator console.
 *
 * Everything the page mutates goes through the documented gateway
 * endpoints; view state advances only on stream events (no optimistic
 * stage changes).
 */

import { ApiError, GatewayClient } from "./api.js";
import { drawSeries } from "./charts.js";
import { ViewStore } from "./state.js";
import { StreamClient } from "./stream.js";
import { METRICS, type MetricName } from "./types.js";

const api = new GatewayClient("");
const store = new ViewStore();

const el = (id: string) => document.getElementById(id)!;
const chatLog = () => el("chat-log");
const input = () => el("chat-input") as HTMLInputElement;
const notice = () => el("notice");

let latencyThreshold: number | null = null;

function setNotice(text: string): void {
  notice().textContent = text;
  notice().classList.toggle("hidden", !text);
}

async function startSession(): Promise<void> {
  const description = input().value.trim();
  if (!description) return;
  input().value = "";
  const created = await api.createSession(description);
  store.applySnapshot(await api.getSession(created.session_id));
}

async function sendChat(): Promise<void> {
  const text = input().value.trim();
  if (!text || !store.sessionId) return;
  input().value = "";
  store.appendChat("user", text);
  try {
    const reply = await api.sendMessage(store.sessionId, text);
    store.appendChat("agent", reply.reply);
    store.applySnapshot(await api.getSession(store.sessionId));
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      setNotice("agent is working; input re-enables when it needs you");
    } else {
      setNotice(String(err));
    }
  }
}

async function selectModel(index: number): Promise<void> {
  if (!store.sessionId) return;
  try {
    await api.chooseModel(store.sessionId, index);
    store.applySnapshot(await api.getSession(store.sessionId));
  } catch (err) {
    setNotice(err instanceof ApiError ? `${err.errorName}: ${err.message}` : String(err));
  }
}

async function confirmPlan(accept: boolean): Promise<void> {
  if (!store.sessionId) return;
  try {
    await api.confirmDeploy(store.sessionId, accept);
    store.applySnapshot(await api.getSession(store.sessionId));
  } catch (err) {
    setNotice(err instanceof ApiError ? `${err.errorName}: ${err.message}` : String(err));
  }
}

function renderChat(): void {
  chatLog().innerHTML = "";
  for (const line of store.chat) {
    const div = document.createElement("div");
    div.className = `chat-line ${line.role}`;
    div.textContent = `${line.role === "user" ? "you" : "agent"}: ${line.text}`;
    chatLog().appendChild(div);
  }
  chatLog().scrollTop = chatLog().scrollHeight;
  input().disabled = !store.inputEnabled && store.sessionId !== null;
  el("stage-badge").textContent = store.stage || "no session";
}

function renderCandidates(): void {
  const table = el("candidates");
  table.innerHTML = "";
  if (!store.candidates.length) {
    table.textContent = "no candidates yet";
    return;
  }
  store.candidates.forEach((card, i) => {
    const row = document.createElement("div");
    row.className = "candidate-row";
    if (card.model_id === store.chosenModelId) row.classList.add("chosen");
    row.innerHTML =
      `<span class="rank">[${i}]</span> <span class="mid">${card.model_id}</span>` +
      ` <span>${card.downloads.toLocaleString()} dl</span> <span>${card.size_mb} MB</span>` +
      (card.model_id === store.chosenModelId ? ` <span class="badge">chosen</span>` : "");
    if (store.stage === "AWAIT_MODEL_CHOICE") {
      row.classList.add("clickable");
      row.addEventListener("click", () => void selectModel(i));
    }
    table.appendChild(row);
  });
}

function renderPlan(): void {
  const card = el("plan-card");
  if (!store.plan) {
    card.classList.add("hidden");
    return;
  }
  card.classList.remove("hidden");
  const plan = store.plan;
  el("plan-text").textContent =
    `${plan.model_id} on ${plan.node_id} ` +
    `(cpu ${plan.resources.cpu}, mem ${plan.resources.mem_mb} MB, score ${plan.score.toFixed(4)})`;
  const actionable = store.stage === "AWAIT_DEPLOY_CONFIRM";
  (el("plan-accept") as HTMLButtonElement).disabled = !actionable;
  (el("plan-reject") as HTMLButtonElement).disabled = !actionable;
}

function renderAlerts(): void {
  const feed = el("alert-feed");
  feed.innerHTML = "";
  for (const alert of store.banners()) {
    const banner = document.createElement("div");
    banner.className = `banner ${alert.kind}`;
    const label =
      alert.kind === "predicted_breach"
        ? "predicted breach"
        : alert.kind === "observed_breach"
          ? "threshold breached"
          : alert.kind.replace("_", " ");
    banner.textContent = `${label}: ${alert.metric} ${alert.value.toFixed(1)} vs ${alert.threshold} (t=${alert.t_ms} ms)`;
    feed.appendChild(banner);
    if (alert.metric === "latency_ms") latencyThreshold = alert.threshold;
  }
}

function renderRecommendations(): void {
  const panel = el("recommendations");
  panel.innerHTML = "";
  for (const rec of store.recommendations.slice(-5)) {
    const card = document.createElement("div");
    card.className = "rec-card clickable";
    card.textContent = `${rec.kind}: ${rec.detail}`;
    card.addEventListener("click", () => {
      input().value = `Please apply: ${rec.kind} (${rec.detail})`;
      input().focus();
    });
    panel.appendChild(card);
  }
}

function renderCharts(): void {
  for (const name of METRICS) {
    const canvas = el(`chart-${name}`) as HTMLCanvasElement;
    drawSeries(canvas, store.charts[name as MetricName], {
      threshold: name === "latency_ms" ? latencyThreshold : null,
    });
    const latest = store.charts[name as MetricName].latest();
    el(`value-${name}`).textContent = latest ? latest.v.toFixed(2) : "-";
  }
}

function renderAll(): void {
  renderChat();
  renderCandidates();
  renderPlan();
  renderAlerts();
  renderRecommendations();
  renderCharts();
}

function main(): void {
  store.onChange(renderAll);

  el("chat-send").addEventListener("click", () => {
    void (store.sessionId ? sendChat() : startSession());
  });
  input().addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") void (store.sessionId ? sendChat() : startSession());
  });
  el("plan-accept").addEventListener("click", () => void confirmPlan(true));
  el("plan-reject").addEventListener("click", () => void confirmPlan(false));
  el("advance-button").addEventListener("click", () => void api.advance(1000));

  const stream = new StreamClient({
    baseUrl: "",
    onEvent: (event) => store.applyEvent(event),
    onState: (state) => {
      el("conn-badge").textContent = state;
      el("conn-badge").className = `badge conn-${state}`;
    },
  });
  void stream.run();
  renderAll();
}

main();
