// Browser wiring: one run, one WebSocket, panels re-rendered from the store.
// Optimistic UI exists only for form enable/disable; market data always
// comes from the server.

import { ApiClient } from "./api.js";
import { EventStream } from "./stream.js";
import { RunStore } from "./store.js";
import { cents } from "./types.js";

const $ = (id: string): HTMLElement => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
};

let api: ApiClient;
let store: RunStore | null = null;
let stream: EventStream | null = null;
let pollTimer: number | null = null;

function render(): void {
  if (!store) return;
  const v = store.view;

  $("phase").textContent = v.phaseLabel;
  $("run-state").textContent = `${v.scenario} · ${v.state} · frame ${v.frame}`;
  $("countdown").textContent =
    v.countdownS === null ? "—" : `${v.countdownS.toFixed(1)}s`;
  $("stream-status").textContent = v.streamStatus;

  const market = v.market;
  if (market) {
    $("last-price").textContent = cents(market.last_price_cents);
    $("settle-price").textContent = cents(market.settlement_price_cents);
    const bid = market.book.best_bid;
    const ask = market.book.best_ask;
    $("ladder").innerHTML =
      `<tr><td>ask</td><td>${ask ? cents(ask.price_cents) : "—"}</td>` +
      `<td>${ask ? ask.volume : ""}</td></tr>` +
      `<tr><td>bid</td><td>${bid ? cents(bid.price_cents) : "—"}</td>` +
      `<td>${bid ? bid.volume : ""}</td></tr>`;
  }

  const form = $("order-form") as HTMLFormElement;
  for (const el of Array.from(form.elements)) {
    (el as HTMLInputElement).disabled = !v.ordersEnabled;
  }

  drawChart();

  $("own-orders").innerHTML = v.ownOrders
    .map((o) => `<li>${o.order_id} ${o.side} ${o.volume}@${cents(o.price_cents)} — ` +
      `${o.status}${o.filled ? ` (filled ${o.filled})` : ""}</li>`)
    .join("");

  $("accounts").innerHTML = Object.values(v.accounts)
    .map((a) => `<li>${a.agent}: cash ${cents(a.cash_cents)}, pos ${a.position}, ` +
      `P&L ${cents(a.realized_pnl_cents)}${a.liquidated ? " · LIQUIDATED" : ""}</li>`)
    .join("");

  $("agent-index").innerHTML = Object.entries(v.behaviourIndex)
    .map(([agent, value]) => `<li>${agent}: ${value.toFixed(3)}</li>`)
    .join("");

  $("event-feed").innerHTML = v.feed
    .map((f) => `<li class="${f.status}">[frame ${f.frame}] ${f.text} ` +
      `<em>${f.status}${f.seq !== null ? ` · seq ${f.seq}` : ""}</em>` +
      `${f.targets !== "all" ? " · targeted" : ""}</li>`)
    .join("");
}

function drawChart(): void {
  if (!store) return;
  const canvas = $("chart") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const points = [...store.view.prices, ...store.view.settlements]
    .sort((a, b) => a.seq - b.seq);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (points.length < 2) return;
  const lo = Math.min(...points.map((p) => p.price_cents));
  const hi = Math.max(...points.map((p) => p.price_cents));
  const span = Math.max(hi - lo, 1);
  const x = (i: number) => (i / (points.length - 1)) * (canvas.width - 10) + 5;
  const y = (p: number) => canvas.height - 5 - ((p - lo) / span) * (canvas.height - 10);
  ctx.beginPath();
  points.forEach((p, i) => (i === 0 ? ctx.moveTo(x(i), y(p.price_cents))
                                     : ctx.lineTo(x(i), y(p.price_cents))));
  ctx.strokeStyle = "#2563eb";
  ctx.stroke();
  for (const [i, p] of points.entries()) {
    if (p.kind === "settlement") {
      ctx.fillStyle = "#16a34a";
      ctx.fillRect(x(i) - 2, y(p.price_cents) - 2, 4, 4);
    }
  }
}

async function refreshFromApi(runId: string): Promise<void> {
  if (!store) return;
  const state = await api.state(runId);
  if (state.ok && state.data) store.applyState(state.data);
  const accounts = await api.accounts(runId);
  if (accounts.ok && accounts.data) store.applyAccounts(accounts.data);
  const metrics = await api.metrics(runId);
  if (metrics.ok && metrics.data) store.applyMetrics(metrics.data);
  render();
}

async function connect(): Promise<void> {
  const base = (($("base-url") as HTMLInputElement).value || "").replace(/\/$/, "");
  const runId = ($("run-id") as HTMLInputElement).value.trim();
  const agent = ($("agent-id") as HTMLInputElement).value.trim() || null;
  api = new ApiClient(base);

  const state = await api.state(runId);
  if (!state.ok || !state.data) {
    $("banner").textContent = `cannot connect: ${state.error ?? "unknown run"}`;
    return;
  }
  $("banner").textContent = "";
  stream?.close();
  if (pollTimer !== null) clearInterval(pollTimer);

  store = new RunStore(runId, agent);
  store.applyState(state.data);

  const wsBase = base.replace(/^http/, "ws");
  stream = new EventStream(`${wsBase}/runs/${runId}/stream`, {
    onEvent: (event) => {
      store?.applyEvent(event);
      render();
    },
    onStatus: (status) => {
      store?.streamStatus(status);
      render();
    },
  });
  stream.connect(0);
  pollTimer = window.setInterval(() => void refreshFromApi(runId), 500);
  render();
}

function wireForms(): void {
  $("connect-form").addEventListener("submit", (e) => {
    e.preventDefault();
    void connect();
  });

  $("order-form").addEventListener("submit", async (e) => {
    e.preventDefault();
    if (!store) return;
    const side = ($("order-side") as HTMLSelectElement).value as "buy" | "sell";
    const price = Number(($("order-price") as HTMLInputElement).value);
    const volume = Number(($("order-volume") as HTMLInputElement).value);
    const agent = ($("agent-id") as HTMLInputElement).value.trim();
    const result = await api.submitOrder(store.runId, { agent, side, price, volume });
    // rejection reasons come straight from the engine; show them untouched
    $("order-result").textContent = result.ok
      ? `accepted: ${result.data?.order_id}`
      : `rejected: ${result.error}`;
    render();
  });

  $("news-form").addEventListener("submit", async (e) => {
    e.preventDefault();
    if (!store) return;
    const text = ($("news-text") as HTMLInputElement).value;
    const frame = Number(($("news-frame") as HTMLInputElement).value);
    const targetsRaw = ($("news-targets") as HTMLInputElement).value.trim();
    const targets = targetsRaw === "" || targetsRaw === "all"
      ? ("all" as const)
      : targetsRaw.split(",").map((s) => s.trim());
    const result = await api.injectEvent(store.runId, { frame, text, targets });
    if (result.ok && result.data) {
      store.noteQueuedNews(text, result.data.delivery_frame, targets);
      $("news-result").textContent = `queued for frame ${result.data.delivery_frame}`;
    } else {
      $("news-result").textContent = `rejected: ${result.error}`;
    }
    render();
  });
}

document.addEventListener("DOMContentLoaded", wireForms);
