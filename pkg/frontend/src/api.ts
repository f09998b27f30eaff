// Thin REST client over the run service. Non-2xx responses surface the
// server's error text untouched so forms can show engine reasons verbatim.

import type { AccountView, ApiResult, OrderAck, StateView } from "./types.js";

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<ApiResult<T>> {
    const resp = await this.fetchImpl(`${this.base}${path}`, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let payload: any = null;
    try {
      payload = await resp.json();
    } catch {
      payload = null;
    }
    if (!resp.ok) {
      return { ok: false, status: resp.status, error: payload?.error ?? resp.statusText };
    }
    return { ok: true, status: resp.status, data: payload as T };
  }

  createRun(body: Record<string, unknown>): Promise<ApiResult<StateView>> {
    return this.request("POST", "/runs", body);
  }

  start(runId: string): Promise<ApiResult<StateView>> {
    return this.request("POST", `/runs/${runId}/start`);
  }

  pause(runId: string): Promise<ApiResult<StateView>> {
    return this.request("POST", `/runs/${runId}/pause`);
  }

  resume(runId: string): Promise<ApiResult<StateView>> {
    return this.request("POST", `/runs/${runId}/resume`);
  }

  halt(runId: string): Promise<ApiResult<StateView>> {
    return this.request("POST", `/runs/${runId}/halt`);
  }

  state(runId: string): Promise<ApiResult<StateView>> {
    return this.request("GET", `/runs/${runId}/state`);
  }

  accounts(runId: string): Promise<ApiResult<Record<string, AccountView>>> {
    return this.request("GET", `/runs/${runId}/accounts`);
  }

  metrics(runId: string): Promise<ApiResult<Record<string, any>>> {
    return this.request("GET", `/runs/${runId}/metrics`);
  }

  submitOrder(runId: string, order: { agent: string; side: "buy" | "sell"; price: number; volume: number }): Promise<ApiResult<OrderAck>> {
    return this.request("POST", `/runs/${runId}/orders`, order);
  }

  withdraw(runId: string, agent: string, orderIds: string[]): Promise<ApiResult<{ withdrawn: number }>> {
    return this.request("POST", `/runs/${runId}/withdrawals`, { agent, order_ids: orderIds });
  }

  injectEvent(
    runId: string,
    event: { frame: number; text: string; targets?: "all" | string[]; tags?: string[] },
  ): Promise<ApiResult<{ queued: boolean; delivery_frame: number }>> {
    return this.request("POST", `/runs/${runId}/events`, event);
  }
}
