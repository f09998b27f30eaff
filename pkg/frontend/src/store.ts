// UiRunView: the console's entire rendered state.
//
// Everything in the view is a verbatim copy of an API payload or a stream
// event; the store never computes a market outcome. Each chart point keeps
// the seq of the event it came from, so any rendered number is traceable
// to a logged event id.

import type { AccountView, MarketView, RecordEvent, RunState, StateView } from "./types.js";

export interface PricePoint {
  seq: number; // record-log event id this number came from
  frame: number;
  turn: number | null;
  price_cents: number;
  kind: "deal" | "settlement";
  forced: boolean;
}

export interface FeedEntry {
  seq: number | null; // null while only queued locally
  frame: number;
  text: string;
  targets: "all" | string[];
  status: "queued" | "delivered";
}

export interface OwnOrder {
  seq: number;
  order_id: string;
  side: string;
  price_cents: number;
  volume: number;
  status: "resting" | "withdrawn" | "expired" | "filled";
  filled: number;
}

export interface UiRunView {
  runId: string;
  scenario: string;
  state: RunState | "unknown";
  phaseLabel: string; // "analysis" | "trading turn k" | "settlement" | run state
  frame: number;
  turn: number;
  countdownS: number | null;
  ordersEnabled: boolean;
  market: MarketView | null;
  prices: PricePoint[];
  settlements: PricePoint[];
  feed: FeedEntry[];
  ownOrders: OwnOrder[];
  accounts: Record<string, AccountView>;
  behaviourIndex: Record<string, number>;
  liquidations: { seq: number; frame: number; agent: string; proceeds_cents: number }[];
  lastEventSeq: number;
  streamStatus: string;
}

export class RunStore {
  readonly view: UiRunView;

  constructor(
    readonly runId: string,
    private readonly ownAgent: string | null = null,
  ) {
    this.view = {
      runId,
      scenario: "",
      state: "unknown",
      phaseLabel: "connecting",
      frame: 0,
      turn: 0,
      countdownS: null,
      ordersEnabled: false,
      market: null,
      prices: [],
      settlements: [],
      feed: [],
      ownOrders: [],
      accounts: {},
      behaviourIndex: {},
      liquidations: [],
      lastEventSeq: -1,
      streamStatus: "idle",
    };
  }

  applyState(state: StateView): void {
    const v = this.view;
    v.scenario = state.scenario;
    v.state = state.state;
    v.frame = state.frame;
    v.turn = state.turn;
    v.countdownS = state.window_ends_in_s;
    v.market = state.market;
    // phase gating: the server's word is the only thing that enables forms
    v.ordersEnabled = state.state === "running" && state.window_open;
    if (state.state === "running" || state.state === "paused") {
      if (state.phase === "trading") {
        v.phaseLabel = `trading turn ${state.turn}`;
      } else if (state.phase === "analysis" || state.phase === "settlement") {
        v.phaseLabel = state.phase;
      } else {
        v.phaseLabel = state.state;
      }
    } else {
      v.phaseLabel = state.state; // configuring / finished / halted review mode
    }
  }

  applyAccounts(accounts: Record<string, AccountView>): void {
    this.view.accounts = accounts;
  }

  applyMetrics(metrics: Record<string, any>): void {
    const index = metrics["behaviour_index"];
    if (index && index.per_agent) {
      this.view.behaviourIndex = index.per_agent;
    }
  }

  noteQueuedNews(text: string, frame: number, targets: "all" | string[] = "all"): void {
    this.view.feed.push({ seq: null, frame, text, targets, status: "queued" });
  }

  streamStatus(status: string): void {
    this.view.streamStatus = status;
  }

  /** Fold one record-log event into the view. Returns false on duplicates. */
  applyEvent(event: RecordEvent): boolean {
    if (event.seq <= this.view.lastEventSeq) return false;
    this.view.lastEventSeq = event.seq;
    const data = event.data;
    switch (event.type) {
      case "deal":
        this.view.prices.push({
          seq: event.seq,
          frame: event.frame ?? 0,
          turn: event.turn,
          price_cents: data["price_cents"],
          kind: "deal",
          forced: Boolean(data["forced_liquidation"]),
        });
        if (this.ownAgent && data["buy_agent"] === this.ownAgent) {
          this.markOwnFill(data["buy_order_id"], data["volume"]);
        }
        if (this.ownAgent && data["sell_agent"] === this.ownAgent) {
          this.markOwnFill(data["sell_order_id"], data["volume"]);
        }
        break;
      case "settlement":
        this.view.settlements.push({
          seq: event.seq,
          frame: event.frame ?? 0,
          turn: null,
          price_cents: data["price_cents"],
          kind: "settlement",
          forced: false,
        });
        break;
      case "news_event": {
        const pending = this.view.feed.find(
          (f) => f.status === "queued" && f.text === data["text"],
        );
        if (pending) {
          pending.status = "delivered";
          pending.seq = event.seq;
          pending.frame = event.frame ?? pending.frame;
        } else {
          this.view.feed.push({
            seq: event.seq,
            frame: event.frame ?? 0,
            text: data["text"],
            targets: data["targets"],
            status: "delivered",
          });
        }
        break;
      }
      case "order_accepted":
        if (this.ownAgent && data["agent"] === this.ownAgent) {
          this.view.ownOrders.push({
            seq: event.seq,
            order_id: data["order_id"],
            side: data["side"],
            price_cents: data["price_cents"],
            volume: data["volume"],
            status: "resting",
            filled: 0,
          });
        }
        break;
      case "withdrawal":
        this.setOwnStatus(data["order_id"],
          data["reason"] === "expired" ? "expired" : "withdrawn");
        break;
      case "liquidation":
        this.view.liquidations.push({
          seq: event.seq,
          frame: event.frame ?? 0,
          agent: data["agent"],
          proceeds_cents: data["proceeds_cents"],
        });
        break;
      default:
        break; // agent traces etc. are visible via the raw feed if needed
    }
    return true;
  }

  private markOwnFill(orderId: string, volume: number): void {
    const order = this.view.ownOrders.find((o) => o.order_id === orderId);
    if (!order) return;
    order.filled += volume;
    if (order.filled >= order.volume) order.status = "filled";
  }

  private setOwnStatus(orderId: string, status: OwnOrder["status"]): void {
    const order = this.view.ownOrders.find((o) => o.order_id === orderId);
    if (order && order.status === "resting") order.status = status;
  }
}
