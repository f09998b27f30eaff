// Payload shapes of the futuresim HTTP API and record-log events.
// The console renders these verbatim; it never derives market values itself.

export interface RecordEvent {
  seq: number;
  type: string;
  frame: number | null;
  turn: number | null;
  data: Record<string, any>;
}

export interface BookLevel {
  price_cents: number;
  volume: number;
}

export interface MarketView {
  frame: number;
  turn: number;
  last_price_cents: number;
  settlement_price_cents: number;
  open_interest: number;
  book: {
    best_bid: BookLevel | null;
    best_ask: BookLevel | null;
    bid_count: number;
    ask_count: number;
  };
  major_positions: Record<string, number>;
}

export type RunState = "configuring" | "running" | "paused" | "halted" | "finished";

export interface StateView {
  run_id: string;
  scenario: string;
  state: RunState;
  frame: number;
  turn: number;
  phase: string;
  created_at: string;
  record_log_path: string | null;
  last_seq: number;
  window_open: boolean;
  window_ends_in_s: number | null;
  market: MarketView;
}

export interface AccountView {
  agent: string;
  cash_cents: number;
  margin_posted_cents: number;
  reserved_cents: number;
  available_cents: number;
  position: number;
  realized_pnl_cents: number;
  unrealized_cents: number;
  liquidated: boolean;
}

export interface OrderAck {
  order_id: string;
  frame: number;
  turn: number;
}

export interface ApiResult<T> {
  ok: boolean;
  status: number;
  data?: T;
  error?: string;
}

export function cents(value: number): string {
  return (value / 100).toFixed(2);
}
