"""Rebuild engine state from a persisted record log, and export the
interaction graph.

Replay re-derives every account from first principles (orders, deals,
marks, margins, shortfalls) and cross-checks the per-frame snapshots
embedded in settlement events; any divergence means the log is corrupt.
A truncated or damaged log replays up to the last valid line and reports
the position.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .engine import margin_cents
from .records import ReadResult, read_record_log


class ReplayError(ValueError):
    pass


@dataclass
class ReplayAccount:
    agent: str
    cash_cents: int
    position: int = 0
    basis_cents: int = 0
    margin_posted_cents: int = 0
    reserved_cents: int = 0
    realized_pnl_cents: int = 0
    fees_accrued_cents: int = 0
    is_clearing: bool = False

    def snapshot(self) -> dict:
        return {
            "cash_cents": self.cash_cents,
            "position": self.position,
            "basis_cents": self.basis_cents,
            "margin_posted_cents": self.margin_posted_cents,
            "realized_pnl_cents": self.realized_pnl_cents,
        }


@dataclass
class ReplayState:
    accounts: dict[str, ReplayAccount] = field(default_factory=dict)
    multiplier: int = 1
    initial_margin: Fraction = Fraction(1, 8)
    fee_per_contract_cents: int = 0
    last_settlement_cents: int = 0
    last_price_cents: int = 0
    frames_settled: int = 0
    orders: dict[str, dict] = field(default_factory=dict)
    pending_shortfalls: list[dict] = field(default_factory=list)


@dataclass
class ReplayResult:
    state: ReplayState
    events_applied: int
    truncated: bool = False
    bad_line: int | None = None
    error: str | None = None

    def final_accounts(self) -> dict[str, dict]:
        return {aid: acct.snapshot() for aid, acct in sorted(self.state.accounts.items())}


def _apply(state: ReplayState, event: dict) -> None:
    kind, data = event["type"], event["data"]
    if kind == "run_start":
        eng = data["engine"]
        state.multiplier = eng["multiplier"]
        state.initial_margin = Fraction(eng["initial_margin"])
        state.fee_per_contract_cents = eng.get("fee_per_contract_cents", 0)
        state.last_settlement_cents = eng["initial_price_cents"]
        state.last_price_cents = eng["initial_price_cents"]
        for acct in data["accounts"]:
            state.accounts[acct["agent"]] = ReplayAccount(
                agent=acct["agent"], cash_cents=acct["cash_cents"],
                position=acct["position"],
                basis_cents=acct["position"] * eng["initial_price_cents"] * eng["multiplier"],
                is_clearing=acct["is_clearing"],
            )
    elif kind == "order_accepted":
        per = margin_cents(data["price_cents"], 1, state.multiplier, state.initial_margin)
        state.orders[data["order_id"]] = {
            "agent": data["agent"], "residual": data["volume"], "reserve_per": per,
        }
        state.accounts[data["agent"]].reserved_cents += per * data["volume"]
    elif kind == "deal":
        for agent, signed in ((data["buy_agent"], data["volume"]),
                              (data["sell_agent"], -data["volume"])):
            acct = state.accounts[agent]
            acct.position += signed
            acct.basis_cents += signed * data["price_cents"] * state.multiplier
            if state.fee_per_contract_cents and not acct.is_clearing:
                acct.fees_accrued_cents += state.fee_per_contract_cents * data["volume"]
        for oid in (data["buy_order_id"], data["sell_order_id"]):
            order = state.orders.get(oid)
            if order is None:
                continue  # synthetic liquidation order, holds no reservation
            acct = state.accounts[order["agent"]]
            release = order["reserve_per"] * data["volume"]
            acct.reserved_cents -= release
            acct.margin_posted_cents += release
            order["residual"] -= data["volume"]
        state.last_price_cents = data["price_cents"]
    elif kind == "withdrawal":
        order = state.orders.pop(data["order_id"])
        state.accounts[order["agent"]].reserved_cents -= \
            order["reserve_per"] * data["residual"]
    elif kind == "shortfall":
        state.pending_shortfalls.append(data)
    elif kind == "settlement":
        price = data["price_cents"]
        for acct in state.accounts.values():
            target = acct.position * price * state.multiplier
            delta = target - acct.basis_cents
            acct.cash_cents += delta
            acct.realized_pnl_cents += delta
            acct.basis_cents = target
        fee_total = 0
        for acct in state.accounts.values():
            if acct.fees_accrued_cents:
                acct.cash_cents -= acct.fees_accrued_cents
                acct.realized_pnl_cents -= acct.fees_accrued_cents
                fee_total += acct.fees_accrued_cents
                acct.fees_accrued_cents = 0
        if fee_total:
            for acct in state.accounts.values():
                if acct.is_clearing:
                    acct.cash_cents += fee_total
                    acct.realized_pnl_cents += fee_total
        for shortfall in state.pending_shortfalls:
            state.accounts[shortfall["agent"]].cash_cents += shortfall["amount_cents"]
        state.pending_shortfalls = []
        for acct in state.accounts.values():
            if acct.is_clearing:
                acct.margin_posted_cents = 0
            else:
                req = margin_cents(price, abs(acct.position), state.multiplier,
                                   state.initial_margin)
                acct.margin_posted_cents = min(req, max(acct.cash_cents, 0))
        state.last_settlement_cents = price
        state.frames_settled += 1
        for aid, want in data["accounts"].items():
            got = state.accounts[aid].snapshot()
            for key in ("cash_cents", "position", "margin_posted_cents"):
                if got[key] != want[key]:
                    raise ReplayError(
                        f"frame {event['frame']}: replayed {key} for {aid!r} is "
                        f"{got[key]}, log says {want[key]}")


def replay_events(events: list[dict]) -> ReplayState:
    state = ReplayState()
    for event in events:
        _apply(state, event)
    return state


def persist_and_replay(path: str) -> ReplayResult:
    read: ReadResult = read_record_log(path)
    state = ReplayState()
    applied = 0
    for event in read.events:
        try:
            _apply(state, event)
        except ReplayError:
            raise
        except Exception as exc:
            return ReplayResult(state, applied, truncated=True,
                                bad_line=applied + 1,
                                error=f"{type(exc).__name__}: {exc}")
        applied += 1
    return ReplayResult(state, applied, truncated=read.truncated,
                        bad_line=read.bad_line, error=read.error)


# ------------------------------------------------------------------- graph


def interaction_graph(events: list[dict]) -> tuple[list[tuple], list[tuple]]:
    """Nodes and edges of the run's interaction graph.

    Nodes: (id, kind) for agents, orders, deals and news events.  Edges:
    (src, dst, kind) with kinds submitted (agent->order), matched
    (order->deal; agent->deal for synthetic liquidation crossings) and
    observed (agent->news event).
    """
    nodes: list[tuple] = []
    edges: list[tuple] = []
    agents: list[str] = []
    order_ids: set[str] = set()
    for event in events:
        kind, data = event["type"], event["data"]
        if kind == "run_start":
            for acct in data["accounts"]:
                if not acct["is_clearing"]:
                    agents.append(acct["agent"])
                    nodes.append((acct["agent"], "agent"))
        elif kind == "order_accepted":
            nodes.append((data["order_id"], "order"))
            order_ids.add(data["order_id"])
            edges.append((data["agent"], data["order_id"], "submitted"))
        elif kind == "deal":
            nodes.append((data["deal_id"], "deal"))
            for oid, agent in ((data["buy_order_id"], data["buy_agent"]),
                               (data["sell_order_id"], data["sell_agent"])):
                if oid in order_ids:
                    edges.append((oid, data["deal_id"], "matched"))
                else:
                    edges.append((agent, data["deal_id"], "matched"))
        elif kind == "news_event":
            nodes.append((data["event_id"], "news"))
            targets = data["targets"]
            for agent in (agents if targets == "all" else targets):
                edges.append((agent, data["event_id"], "observed"))
    return nodes, edges


def export_graph(events: list[dict], path: str) -> None:
    """Write the interaction graph as a tab-separated node/edge list."""
    nodes, edges = interaction_graph(events)
    with open(path, "w", encoding="utf-8") as fh:
        for node_id, kind in nodes:
            fh.write(f"node\t{node_id}\t{kind}\n")
        for src, dst, kind in edges:
            fh.write(f"edge\t{src}\t{dst}\t{kind}\n")
