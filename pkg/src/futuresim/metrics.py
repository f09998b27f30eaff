"""Run metrics computed purely from a record log.

Everything here is a function of the event list alone, so recomputing from
a persisted log gives exactly the in-run values: return-rate MSE, trading
behaviour index, per-round order price ranges, completed contracts,
cumulative forced-liquidation value, total growth rate, and CSV exports.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction

from .engine import ceil_div


class MetricsError(ValueError):
    pass


@dataclass
class MetricSeries:
    metric_id: str
    units: str
    points: list[dict] = field(default_factory=list)

    def validate(self) -> None:
        rounds = [p["round"] for p in self.points]
        if rounds != list(range(min(rounds, default=1), min(rounds, default=1) + len(rounds))):
            raise MetricsError(f"{self.metric_id}: rounds not contiguous: {rounds}")
        for p in self.points:
            if p.get("low") is not None and not p["low"] <= p["avg"] <= p["high"]:
                raise MetricsError(f"{self.metric_id}: low<=avg<=high violated at {p}")


# ------------------------------------------------------------------ helpers


def _events(records) -> list[dict]:
    return records if isinstance(records, list) else records.events


def run_start(events: list[dict]) -> dict:
    for e in events:
        if e["type"] == "run_start":
            return e["data"]
    raise MetricsError("log has no run_start event")


def frames_settled(events: list[dict]) -> list[int]:
    return [e["frame"] for e in events if e["type"] == "settlement"]


def settlement_prices(events: list[dict]) -> dict[int, int]:
    return {e["frame"]: e["data"]["price_cents"]
            for e in events if e["type"] == "settlement"}


def frame_start_accounts(events: list[dict], frame: int) -> dict[str, dict]:
    """Account state at the start of a frame: initial accounts for frame 1,
    else the previous frame's settlement snapshot."""
    start = run_start(events)
    if frame <= 1:
        return {
            a["agent"]: {"cash_cents": a["cash_cents"],
                         "margin_posted_cents": 0,
                         "position": a["position"]}
            for a in start["accounts"]
        }
    for e in events:
        if e["type"] == "settlement" and e["frame"] == frame - 1:
            return {aid: dict(acct) for aid, acct in e["data"]["accounts"].items()}
    raise MetricsError(f"no settlement found for frame {frame - 1}")


# ------------------------------------------------------------- return-rate MSE


def return_rate_mse(s0: float, actual: list[float], predicted: list[float]) -> float:
    """Mean squared error between actual and predicted return rates, both
    measured against the reference price s0.

    Accumulated in exact rational arithmetic and rounded once at the end, so
    decimal-friendly inputs give the decimal-exact answer."""
    if s0 <= 0:
        raise MetricsError("reference price s0 must be positive")
    if len(actual) != len(predicted):
        raise MetricsError(f"length mismatch: {len(actual)} vs {len(predicted)}")
    if not actual:
        raise MetricsError("need at least one point")
    ref = Fraction(s0)
    total = Fraction(0)
    for s, s_hat in zip(actual, predicted):
        diff = (Fraction(s) - Fraction(s_hat)) / ref
        total += diff * diff
    return float(total / len(actual))


# ------------------------------------------------------- trading behaviour index


def trading_behaviour_index(records, agent_ids: list[str], frame: int) -> dict:
    """Executed contract volume over max affordable volume at the agent's
    volume-weighted average order price, using the frame-start account.

    Returns {"value": group mean, "per_agent": {agent: {value, flagged}}}.
    """
    events = _events(records)
    start = run_start(events)
    mult = start["engine"]["multiplier"]
    init_frac = Fraction(start["engine"]["initial_margin"])
    starts = frame_start_accounts(events, frame)

    settled = set(frames_settled(events))
    if frame not in settled:
        raise MetricsError(f"frame {frame} not settled in this log")

    forced_of_defaulter: set[tuple[str, str]] = set()
    for e in events:
        if e["type"] == "liquidation":
            for deal_id in e["data"]["deal_ids"]:
                forced_of_defaulter.add((deal_id, e["data"]["agent"]))

    per_agent: dict[str, dict] = {}
    values = []
    for aid in agent_ids:
        if aid not in starts:
            raise MetricsError(f"unknown agent {aid!r}")
        order_value = order_volume = 0
        executed = 0
        for e in events:
            if e["frame"] != frame:
                continue
            if e["type"] == "order_accepted" and e["data"]["agent"] == aid:
                order_value += e["data"]["price_cents"] * e["data"]["volume"]
                order_volume += e["data"]["volume"]
            elif e["type"] == "deal":
                d = e["data"]
                if (d["deal_id"], aid) in forced_of_defaulter:
                    continue  # not the agent's own trading decision
                if aid in (d["buy_agent"], d["sell_agent"]):
                    executed += d["volume"]
        flagged = False
        if order_volume == 0:
            value = 0.0
            flagged = executed > 0
        else:
            vwap = Fraction(order_value, order_volume)
            per_contract = ceil_div((vwap * mult * init_frac).numerator,
                                    (vwap * mult * init_frac).denominator)
            acct = starts[aid]
            available = acct["cash_cents"] - acct.get("margin_posted_cents", 0)
            affordable = max(0, available // per_contract)
            if affordable == 0:
                value, flagged = 0.0, True
            else:
                value = min(executed / affordable, 1.0)
        per_agent[aid] = {"value": value, "flagged": flagged}
        values.append(value)
    return {"value": sum(values) / len(values) if values else 0.0, "per_agent": per_agent}


def behaviour_index_series(records, agent_ids: list[str]) -> MetricSeries:
    events = _events(records)
    series = MetricSeries("behaviour_index", units="fraction")
    for frame in frames_settled(events):
        value = trading_behaviour_index(events, agent_ids, frame)["value"]
        series.points.append({"round": frame, "value": value})
    return series


# ------------------------------------------------------------ price range series


def price_range_series(records) -> dict[str, MetricSeries]:
    """Per round and side: lowest/highest/volume-weighted-average order price."""
    events = _events(records)
    settled = frames_settled(events)
    out = {}
    for side in ("buy", "sell"):
        series = MetricSeries(f"order_price_range_{side}", units="currency")
        for frame in settled:
            prices = [(e["data"]["price_cents"], e["data"]["volume"])
                      for e in events
                      if e["type"] == "order_accepted" and e["frame"] == frame
                      and e["data"]["side"] == side]
            if not prices:
                series.points.append({"round": frame, "low": None, "high": None,
                                      "avg": None})
                continue
            volume = sum(v for _, v in prices)
            avg = sum(p * v for p, v in prices) / volume
            series.points.append({
                "round": frame,
                "low": min(p for p, _ in prices) / 100,
                "high": max(p for p, _ in prices) / 100,
                "avg": avg / 100,
            })
        out[side] = series
    return out


def bid_over_ask_rounds(records) -> list[int]:
    """Rounds where the highest bid order price exceeded the highest ask."""
    ranges = price_range_series(records)
    rounds = []
    for bid_point, ask_point in zip(ranges["buy"].points, ranges["sell"].points):
        if bid_point["high"] is not None and ask_point["high"] is not None \
                and bid_point["high"] > ask_point["high"]:
            rounds.append(bid_point["round"])
    return rounds


# --------------------------------------------------------- completed contracts


def completed_contracts_series(records, agent_id: str) -> MetricSeries:
    """Per round: the agent's executed volume and volume-weighted deal price."""
    events = _events(records)
    series = MetricSeries(f"completed_contracts_{agent_id}", units="contracts")
    for frame in frames_settled(events):
        volume = value = 0
        for e in events:
            if e["type"] == "deal" and e["frame"] == frame:
                d = e["data"]
                if agent_id in (d["buy_agent"], d["sell_agent"]):
                    volume += d["volume"]
                    value += d["volume"] * d["price_cents"]
        series.points.append({
            "round": frame,
            "volume": volume,
            "avg_price": (value / volume / 100) if volume else None,
        })
    return series


# ---------------------------------------------------------- liquidation series


def liquidation_series(records, agent_id: str) -> MetricSeries:
    """Cumulative currency value of the agent's forced liquidations per round."""
    events = _events(records)
    known = {a["agent"] for a in run_start(events)["accounts"]}
    if agent_id not in known:
        raise MetricsError(f"unknown agent {agent_id!r}")
    series = MetricSeries(f"cumulative_liquidation_{agent_id}", units="currency")
    cumulative = 0
    for frame in frames_settled(events):
        for e in events:
            if e["type"] == "liquidation" and e["frame"] == frame \
                    and e["data"]["agent"] == agent_id:
                cumulative += e["data"]["proceeds_cents"]
        series.points.append({"round": frame, "value": cumulative / 100})
    return series


# ----------------------------------------------------------------- growth rate


def growth_rate(records, reference_increase: float | None = None) -> dict:
    """Total relative settlement-price increase over the run, plus the relative
    error against a reference increase when one is supplied."""
    events = _events(records)
    prices = settlement_prices(events)
    if not prices:
        raise MetricsError("no settlements in log")
    first = prices[min(prices)]
    last = prices[max(prices)]
    if first <= 0:
        raise MetricsError("first settlement price is zero")
    increase = (last - first) / first
    out = {"increase": increase, "first": first / 100, "last": last / 100}
    if reference_increase is not None:
        if reference_increase == 0:
            raise MetricsError("reference increase must be nonzero")
        out["reference"] = reference_increase
        out["relative_error"] = abs(increase - reference_increase) / abs(reference_increase)
    return out


# ---------------------------------------------------------------------- export


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("" if v is None else str(v) for v in row) + "\n")


def export_tables(records, out_dir: str, *, watch_agents: list[str] | None = None,
                  reference: dict | None = None) -> list[str]:
    """Write figure-ready CSVs plus a run summary JSON; returns file paths."""
    events = _events(records)
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []

    def path_of(name: str) -> str:
        p = os.path.join(out_dir, name)
        written.append(p)
        return p

    settled = frames_settled(events)
    prices = settlement_prices(events)
    _write_csv(path_of("settlements.csv"), ["round", "settlement_price"],
               [[f, prices[f] / 100] for f in settled])

    deals = [e for e in events if e["type"] == "deal"]
    _write_csv(
        path_of("deals.csv"),
        ["deal_id", "round", "turn", "buy_agent", "sell_agent", "price", "volume",
         "forced_liquidation"],
        [[d["data"]["deal_id"], d["frame"], d["turn"], d["data"]["buy_agent"],
          d["data"]["sell_agent"], d["data"]["price_cents"] / 100, d["data"]["volume"],
          int(d["data"]["forced_liquidation"])] for d in deals],
    )

    ranges = price_range_series(events)
    for side, series in ranges.items():
        _write_csv(
            path_of(f"order_price_range_{side}.csv"),
            ["round", "low", "high", "weighted_avg"],
            [[p["round"], p["low"], p["high"], p["avg"]] for p in series.points],
        )

    watch = watch_agents or []
    for aid in watch:
        completed = completed_contracts_series(events, aid)
        _write_csv(path_of(f"completed_contracts_{aid}.csv"),
                   ["round", "volume", "weighted_avg_price"],
                   [[p["round"], p["volume"], p["avg_price"]] for p in completed.points])
        liq = liquidation_series(events, aid)
        _write_csv(path_of(f"cumulative_liquidation_{aid}.csv"),
                   ["round", "cumulative_value"],
                   [[p["round"], p["value"]] for p in liq.points])

    summary: dict = {"frames_settled": len(settled)}
    if events:
        try:
            start = run_start(events)
            summary.update({
                "scenario": start["scenario"], "seed": start["seed"],
                "ablation": start["ablation"],
                "behaviour_index_note": "denominator uses frame-start account state",
            })
        except MetricsError:
            pass
    if settled:
        ref = (reference or {}).get("growth_rate")
        summary["growth"] = growth_rate(events, ref)
        summary["bid_over_ask_rounds"] = bid_over_ask_rounds(events)
    if reference:
        summary["reference"] = reference
    with open(path_of("run_summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return written
