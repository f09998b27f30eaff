"""Independent brute-force oracles used to cross-check the engine.

The matcher here deliberately shares no code with the engine: it keeps
orders in a flat list and rescans it linearly on every step.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class SimpleOrder:
    arrival: int
    side: str  # "buy" | "sell"
    price: int
    volume: int


def brute_force_match(orders: list[SimpleOrder]) -> tuple[list[tuple], dict[int, int]]:
    """Cross best bid vs best ask while they overlap, price-time priority,
    execution at the earlier order's limit price.

    Returns (deals, residuals): deals as (buy_arrival, sell_arrival, price,
    volume) tuples in execution order, residuals keyed by arrival number.
    """
    live = {o.arrival: SimpleOrder(o.arrival, o.side, o.price, o.volume) for o in orders}
    deals: list[tuple] = []
    while True:
        best_bid = best_ask = None
        for o in live.values():
            if o.volume == 0:
                continue
            if o.side == "buy":
                if best_bid is None or (-o.price, o.arrival) < (-best_bid.price, best_bid.arrival):
                    best_bid = o
            else:
                if best_ask is None or (o.price, o.arrival) < (best_ask.price, best_ask.arrival):
                    best_ask = o
        if best_bid is None or best_ask is None or best_bid.price < best_ask.price:
            break
        earlier = best_bid if best_bid.arrival < best_ask.arrival else best_ask
        volume = min(best_bid.volume, best_ask.volume)
        deals.append((best_bid.arrival, best_ask.arrival, earlier.price, volume))
        best_bid.volume -= volume
        best_ask.volume -= volume
    residuals = {a: o.volume for a, o in live.items()}
    return deals, residuals


def vwap(prices_volumes: list[tuple[int, int]]) -> float:
    total_v = sum(v for _, v in prices_volumes)
    return sum(p * v for p, v in prices_volumes) / total_v
