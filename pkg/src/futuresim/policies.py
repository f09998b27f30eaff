"""Bundled deterministic scripted-backend policies.

These are rule-based stand-ins for the language models: they read the
compact context header rendered into every prompt and answer with the same
structured blocks a live model would.  They make full runs reproducible
bit-for-bit, which is what the test suite and the bundled scenarios use.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass

from .gateway import BackendFailure, register_policy

_CTX_RE = re.compile(
    r"\[ctx agent=(?P<agent>\S+) frame=(?P<frame>\d+) turn=(?P<turn>\d+) "
    r"phase=(?P<phase>\S+) last_price=(?P<last>[\d.]+) settlement=(?P<settle>[\d.]+)"
    r"(?: position=(?P<position>-?\d+))?\]"
)
_ORDER_ID_RE = re.compile(r"- id=(\S+) ")


@dataclass(frozen=True)
class Ctx:
    agent: str
    frame: int
    turn: int
    phase: str
    last_price: float
    settlement: float
    position: int = 0


def _ctx_of(messages: list[dict]) -> Ctx | None:
    for message in messages:
        m = _CTX_RE.search(message.get("content", ""))
        if m:
            return Ctx(m["agent"], int(m["frame"]), int(m["turn"]), m["phase"],
                       float(m["last"]), float(m["settle"]),
                       int(m["position"] or 0))
    return None


def _block(obj: dict) -> str:
    return "```json\n" + json.dumps(obj) + "\n```"


def assessment(trend: str, confidence: float, analysis: str = "") -> str:
    return _block({"trend": trend, "confidence": confidence, "analysis": analysis})


def strategy(direction: str, urgency: str = "mid", exposure: float = 0.5,
             rationale: str = "") -> str:
    return _block({"direction": direction, "urgency": urgency, "exposure": exposure,
                   "rationale": rationale})


def _reflection_text(note: str) -> str:
    return f"Period reviewed. {note}\n- [risk] keep position sized to available funds"


# --------------------------------------------------------------------- hold


@register_policy("hold")
def _hold_policy(arg: str):
    def fn(messages, params):
        ctx = _ctx_of(messages)
        if ctx is None:
            return "No comment."  # expert consult slot
        if ctx.phase == "assessment":
            return assessment("flat", 0.5, "nothing actionable")
        if ctx.phase in ("strategy_init", "strategy_refine"):
            return strategy("hold", "low", 0.0, "waiting")
        if ctx.phase == "direct_order":
            return _block({"orders": []})
        if ctx.phase == "withdraw":
            return _block({"withdraw": []})
        return _reflection_text("Stayed out of the market.")
    return fn


# --------------------------------------------------------------------- fail


@register_policy("fail")
def _fail_policy(arg: str):
    def fn(messages, params):
        raise BackendFailure("scripted backend configured to fail")
    return fn


# ------------------------------------------------------------------- random


@register_policy("random")
def _random_policy(arg: str):
    """Deterministic pseudo-random behaviour keyed on (seed, agent, frame, turn,
    phase); used to spray diverse order flow through the engine in tests."""
    seed = arg or "0"
    directions = ["strong_sell", "sell", "hold", "buy", "strong_buy"]
    urgencies = ["low", "mid", "high"]
    trends = ["strong_down", "down", "flat", "up", "strong_up"]

    def digest(ctx: Ctx, salt: str) -> int:
        key = f"{seed}|{ctx.agent}|{ctx.frame}|{ctx.turn}|{ctx.phase}|{salt}"
        return int(hashlib.sha256(key.encode()).hexdigest()[:12], 16)

    def fn(messages, params):
        ctx = _ctx_of(messages)
        if ctx is None:
            return "Expert note: size carefully."
        if ctx.phase == "assessment":
            return assessment(trends[digest(ctx, "t") % 5], (digest(ctx, "c") % 100) / 100)
        if ctx.phase in ("strategy_init", "strategy_refine"):
            return strategy(
                directions[digest(ctx, "d") % 5],
                urgencies[digest(ctx, "u") % 3],
                (digest(ctx, "e") % 100) / 100,
            )
        if ctx.phase == "direct_order":
            side = "buy" if digest(ctx, "s") % 2 == 0 else "sell"
            price = round(ctx.last_price * (1.05 if side == "buy" else 0.95), 2)
            return _block({"orders": [{"side": side, "price": price,
                                       "volume": 1 + digest(ctx, "v") % 5}]})
        if ctx.phase == "withdraw":
            if digest(ctx, "w") % 4 == 0:
                ids = _ORDER_ID_RE.findall(messages[0]["content"])
                return _block({"withdraw": ids})
            return _block({"withdraw": []})
        return _reflection_text("Mixed results this period.")
    return fn


# ------------------------------------------------------------------ advisor


@register_policy("advisor")
def _advisor_policy(arg: str):
    def fn(messages, params):
        return ("Position sizing should respect margin headroom; prefer limit "
                "orders close to the last traded price and scale in gradually.")
    return fn


# ------------------------------------------------------------------ squeeze
#
# The short-squeeze narrative used by the bundled crisis scenario.  Role is
# taken from the agent id.  Timeline (frames):
#   1-3  quiet two-sided market; the short principal builds its position
#   4    bullish supply shock: the long principal starts buying hard
#   5    rumours of the big short circulate; consumer steps aside
#   5+   escalating buying until the short is fully liquidated


def _squeeze_role(agent: str) -> str:
    for role in ("tsingshan", "glencore", "buyer", "hedger", "spec", "maker"):
        if agent.startswith(role):
            return role
    return "spec"


@register_policy("squeeze")
def _squeeze_policy(arg: str):
    def fn(messages, params):
        ctx = _ctx_of(messages)
        if ctx is None:
            return ("Supply disruptions of this kind historically squeeze shorts; "
                    "do not stand in front of the move.")
        role = _squeeze_role(ctx.agent)
        f = ctx.frame

        if ctx.phase == "assessment":
            if f < 4:
                return assessment("flat" if role != "glencore" else "up", 0.5,
                                  "calm market, balanced flows")
            if role == "tsingshan":
                return assessment("down", 0.7, "prices overextended, supply will normalize")
            return assessment("strong_up", 0.9, "supply shock plus a trapped short")

        if ctx.phase in ("strategy_init", "strategy_refine"):
            return strategy(*_squeeze_tendency(role, f, ctx.turn, ctx.position))

        if ctx.phase == "direct_order":
            price = round(ctx.last_price * 1.05, 2)
            return _block({"orders": [{"side": "buy" if role in ("glencore", "buyer", "spec")
                                       else "sell", "price": price, "volume": 2}]})
        if ctx.phase == "withdraw":
            return _block({"withdraw": []})
        return _reflection_text("The squeeze dynamics dominated this period.")
    return fn


def _squeeze_tendency(role: str, f: int, turn: int,
                      position: int) -> tuple[str, str, float, str]:
    if role == "tsingshan":
        if f <= 3:
            return ("sell", "mid", 0.10, "hedging production forward")
        if f == 4:
            return ("sell", "mid", 0.12, "rally is overdone, pressing the short")
        return ("buy", "high", 1.0, "must cover the short position")
    if role == "glencore":
        if f <= 3:
            if turn == 1:
                return ("buy", "low", 0.1, "accumulating quietly")
            return ("hold", "low", 0.0, "patient")
        if f == 4:
            return ("strong_buy", "high", 0.9, "supply shock: lift every offer")
        return ("strong_buy", "high", 1.0, "keep squeezing the short")
    if role == "buyer":
        if f <= 4:
            if turn <= 2:
                return ("buy", "mid", 0.3 + 0.05 * f, "securing raw material")
            return ("hold", "low", 0.0, "orders placed earlier this period")
        if f == 5:
            return ("hold", "low", 0.0, "rumoured short supply incoming, wait")
        if position > 2_000:
            return ("sell", "low", 0.08, "monetizing part of the inventory hedge")
        return ("hold", "low", 0.0, "core hedge kept")
    if role == "hedger":
        if f <= 3:
            return ("sell", "mid", 0.35, "forward-selling output")
        return ("sell", "low", 0.3, "selling into strength")
    if role == "maker":
        return ("sell", "low", 0.2, "providing offers") if turn % 2 else \
               ("buy", "low", 0.1, "providing bids")
    # speculators: probe early, ride momentum, then unwind the long only
    if f < 4:
        return ("buy", "low", 0.1, "small probe long") if turn == 1 else \
               ("hold", "low", 0.0, "watching")
    if f <= 6:
        return ("buy", "high", 0.6, "momentum long into the squeeze")
    if position > 100:
        return ("sell", "low", 0.08, "taking profit on the long")
    return ("hold", "low", 0.0, "flat after the ride")
