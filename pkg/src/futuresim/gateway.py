"""Chat-completion gateway over foundation/expert model backends.

Two backend kinds: `http_chat` speaks the ubiquitous OpenAI-style
chat-completions JSON over HTTP; `scripted` replays canned responses from a
queue or a registered deterministic policy, and is the first-class choice
for reproducible runs and every test.  All calls are captured verbatim as
ChatExchange transcripts.  Auth tokens are resolved from the environment at
call time and never stored or logged.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import httpx


class BackendFailure(Exception):
    """Transport/availability failure after retries; caller picks a fallback."""


class ParseError(ValueError):
    """Structured-output violation; the message is echoed back on retry."""


# ---------------------------------------------------------------- backends


@dataclass(frozen=True)
class BackendSpec:
    backend_id: str
    kind: str  # http_chat | scripted
    endpoint: str = ""
    auth_token_env: str = ""
    model: str = ""
    script: str = ""  # queue:<path> | policy:<name>[?arg] | inline queue via Gateway
    temperature: float = 1.0
    top_p: float = 1.0
    timeout: float = 30.0
    max_retries: int = 3

    def validate(self) -> None:
        if self.kind not in ("http_chat", "scripted"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max retries must be >= 0")


@dataclass(frozen=True)
class ChatExchange:
    backend_id: str
    messages: tuple[dict, ...]
    params: dict
    response: str | None
    error: str | None
    latency_s: float


PolicyFn = Callable[[list[dict], dict], str]
POLICY_REGISTRY: dict[str, Callable[[str], PolicyFn]] = {}


def register_policy(name: str):
    """Register a scripted-policy factory: factory(arg) -> fn(messages, params)."""

    def wrap(factory: Callable[[str], PolicyFn]):
        POLICY_REGISTRY[name] = factory
        return factory

    return wrap


def _make_policy(script: str) -> PolicyFn:
    body = script[len("policy:"):]
    name, _, arg = body.partition("?")
    if name not in POLICY_REGISTRY:
        raise ValueError(f"unknown scripted policy {name!r}")
    return POLICY_REGISTRY[name](arg)


class _ScriptedState:
    def __init__(self, spec: BackendSpec, queue: list[str] | None):
        self.policy: PolicyFn | None = None
        self.queue: list[str] | None = None
        if queue is not None:
            self.queue = list(queue)
        elif spec.script.startswith("policy:"):
            self.policy = _make_policy(spec.script)
        elif spec.script.startswith("queue:"):
            with open(spec.script[len("queue:"):], encoding="utf-8") as fh:
                self.queue = list(json.load(fh))
        else:
            raise ValueError(f"scripted backend {spec.backend_id!r} needs a queue or policy")

    def next(self, messages: list[dict], params: dict) -> str:
        if self.policy is not None:
            return self.policy(messages, params)
        if not self.queue:
            raise BackendFailure("scripted queue exhausted")
        return self.queue.pop(0)


class Gateway:
    """Owns backend instances and the in-memory transcript store."""

    def __init__(self, specs: list[BackendSpec] | None = None, *,
                 transcript_cap: int = 4000, backoff_base: float = 0.25,
                 http_client: httpx.Client | None = None):
        self.specs: dict[str, BackendSpec] = {}
        self.transcripts: list[ChatExchange] = []
        self.transcript_cap = transcript_cap
        self.backoff_base = backoff_base
        self._scripted: dict[str, _ScriptedState] = {}
        self._http = http_client or httpx.Client()
        for spec in specs or []:
            self.add_backend(spec)

    def add_backend(self, spec: BackendSpec, queue: list[str] | None = None) -> None:
        spec.validate()
        self.specs[spec.backend_id] = spec
        if spec.kind == "scripted":
            self._scripted[spec.backend_id] = _ScriptedState(spec, queue)

    # -- calls -------------------------------------------------------------

    def exchange(self, backend_id: str, messages: list[dict],
                 temperature: float | None = None,
                 top_p: float | None = None) -> ChatExchange:
        """One completion attempt cycle; always records a transcript entry."""
        spec = self.specs[backend_id]
        params = {
            "temperature": spec.temperature if temperature is None else temperature,
            "top_p": spec.top_p if top_p is None else top_p,
        }
        start = time.monotonic()
        response: str | None = None
        error: str | None = None
        try:
            if spec.kind == "scripted":
                response = self._scripted[backend_id].next(messages, params)
            else:
                response = self._http_complete(spec, messages, params)
        except BackendFailure as exc:
            error = str(exc)
        ex = ChatExchange(
            backend_id=backend_id,
            messages=tuple(dict(m) for m in messages),
            params=params,
            response=response,
            error=error,
            latency_s=time.monotonic() - start,
        )
        self.transcripts.append(ex)
        return ex

    def complete(self, backend_id: str, messages: list[dict],
                 temperature: float | None = None, top_p: float | None = None) -> str:
        ex = self.exchange(backend_id, messages, temperature, top_p)
        if ex.error is not None:
            raise BackendFailure(ex.error)
        assert ex.response is not None
        return ex.response

    def _http_complete(self, spec: BackendSpec, messages: list[dict], params: dict) -> str:
        payload = {"model": spec.model or spec.backend_id, "messages": messages, **params}
        headers = {"content-type": "application/json"}
        token = os.environ.get(spec.auth_token_env, "") if spec.auth_token_env else ""
        if token:
            headers["authorization"] = f"Bearer {token}"
        url = spec.endpoint.rstrip("/") + "/chat/completions"
        last_error = "no attempts made"
        for attempt in range(spec.max_retries + 1):
            if attempt:
                time.sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                resp = self._http.post(url, json=payload, headers=headers,
                                       timeout=spec.timeout)
                if resp.status_code >= 500:
                    last_error = f"server error {resp.status_code}"
                    continue
                if resp.status_code != 200:
                    raise BackendFailure(f"backend returned {resp.status_code}: {resp.text[:200]}")
                return resp.json()["choices"][0]["message"]["content"]
            except (httpx.TransportError, KeyError, json.JSONDecodeError) as exc:
                last_error = f"{type(exc).__name__}: {exc}"
        raise BackendFailure(f"transport exhausted after {spec.max_retries + 1} attempts: "
                             f"{last_error}")

    def consult_expert(self, backend_id: str, reasoning: str,
                       market_context: str = "") -> str:
        """Ask the expert backend to critique/extend a piece of reasoning.

        Returns the advice capped to the transcript limit (full text stays in
        the transcript store).
        """
        if not reasoning.strip():
            raise ValueError("reasoning text must be non-empty")
        messages = [
            {"role": "system",
             "content": "You are a commodities-futures analyst. Review the trader's "
                        "reasoning and reply with corrections and actionable advice."},
            {"role": "user",
             "content": f"Market context:\n{market_context}\n\nTrader reasoning:\n{reasoning}"},
        ]
        advice = self.complete(backend_id, messages)
        if len(advice) > self.transcript_cap:
            return advice[: self.transcript_cap] + " …[truncated]"
        return advice


def load_backends_file(path: str) -> list[BackendSpec]:
    """Backend config: JSON object mapping backend id -> spec fields."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    specs = []
    for backend_id, fields_ in doc.items():
        specs.append(BackendSpec(backend_id=backend_id, **fields_))
    return specs


# ------------------------------------------------------- structured parsing

_FENCE_RE = re.compile(r"```(?:json)?[ \t]*\n(.*?)```", re.DOTALL)

TREND_LABELS = ("strong_down", "down", "flat", "up", "strong_up")
STRATEGY_DIRECTIONS = ("strong_sell", "sell", "hold", "buy", "strong_buy")
URGENCY_LEVELS = ("low", "mid", "high")


def _enum(value: Any, options: tuple[str, ...], field_name: str) -> str:
    if not isinstance(value, str) or value.lower() not in options:
        raise ParseError(f"{field_name} must be one of {options}, got {value!r}")
    return value.lower()


def _unit_number(value: Any, field_name: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ParseError(f"{field_name} must be a number")
    if not 0.0 <= float(value) <= 1.0:
        raise ParseError(f"{field_name} must be within [0, 1], got {value}")
    return float(value)


def _reject_unknown(doc: dict, allowed: set[str], schema_id: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ParseError(f"unknown fields for {schema_id}: {sorted(unknown)}")


def _parse_assessment(doc: dict) -> dict:
    _reject_unknown(doc, {"analysis", "trend", "confidence"}, "assessment")
    if "trend" not in doc or "confidence" not in doc:
        raise ParseError("assessment requires 'trend' and 'confidence'")
    out = {
        "trend": _enum(doc["trend"], TREND_LABELS, "trend"),
        "confidence": _unit_number(doc["confidence"], "confidence"),
        "analysis": str(doc.get("analysis", "")),
    }
    return out


def _parse_strategy(doc: dict) -> dict:
    _reject_unknown(doc, {"direction", "urgency", "exposure", "rationale"}, "strategy")
    for key in ("direction", "urgency", "exposure"):
        if key not in doc:
            raise ParseError(f"strategy requires {key!r}")
    return {
        "direction": _enum(doc["direction"], STRATEGY_DIRECTIONS, "direction"),
        "urgency": _enum(doc["urgency"], URGENCY_LEVELS, "urgency"),
        "exposure": _unit_number(doc["exposure"], "exposure"),
        "rationale": str(doc.get("rationale", "")),
    }


def _parse_direct_order(doc: dict) -> dict:
    _reject_unknown(doc, {"orders"}, "direct_order")
    if "orders" not in doc or not isinstance(doc["orders"], list):
        raise ParseError("direct_order requires an 'orders' array")
    orders = []
    for i, item in enumerate(doc["orders"]):
        if not isinstance(item, dict):
            raise ParseError(f"orders[{i}] must be an object")
        _reject_unknown(item, {"side", "price", "volume"}, f"orders[{i}]")
        for key in ("side", "price", "volume"):
            if key not in item:
                raise ParseError(f"orders[{i}] requires {key!r}")
        side = _enum(item["side"], ("buy", "sell"), f"orders[{i}].side")
        price = item["price"]
        if not isinstance(price, (int, float)) or isinstance(price, bool) or price <= 0:
            raise ParseError(f"orders[{i}].price must be a positive number")
        volume = item["volume"]
        if not isinstance(volume, int) or isinstance(volume, bool) or volume < 1:
            raise ParseError(f"orders[{i}].volume must be an integer >= 1")
        orders.append({"side": side, "price": float(price), "volume": volume})
    return {"orders": orders}


def _parse_withdraw_list(doc: dict) -> dict:
    _reject_unknown(doc, {"withdraw"}, "withdraw_list")
    if "withdraw" not in doc or not isinstance(doc["withdraw"], list):
        raise ParseError("withdraw_list requires a 'withdraw' array")
    ids = []
    for i, value in enumerate(doc["withdraw"]):
        if not isinstance(value, str):
            raise ParseError(f"withdraw[{i}] must be an order-id string")
        ids.append(value)
    return {"withdraw": ids}


_SCHEMAS = {
    "assessment": _parse_assessment,
    "strategy": _parse_strategy,
    "direct_order": _parse_direct_order,
    "withdraw_list": _parse_withdraw_list,
}


def parse_structured(text: str, schema_id: str) -> dict:
    """Validate the first fenced JSON block of a model response.

    Only the first block is ever considered, so the outcome is deterministic
    even when a response carries several candidate blocks.
    """
    if schema_id not in _SCHEMAS:
        raise ValueError(f"unregistered schema {schema_id!r}")
    match = _FENCE_RE.search(text)
    if match is None:
        raise ParseError("no fenced JSON block found")
    try:
        doc = json.loads(match.group(1))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in fenced block: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("fenced block must contain a JSON object")
    return _SCHEMAS[schema_id](doc)
