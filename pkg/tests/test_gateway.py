"""Gateway backends, transcripts, and structured-output parsing."""

from __future__ import annotations

import http.server
import json
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from futuresim.gateway import (
    BackendFailure,
    BackendSpec,
    Gateway,
    ParseError,
    parse_structured,
    register_policy,
)


def scripted_gateway(queue: list[str], **kwargs) -> Gateway:
    gw = Gateway(**kwargs)
    gw.add_backend(BackendSpec(backend_id="s", kind="scripted"), queue=queue)
    return gw


# ---------------------------------------------------------------- backends


def test_scripted_queue_replays_in_order():
    gw = scripted_gateway(["A", "B"])
    assert gw.complete("s", [{"role": "user", "content": "x"}]) == "A"
    assert gw.complete("s", [{"role": "user", "content": "x"}]) == "B"


def test_scripted_queue_exhaustion_is_backend_failure():
    gw = scripted_gateway(["only"])
    gw.complete("s", [])
    with pytest.raises(BackendFailure, match="exhausted"):
        gw.complete("s", [])


def test_every_call_recorded_once():
    gw = scripted_gateway(["A"])
    gw.complete("s", [{"role": "user", "content": "hello"}])
    with pytest.raises(BackendFailure):
        gw.complete("s", [])
    assert len(gw.transcripts) == 2
    assert gw.transcripts[0].response == "A"
    assert gw.transcripts[1].error is not None


def test_policy_backend():
    @register_policy("upper_echo")
    def _factory(arg: str):
        def fn(messages, params):
            return messages[-1]["content"].upper() + arg
        return fn

    gw = Gateway()
    gw.add_backend(BackendSpec(backend_id="p", kind="scripted", script="policy:upper_echo?!"))
    assert gw.complete("p", [{"role": "user", "content": "hi"}]) == "HI!"


class _EchoHandler(http.server.BaseHTTPRequestHandler):
    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["content-length"])))
        content = body["messages"][-1]["content"]
        out = json.dumps({"choices": [{"message": {"content": content}}]}).encode()
        self.send_response(200)
        self.send_header("content-type", "application/json")
        self.send_header("content-length", str(len(out)))
        self.end_headers()
        self.wfile.write(out)

    def log_message(self, *args):
        pass


@pytest.fixture()
def echo_server():
    server = http.server.HTTPServer(("127.0.0.1", 0), _EchoHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1"
    server.shutdown()


def test_http_chat_against_loopback_stub(echo_server):
    gw = Gateway()
    gw.add_backend(BackendSpec(backend_id="h", kind="http_chat", endpoint=echo_server,
                               max_retries=0))
    prompt = "round-trip me"
    assert gw.complete("h", [{"role": "user", "content": prompt}]) == prompt


def test_http_unreachable_raises_backend_failure():
    gw = Gateway(backoff_base=0.001)
    gw.add_backend(BackendSpec(backend_id="h", kind="http_chat",
                               endpoint="http://127.0.0.1:9", timeout=0.2, max_retries=1))
    with pytest.raises(BackendFailure, match="exhausted"):
        gw.complete("h", [{"role": "user", "content": "x"}])
    assert len(gw.transcripts) == 1  # one exchange entry covering all retries


def test_auth_token_never_in_transcript(echo_server, monkeypatch):
    monkeypatch.setenv("FSIM_TEST_TOKEN", "sekret-value")
    gw = Gateway()
    gw.add_backend(BackendSpec(backend_id="h", kind="http_chat", endpoint=echo_server,
                               auth_token_env="FSIM_TEST_TOKEN", max_retries=0))
    gw.complete("h", [{"role": "user", "content": "q"}])
    blob = repr(gw.transcripts)
    assert "sekret-value" not in blob


def test_consult_expert_truncates_long_advice_keeps_original():
    long_advice = "z" * 300
    gw = scripted_gateway([long_advice], transcript_cap=100)
    advice = gw.consult_expert("s", "my reasoning")
    assert advice.startswith("z" * 100) and advice.endswith("[truncated]")
    assert gw.transcripts[-1].response == long_advice


def test_consult_expert_empty_context_ok_empty_reasoning_not():
    gw = scripted_gateway(["advice"])
    assert gw.consult_expert("s", "thinking", market_context="") == "advice"
    with pytest.raises(ValueError, match="non-empty"):
        gw.consult_expert("s", "   ")


# ----------------------------------------------------------------- parsing


def fenced(obj) -> str:
    return "prefix text\n```json\n" + json.dumps(obj) + "\n```\nsuffix"


def test_parse_strategy_nominal():
    out = parse_structured(fenced({"direction": "buy", "urgency": "mid", "exposure": 0.5}),
                           "strategy")
    assert out == {"direction": "buy", "urgency": "mid", "exposure": 0.5, "rationale": ""}


def test_parse_exposure_range_violation():
    with pytest.raises(ParseError, match="within"):
        parse_structured(fenced({"direction": "buy", "urgency": "mid", "exposure": 1.5}),
                         "strategy")


def test_parse_only_first_block_considered():
    bad_then_good = (
        "```json\n{\"direction\": \"buy\"}\n```\n"
        "```json\n{\"direction\": \"buy\", \"urgency\": \"mid\", \"exposure\": 0.5}\n```"
    )
    with pytest.raises(ParseError):
        parse_structured(bad_then_good, "strategy")


def test_parse_enum_case_insensitive():
    out = parse_structured(fenced({"trend": "Strong_Up", "confidence": 0.9}), "assessment")
    assert out["trend"] == "strong_up"


def test_parse_unknown_field_rejected():
    with pytest.raises(ParseError, match="unknown fields"):
        parse_structured(fenced({"trend": "up", "confidence": 0.5, "vibe": "good"}),
                         "assessment")


def test_parse_no_block_is_error():
    with pytest.raises(ParseError, match="no fenced"):
        parse_structured("just prose, no json", "assessment")


def test_parse_direct_orders():
    out = parse_structured(
        fenced({"orders": [{"side": "BUY", "price": 30450.0, "volume": 5}]}), "direct_order")
    assert out["orders"] == [{"side": "buy", "price": 30450.0, "volume": 5}]
    with pytest.raises(ParseError, match="integer"):
        parse_structured(fenced({"orders": [{"side": "buy", "price": 1.0, "volume": 2.5}]}),
                         "direct_order")


def test_parse_withdraw_list():
    assert parse_structured(fenced({"withdraw": ["o1", "o2"]}), "withdraw_list") == {
        "withdraw": ["o1", "o2"]
    }
    with pytest.raises(ParseError):
        parse_structured(fenced({"withdraw": [1]}), "withdraw_list")


@settings(max_examples=100, deadline=None)
@given(st.text(max_size=200))
def test_parse_is_pure_and_total(text):
    outcomes = []
    for _ in range(2):
        try:
            outcomes.append(("ok", parse_structured(text, "strategy")))
        except ParseError as exc:
            outcomes.append(("err", str(exc)))
    assert outcomes[0] == outcomes[1]
