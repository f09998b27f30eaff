"""Agent runtime: frame/turn loop shape, ablations, failure fallbacks,
reflection memory, human-proxy bypass."""

from __future__ import annotations

import json

import pytest

from futuresim.agents import AgentProfile, NewsItem
from futuresim.gateway import BackendSpec, Gateway, register_policy
from futuresim.policies import _ctx_of, assessment, strategy

from harness import build_runner, flat_model, scripted_gateway_for


def events_of(records, *types):
    return [e for e in records.events if e["type"] in types]


# ------------------------------------------------------------------ loop shape


def test_loop_counts_and_cardinality():
    runner = build_runner(n_agents=3, policy="random", d_sim=3, d_turn=4)
    records = runner.run()

    settlements = events_of(records, "settlement")
    assert len(settlements) == 3

    traces = events_of(records, "agent_trace")
    for agent in ("a0", "a1", "a2"):
        for frame in (1, 2, 3):
            mine = [e for e in traces if e["data"]["agent"] == agent and e["frame"] == frame]
            assert len([e for e in mine if e["data"]["kind"] == "assessment"]) == 1
            assert len([e for e in mine if e["data"]["kind"] == "reflection"]) == 1
            finals = [e for e in mine if e["data"]["kind"] == "strategy_final"]
            assert len(finals) == 4  # exactly one per turn


def test_all_hold_run_is_quiet_and_carries_price():
    runner = build_runner(n_agents=2, policy="hold", d_sim=1, d_turn=1, price=29_000_00)
    records = runner.run()
    assert events_of(records, "deal") == []
    [settlement] = events_of(records, "settlement")
    assert settlement["data"]["price_cents"] == 29_000_00


def test_phase_ordering_per_agent():
    runner = build_runner(n_agents=2, policy="random", d_sim=2, d_turn=2)
    records = runner.run()
    for frame in (1, 2):
        frame_events = [e for e in records.events if e["frame"] == frame]
        [settle_seq] = [e["seq"] for e in frame_events if e["type"] == "settlement"]
        for agent in ("a0", "a1"):
            def seqs(kind, turn=None):
                return [e["seq"] for e in frame_events
                        if e["type"] == "agent_trace" and e["data"]["kind"] == kind
                        and e["data"]["agent"] == agent
                        and (turn is None or e["turn"] == turn)]
            orders = [e["seq"] for e in frame_events
                      if e["type"] in ("order_accepted", "order_rejected")
                      and e["data"]["agent"] == agent]
            assert max(seqs("assessment")) < min(seqs("strategy_init"))
            for turn in (1, 2):
                [init] = seqs("strategy_init", turn)
                [final] = seqs("strategy_final", turn)
                turn_orders = [e["seq"] for e in frame_events
                               if e["type"] in ("order_accepted", "order_rejected")
                               and e["data"]["agent"] == agent and e["turn"] == turn]
                assert init < final
                assert all(final < s for s in turn_orders)
            assert all(s < settle_seq for s in orders)
            assert settle_seq < min(seqs("reflection"))


def test_determinism_identical_records():
    lines = []
    for _ in range(2):
        runner = build_runner(n_agents=3, policy="random", d_sim=2, d_turn=3, seed=11)
        lines.append(runner.run().to_lines())
    assert lines[0] == lines[1]


# ------------------------------------------------------------------ analysis


def test_bullish_news_parsed_for_trend_follower():
    @register_policy("bull_reader")
    def _factory(arg):
        def fn(messages, params):
            ctx = _ctx_of(messages)
            if ctx is None:
                return "Expect further upside."
            body = messages[0]["content"]
            if ctx.phase == "assessment":
                if "export ban" in body:
                    return assessment("strong_up", 0.9, "supply shock from export ban")
                return assessment("flat", 0.5)
            if ctx.phase in ("strategy_init", "strategy_refine"):
                return strategy("buy", "mid", 0.4)
            if ctx.phase == "withdraw":
                return json.dumps({"withdraw": []}).join(["```json\n", "\n```"])
            return "Fine."
        return fn

    news = [NewsItem(frame=1, text="Government announces metal export ban", targets="all")]
    runner = build_runner(n_agents=1, policy="bull_reader", d_sim=1, d_turn=1, news=news)
    records = runner.run()
    [a] = [e for e in events_of(records, "agent_trace")
           if e["data"]["kind"] == "assessment"]
    assert a["data"]["payload"]["trend"] in ("up", "strong_up")


def test_no_news_still_produces_assessment():
    runner = build_runner(n_agents=1, policy="hold", d_sim=1, d_turn=1)
    records = runner.run()
    assessments = [e for e in events_of(records, "agent_trace")
                   if e["data"]["kind"] == "assessment"]
    assert len(assessments) == 1 and not assessments[0]["data"]["payload"]["failed"]


def test_targeted_news_only_reaches_target():
    @register_policy("leak_detector")
    def _factory(arg):
        def fn(messages, params):
            ctx = _ctx_of(messages)
            if ctx is None:
                return "ok"
            body = messages[0]["content"]
            if ctx.phase == "assessment":
                if "secret tip" in body:
                    return assessment("strong_up", 1.0, "tipped off")
                return assessment("flat", 0.1)
            if ctx.phase in ("strategy_init", "strategy_refine"):
                return strategy("hold", "low", 0.0)
            if ctx.phase == "withdraw":
                return "```json\n{\"withdraw\": []}\n```"
            return "done"
        return fn

    news = [NewsItem(frame=1, text="secret tip: buy", targets=["a1"])]
    runner = build_runner(n_agents=3, policy="leak_detector", d_sim=1, d_turn=1, news=news)
    records = runner.run()
    by_agent = {e["data"]["agent"]: e["data"]["payload"]["trend"]
                for e in events_of(records, "agent_trace")
                if e["data"]["kind"] == "assessment"}
    assert by_agent == {"a0": "flat", "a1": "strong_up", "a2": "flat"}


# ------------------------------------------------------------------ ablations


def test_no_expert_transcript_empty_and_identity():
    runner = build_runner(n_agents=2, policy="random", d_sim=2, d_turn=2,
                          ablation="no_expert")
    records = runner.run()
    traces = events_of(records, "agent_trace")
    for e in traces:
        if e["data"]["kind"] == "assessment":
            assert e["data"]["payload"]["expert_transcript"] == ""
    inits = {(e["data"]["agent"], e["frame"], e["turn"]): e["data"]["payload"]
             for e in traces if e["data"]["kind"] == "strategy_init"}
    finals = {(e["data"]["agent"], e["frame"], e["turn"]): e["data"]["payload"]
              for e in traces if e["data"]["kind"] == "strategy_final"}
    assert set(inits) == set(finals)
    for key, init in inits.items():
        fin = finals[key]
        for fld in ("direction", "urgency", "exposure", "rationale"):
            assert fin[fld] == init[fld], (key, fld)


def test_no_generator_direct_orders_five_percent_markup():
    runner = build_runner(n_agents=2, policy="squeeze", d_sim=1, d_turn=1,
                          ablation="no_generator", price=10_000_00, tick=100)
    records = runner.run()
    accepted = events_of(records, "order_accepted")
    assert accepted
    for e in accepted:
        assert e["data"]["price_cents"] == 10_500_00  # exactly 1.05x initial price
        assert e["data"]["price_cents"] % 100 == 0


# ------------------------------------------------------------------ failures


def test_always_failing_backend_degrades_to_hold_and_terminates():
    runner = build_runner(n_agents=2, policy="fail", expert_policy="fail",
                          d_sim=2, d_turn=2)
    records = runner.run()
    assert events_of(records, "deal") == []
    assert len(events_of(records, "settlement")) == 2
    finals = [e for e in events_of(records, "agent_trace")
              if e["data"]["kind"] == "strategy_final"]
    assert finals and all(e["data"]["payload"]["direction"] == "hold" for e in finals)
    assert all(e["data"]["payload"]["failed"] for e in finals)
    [end] = events_of(records, "run_end")
    assert end["data"]["status"] == "finished"


def test_liveness_backend_call_budget():
    gw = scripted_gateway_for("fail", "fail")
    runner = build_runner(n_agents=2, d_sim=2, d_turn=2, gateway=gw)
    runner.run()
    n, d_sim, d_turn, retries = 2, 2, 2, 3
    # assessment + per-turn (init, refine-consult) + reflection, with retry headroom
    bound = d_sim * n * (retries + 1) * (2 + 3 * d_turn)
    assert len(gw.transcripts) <= bound


# ------------------------------------------------------------------ refinement


def test_zero_uptake_keeps_own_tendency():
    profiles = [AgentProfile(agent_id="solo", persona="p", expert_uptake=0.0)]
    runner = build_runner(profiles=profiles, policy="random", d_sim=1, d_turn=1)
    records = runner.run()
    traces = events_of(records, "agent_trace")
    [init] = [e["data"]["payload"] for e in traces if e["data"]["kind"] == "strategy_init"]
    [final] = [e["data"]["payload"] for e in traces if e["data"]["kind"] == "strategy_final"]
    assert (final["direction"], final["urgency"], final["exposure"]) == (
        init["direction"], init["urgency"], init["exposure"])
    assert final["expert_advice"]  # the expert was still consulted


def test_full_uptake_takes_expert_reversal():
    @register_policy("stubborn_bull")
    def _factory(arg):
        def fn(messages, params):
            ctx = _ctx_of(messages)
            if ctx is None:
                return "Reverse course: sell into this strength."
            if ctx.phase == "assessment":
                return assessment("up", 0.8)
            if ctx.phase == "strategy_init":
                return strategy("buy", "mid", 0.5, "bullish")
            if ctx.phase == "strategy_refine":
                return strategy("sell", "mid", 0.5, "expert persuaded me")
            if ctx.phase == "withdraw":
                return "```json\n{\"withdraw\": []}\n```"
            return "noted"
        return fn

    profiles = [AgentProfile(agent_id="solo", persona="p", expert_uptake=1.0)]
    runner = build_runner(profiles=profiles, policy="stubborn_bull", d_sim=1, d_turn=1)
    records = runner.run()
    traces = events_of(records, "agent_trace")
    [final] = [e["data"]["payload"] for e in traces if e["data"]["kind"] == "strategy_final"]
    assert final["direction"] == "sell"


def test_profile_conditioned_strategy_contract():
    # the prompt must carry trend + style so a model can honor them
    @register_policy("style_follow")
    def _factory(arg):
        def fn(messages, params):
            ctx = _ctx_of(messages)
            if ctx is None:
                return "agree"
            body = messages[0]["content"]
            if ctx.phase == "assessment":
                return assessment("strong_up", 0.9, "breakout")
            if ctx.phase in ("strategy_init", "strategy_refine"):
                if "trend=strong_up" in body and "Style: aggressive" in body:
                    return strategy("strong_buy", "high", 0.9)
                return strategy("buy", "low", 0.2)
            if ctx.phase == "withdraw":
                return "```json\n{\"withdraw\": []}\n```"
            return "done"
        return fn

    profiles = [AgentProfile(agent_id="agg", persona="p", style="aggressive",
                             expert_uptake=0.0)]
    runner = build_runner(profiles=profiles, policy="style_follow", d_sim=1, d_turn=1)
    records = runner.run()
    [init] = [e["data"]["payload"] for e in events_of(records, "agent_trace")
              if e["data"]["kind"] == "strategy_init"]
    assert init["direction"] in ("buy", "strong_buy")
    assert init["exposure"] > 0.75


# ------------------------------------------------------------------ reflection


def test_reflection_feeds_next_frame_prompt():
    gw = scripted_gateway_for("random")
    runner = build_runner(n_agents=1, d_sim=2, d_turn=1, gateway=gw)
    records = runner.run()
    [r1] = [e["data"]["payload"] for e in events_of(records, "agent_trace")
            if e["data"]["kind"] == "reflection" and e["frame"] == 1]
    assert r1["summary"]
    frame2_prompts = [
        ex.messages[0]["content"] for ex in gw.transcripts
        if ex.messages and "frame=2" in ex.messages[0].get("content", "")
        and "phase=strategy_init" in ex.messages[0]["content"]
    ]
    assert frame2_prompts and all(r1["summary"] in p for p in frame2_prompts)


def test_rationale_can_reference_reflection():
    @register_policy("echo_reflection")
    def _factory(arg):
        def fn(messages, params):
            ctx = _ctx_of(messages)
            if ctx is None:
                return "ok"
            body = messages[0]["content"]
            if ctx.phase == "assessment":
                return assessment("flat", 0.5)
            if ctx.phase in ("strategy_init", "strategy_refine"):
                if "over-exposed" in body:
                    return strategy("hold", "low", 0.0, "trimming after being over-exposed")
                return strategy("hold", "low", 0.1, "steady")
            if ctx.phase == "withdraw":
                return "```json\n{\"withdraw\": []}\n```"
            return "I was badly over-exposed this period.\n- [risk] cut size"
        return fn

    runner = build_runner(n_agents=1, policy="echo_reflection", d_sim=2, d_turn=1)
    records = runner.run()
    inits = [e for e in events_of(records, "agent_trace")
             if e["data"]["kind"] == "strategy_init" and e["frame"] == 2]
    assert inits[0]["data"]["payload"]["rationale"] == "trimming after being over-exposed"


def test_first_frame_has_empty_reflection_sentinel():
    gw = scripted_gateway_for("hold")
    runner = build_runner(n_agents=1, d_sim=1, d_turn=1, gateway=gw)
    runner.run()
    first_strategy_prompt = next(
        ex.messages[0]["content"] for ex in gw.transcripts
        if ex.messages and "phase=strategy_init" in ex.messages[0].get("content", ""))
    assert "(no notes)" in first_strategy_prompt


# ------------------------------------------------------------------ withdrawal


def test_withdraw_stale_order_fixture():
    @register_policy("stale_withdrawer")
    def _factory(arg):
        def fn(messages, params):
            ctx = _ctx_of(messages)
            if ctx is None:
                return "ok"
            body = messages[0]["content"]
            if ctx.phase == "assessment":
                return assessment("flat", 0.5)
            if ctx.phase in ("strategy_init", "strategy_refine"):
                if ctx.agent == "a0" and ctx.turn == 1:
                    return strategy("buy", "low", 0.01, "probe far below market")
                return strategy("hold", "low", 0.0)
            if ctx.phase == "withdraw":
                import re
                ids = re.findall(r"- id=(\S+) ", body)
                return "```json\n" + json.dumps({"withdraw": ids}) + "\n```"
            return "done"
        return fn

    model = flat_model(mu_p=0.10, sd_p=0.0)  # bid far off-market, rests unfilled
    runner = build_runner(n_agents=2, policy="stale_withdrawer", d_sim=1, d_turn=1,
                          model=model)
    records = runner.run()
    accepted = events_of(records, "order_accepted")
    withdrawals = [e for e in events_of(records, "withdrawal")
                   if e["data"]["reason"] == "agent"]
    assert accepted and withdrawals
    assert withdrawals[0]["data"]["order_id"] == accepted[0]["data"]["order_id"]


def test_withdraw_foreign_ids_filtered():
    @register_policy("id_thief")
    def _factory(arg):
        def fn(messages, params):
            ctx = _ctx_of(messages)
            if ctx is None:
                return "ok"
            if ctx.phase == "assessment":
                return assessment("flat", 0.5)
            if ctx.phase in ("strategy_init", "strategy_refine"):
                return strategy("buy", "low", 0.01)
            if ctx.phase == "withdraw":
                return "```json\n{\"withdraw\": [\"o1\", \"o2\", \"o999\"]}\n```"
            return "done"
        return fn

    model = flat_model(mu_p=0.10, sd_p=0.0)
    runner = build_runner(n_agents=2, policy="id_thief", d_sim=1, d_turn=1, model=model)
    records = runner.run()
    for e in events_of(records, "withdrawal"):
        if e["data"]["reason"] == "agent":
            owner = e["data"]["agent"]
            traces = [t for t in events_of(records, "order_accepted")
                      if t["data"]["order_id"] == e["data"]["order_id"]]
            assert traces[0]["data"]["agent"] == owner


def test_no_withdraw_call_when_everything_filled():
    gw = scripted_gateway_for("hold")
    runner = build_runner(n_agents=2, d_sim=1, d_turn=1, gateway=gw)
    runner.run()
    withdraw_prompts = [ex for ex in gw.transcripts
                        if ex.messages and "phase=withdraw" in ex.messages[0].get("content", "")]
    assert withdraw_prompts == []  # hold agents rest nothing


# ------------------------------------------------------------------ human proxy


def test_human_proxy_makes_no_model_calls():
    profiles = [
        AgentProfile(agent_id="bot", persona="p"),
        AgentProfile(agent_id="human", persona="operator", is_human_proxy=True),
    ]
    gw = scripted_gateway_for("hold")
    runner = build_runner(profiles=profiles, d_sim=1, d_turn=1, gateway=gw)
    records = runner.run()
    for ex in gw.transcripts:
        assert "agent=human" not in (ex.messages[0]["content"] if ex.messages else "")
    traces = [e for e in events_of(records, "agent_trace")
              if e["data"]["agent"] == "human"]
    assert traces == []


# ------------------------------------------------------------------ act


def test_act_respects_affordability():
    profiles = [AgentProfile(agent_id="small", persona="p", style="aggressive",
                             expert_uptake=0.0)]
    runner = build_runner(profiles=profiles, policy="squeeze", d_sim=1, d_turn=1,
                          cash=5_000_00, price=100_00, tick=1)
    records = runner.run()
    accepted = events_of(records, "order_accepted")
    rejected = events_of(records, "order_rejected")
    assert rejected == []  # generator never exceeds the margin pre-check
    total = sum(e["data"]["volume"] for e in accepted)
    assert total <= 40  # 5000/ (>=100 * 0.125) bounds affordable volume
