"""Agent runtime: the per-frame trading workflow and the simulation loop.

Each frame: news delivery and market assessment (with iterative expert
consultation), then d_turn turns of strategy formation, expert refinement,
order generation and withdrawal decisions, then settlement and reflection.
Model failures always degrade to a hold tendency; a run never deadlocks on
a backend.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .engine import Engine, OrderRequest, Side, round_to_tick, to_cents
from .gateway import BackendFailure, Gateway, ParseError, parse_structured
from .generator import GeneratorModel, generate_orders
from .records import RecordSet

PROMPT_ROOT = Path(__file__).parent / "prompts"
DEFAULT_PROMPT_VERSION = "v1"


class HaltRun(Exception):
    """Raised from a control hook to stop the run at the next safe boundary."""


@dataclass(frozen=True)
class AgentProfile:
    agent_id: str
    persona: str
    style: str = "custom"  # aggressive | conservative | custom
    knowledge: str = ""
    backend_id: str = "foundation"
    expert_backend_id: str = "expert"
    temperature: float = 1.0
    top_p: float = 1.0
    expert_uptake: float = 0.5
    is_human_proxy: bool = False

    def validate(self) -> None:
        if self.temperature < 0:
            raise ValueError(f"{self.agent_id}: temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError(f"{self.agent_id}: top_p must be in (0, 1]")
        if self.style not in ("aggressive", "conservative", "custom"):
            raise ValueError(f"{self.agent_id}: unknown style {self.style!r}")
        if not 0 <= self.expert_uptake <= 1:
            raise ValueError(f"{self.agent_id}: expert_uptake must be in [0, 1]")


@dataclass
class MarketAssessment:
    agent_id: str
    frame: int
    trend: str
    confidence: float
    analysis: str
    expert_transcript: str = ""
    failed: bool = False


@dataclass
class TradingStrategy:
    agent_id: str
    frame: int
    turn: int
    stage: str  # init | final
    direction: str
    urgency: str
    exposure: float
    rationale: str = ""
    failed: bool = False

    def tendency(self) -> dict:
        return {"direction": self.direction, "urgency": self.urgency,
                "exposure": self.exposure}


@dataclass
class Reflection:
    agent_id: str
    frame: int
    summary: str
    lessons: list[tuple[str, str]] = field(default_factory=list)
    failed: bool = False

    def as_note(self) -> str:
        if not self.summary and not self.lessons:
            return "(no notes)"
        lines = [self.summary] + [f"- [{tag}] {text}" for tag, text in self.lessons]
        return "\n".join(lines)


@dataclass
class NewsItem:
    frame: int
    text: str
    targets: str | list[str] = "all"  # "all" or explicit agent ids
    tags: list[str] = field(default_factory=list)
    event_id: str = ""

    def addressed_to(self, agent_id: str) -> bool:
        return self.targets == "all" or agent_id in self.targets


@dataclass
class ObservationBundle:
    frame: int
    news: list[NewsItem]
    snapshot: dict

    def for_agent(self, agent_id: str) -> "ObservationBundle":
        return ObservationBundle(
            frame=self.frame,
            news=[n for n in self.news if n.addressed_to(agent_id)],
            snapshot=self.snapshot,
        )

    def news_text(self) -> str:
        if not self.news:
            return "(no news this period)"
        return "\n".join(f"- {n.text}" for n in self.news)


@dataclass(frozen=True)
class AblationFlags:
    no_expert: bool = False
    no_generator: bool = False

    @classmethod
    def from_name(cls, name: str | None) -> "AblationFlags":
        if not name:
            return cls()
        if name == "no_expert":
            return cls(no_expert=True)
        if name == "no_generator":
            return cls(no_generator=True)
        if name == "both":
            return cls(no_expert=True, no_generator=True)
        raise ValueError(f"unknown ablation {name!r}")

    def label(self) -> str:
        parts = [n for n, on in (("no_expert", self.no_expert),
                                 ("no_generator", self.no_generator)) if on]
        return "+".join(parts) if parts else "none"


@dataclass
class RuntimeConfig:
    ablation: AblationFlags = field(default_factory=AblationFlags)
    expert_iterations: int = 2
    parse_retries: int = 3
    prompt_version: str = DEFAULT_PROMPT_VERSION
    redactions: list[tuple[str, str]] = field(default_factory=list)
    deterministic: bool = True
    max_split: int = 3


def load_prompts(version: str) -> dict[str, str]:
    root = PROMPT_ROOT / version
    if not root.is_dir():
        raise FileNotFoundError(f"prompt version {version!r} not found under {PROMPT_ROOT}")
    return {p.stem: p.read_text(encoding="utf-8") for p in sorted(root.glob("*.txt"))}


def render(template: str, **slots: object) -> str:
    # plain token substitution; JSON braces in templates stay untouched
    for key, value in slots.items():
        template = template.replace("{" + key + "}", str(value))
    return template


def fmt_account(view: dict) -> str:
    return (
        f"cash {view['cash_cents'] / 100:.2f}, available {view['available_cents'] / 100:.2f}, "
        f"position {view['position']} contracts, "
        f"realized P&L {view['realized_pnl_cents'] / 100:.2f}, "
        f"unrealized P&L {view['unrealized_cents'] / 100:.2f}"
    )


def fmt_snapshot(snap: dict) -> str:
    book = snap["book"]

    def level(entry):
        return "none" if entry is None else f"{entry['price_cents'] / 100:.2f} x{entry['volume']}"

    majors = ", ".join(f"{a}:{p}" for a, p in snap["major_positions"].items()) or "n/a"
    return (
        f"last price {snap['last_price_cents'] / 100:.2f}, "
        f"last settlement {snap['settlement_price_cents'] / 100:.2f}, "
        f"open interest {snap['open_interest']}, "
        f"best bid {level(book['best_bid'])}, best ask {level(book['best_ask'])}, "
        f"major holders: {majors}"
    )


HOLD = {"direction": "hold", "urgency": "low", "exposure": 0.0, "rationale": ""}


class Agent:
    """Decision pipeline for one simulated trader."""

    def __init__(self, profile: AgentProfile, gateway: Gateway, prompts: dict[str, str],
                 config: RuntimeConfig, records: RecordSet, rng: np.random.Generator):
        profile.validate()
        self.profile = profile
        self.gateway = gateway
        self.prompts = prompts
        self.config = config
        self.records = records
        self.rng = rng
        self.assessment: MarketAssessment | None = None
        self.reflections: list[Reflection] = []

    # -- plumbing -----------------------------------------------------------

    def _redact(self, text: str) -> str:
        for find, repl in self.config.redactions:
            text = text.replace(find, repl)
        return text

    def _ctx(self, frame: int, turn: int, phase: str, snapshot: dict,
             position: int | None = None) -> str:
        pos = "" if position is None else f" position={position}"
        return (f"[ctx agent={self.profile.agent_id} frame={frame} turn={turn} "
                f"phase={phase} last_price={snapshot['last_price_cents'] / 100:.2f} "
                f"settlement={snapshot['settlement_price_cents'] / 100:.2f}{pos}]")

    def _last_note(self) -> str:
        return self.reflections[-1].as_note() if self.reflections else "(no notes)"

    def _trace(self, kind: str, frame: int, turn: int | None, payload: dict,
               exchanges: list | None = None) -> None:
        data = {"agent": self.profile.agent_id, "kind": kind, "payload": payload}
        if exchanges:
            data["exchanges"] = [
                {"backend": ex.backend_id,
                 "messages": list(ex.messages),
                 "response": ex.response,
                 "error": ex.error}
                for ex in exchanges
            ]
        self.records.append("agent_trace", frame=frame, turn=turn, **data)

    def _ask(self, prompt: str, schema: str) -> tuple[dict | None, list]:
        """Completion plus structured parse with error-echo retries."""
        messages = [{"role": "user", "content": self._redact(prompt)}]
        exchanges = []
        for _ in range(self.config.parse_retries):
            ex = self.gateway.exchange(self.profile.backend_id, messages,
                                       temperature=self.profile.temperature,
                                       top_p=self.profile.top_p)
            exchanges.append(ex)
            if ex.error is not None:
                return None, exchanges
            try:
                return parse_structured(ex.response, schema), exchanges
            except ParseError as exc:
                messages = messages + [
                    {"role": "assistant", "content": ex.response},
                    {"role": "user",
                     "content": f"Your reply was rejected: {exc}. Answer again with "
                                f"one valid fenced JSON block only."},
                ]
        return None, exchanges

    # -- workflow steps ------------------------------------------------------

    def analyze_market(self, observation: ObservationBundle) -> MarketAssessment:
        frame = observation.frame
        mine = observation.for_agent(self.profile.agent_id)
        market_text = fmt_snapshot(mine.snapshot)
        obs_text = f"News:\n{mine.news_text()}\n\nMarket data: {market_text}"
        transcript_parts: list[str] = []
        advice_text = "(none yet)"
        exchanges: list = []
        parsed = None

        rounds = 1 if self.config.ablation.no_expert else 1 + self.config.expert_iterations
        for i in range(rounds):
            prompt = render(
                self.prompts["assessment"],
                ctx=self._ctx(frame, 0, "assessment", mine.snapshot),
                profile=self._profile_text(),
                observation=obs_text,
                reflection=self._last_note(),
                expert_advice=advice_text,
            )
            parsed, exs = self._ask(prompt, "assessment")
            exchanges.extend(exs)
            if parsed is None:
                break
            if i < rounds - 1:
                try:
                    advice = self.gateway.consult_expert(
                        self.profile.expert_backend_id,
                        self._redact(parsed["analysis"] or parsed["trend"]),
                        self._redact(market_text),
                    )
                except BackendFailure as exc:
                    transcript_parts.append(f"(expert unavailable: {exc})")
                    break
                transcript_parts.append(advice)
                advice_text = "\n---\n".join(transcript_parts)

        transcript = "\n---\n".join(transcript_parts)
        if len(transcript) > self.gateway.transcript_cap:
            transcript = transcript[: self.gateway.transcript_cap] + " …[truncated]"
        if parsed is None:
            assessment = MarketAssessment(self.profile.agent_id, frame, trend="flat",
                                          confidence=0.0, analysis="",
                                          expert_transcript=transcript, failed=True)
        else:
            assessment = MarketAssessment(self.profile.agent_id, frame,
                                          trend=parsed["trend"],
                                          confidence=parsed["confidence"],
                                          analysis=parsed["analysis"],
                                          expert_transcript=transcript)
        self.assessment = assessment
        self._trace("assessment", frame, None, {
            "trend": assessment.trend, "confidence": assessment.confidence,
            "analysis": assessment.analysis, "expert_transcript": assessment.expert_transcript,
            "failed": assessment.failed,
        }, exchanges)
        return assessment

    def _profile_text(self) -> str:
        p = self.profile
        return f"{p.persona}\nStyle: {p.style}.\n{p.knowledge}".strip()

    def form_strategy(self, frame: int, turn: int, account_view: dict,
                      snapshot: dict) -> TradingStrategy:
        assessment = self.assessment
        assessment_text = ("(no assessment)" if assessment is None else
                           f"trend={assessment.trend} confidence={assessment.confidence:.2f}\n"
                           f"{assessment.analysis}")
        prompt = render(
            self.prompts["strategy_init"],
            ctx=self._ctx(frame, turn, "strategy_init", snapshot,
                          position=account_view["position"]),
            profile=self._profile_text(),
            account=fmt_account(account_view),
            assessment=assessment_text,
            reflection=self._last_note(),
        )
        parsed, exchanges = self._ask(prompt, "strategy")
        values = parsed or HOLD
        strategy = TradingStrategy(self.profile.agent_id, frame, turn, "init",
                                   direction=values["direction"], urgency=values["urgency"],
                                   exposure=values["exposure"],
                                   rationale=values.get("rationale", ""),
                                   failed=parsed is None)
        self._trace("strategy_init", frame, turn,
                    {**strategy.tendency(), "rationale": strategy.rationale,
                     "failed": strategy.failed}, exchanges)
        return strategy

    def refine_strategy(self, s_init: TradingStrategy, account_view: dict,
                        snapshot: dict) -> TradingStrategy:
        frame, turn = s_init.frame, s_init.turn
        if self.config.ablation.no_expert:
            final = replace(s_init, stage="final")
            self._trace("strategy_final", frame, turn,
                        {**final.tendency(), "rationale": final.rationale,
                         "expert_advice": "", "failed": final.failed})
            return final

        exchanges: list = []
        try:
            advice = self.gateway.consult_expert(
                self.profile.expert_backend_id,
                self._redact(f"Tendency {s_init.tendency()}; rationale: {s_init.rationale}"),
                self._redact(fmt_snapshot(snapshot)),
            )
        except BackendFailure:
            final = replace(s_init, stage="final", failed=True)
            self._trace("strategy_final", frame, turn,
                        {**final.tendency(), "rationale": final.rationale,
                         "expert_advice": None, "failed": True})
            return final

        uptake = self.profile.expert_uptake
        if uptake == 0:
            final = replace(s_init, stage="final")
        else:
            prompt = render(
                self.prompts["strategy_refine"],
                ctx=self._ctx(frame, turn, "strategy_refine", snapshot,
                              position=account_view["position"]),
                strategy=f"{s_init.tendency()} rationale: {s_init.rationale}",
                expert_advice=advice,
                account=fmt_account(account_view),
                uptake=f"{uptake:.2f}",
            )
            parsed, exchanges = self._ask(prompt, "strategy")
            if parsed is None:
                final = replace(s_init, stage="final", failed=True)
            else:
                # uptake blends the refined tendency into the agent's own:
                # qualitative fields switch at uptake >= 0.5, exposure is linear
                direction = parsed["direction"] if uptake >= 0.5 else s_init.direction
                urgency = parsed["urgency"] if uptake >= 0.5 else s_init.urgency
                exposure = (1 - uptake) * s_init.exposure + uptake * parsed["exposure"]
                final = TradingStrategy(self.profile.agent_id, frame, turn, "final",
                                        direction=direction, urgency=urgency,
                                        exposure=exposure,
                                        rationale=parsed.get("rationale", s_init.rationale))
        self._trace("strategy_final", frame, turn,
                    {**final.tendency(), "rationale": final.rationale,
                     "expert_advice": advice, "failed": final.failed}, exchanges)
        return final

    def act(self, s_fina: TradingStrategy, snapshot: dict, engine: Engine,
            model: GeneratorModel) -> list[OrderRequest]:
        if s_fina.direction == "hold":
            return []
        if self.config.ablation.no_generator:
            return self._act_direct(s_fina, snapshot, engine)
        account = engine.accounts[self.profile.agent_id]
        orders = generate_orders(
            model, s_fina.direction, s_fina.urgency, self.profile.style,
            snapshot["last_price_cents"], account,
            tick_cents=engine.config.asset.tick_cents,
            multiplier=engine.config.asset.multiplier,
            initial_margin=engine.config.rules.initial_margin,
            exposure=s_fina.exposure, rng=self.rng,
            max_split=self.config.max_split,
        )
        return orders

    def _act_direct(self, s_fina: TradingStrategy, snapshot: dict,
                    engine: Engine) -> list[OrderRequest]:
        prompt = render(
            self.prompts["direct_order"],
            ctx=self._ctx(s_fina.frame, s_fina.turn, "direct_order", snapshot),
            strategy=f"{s_fina.tendency()} rationale: {s_fina.rationale}",
            account=fmt_account(engine.account_view(self.profile.agent_id)),
            observation=fmt_snapshot(snapshot),
        )
        parsed, exchanges = self._ask(prompt, "direct_order")
        self._trace("direct_order", s_fina.frame, s_fina.turn,
                    {"orders": None if parsed is None else parsed["orders"],
                     "failed": parsed is None}, exchanges)
        if parsed is None:
            return []
        tick = engine.config.asset.tick_cents
        orders = []
        for item in parsed["orders"]:
            price = round_to_tick(to_cents(item["price"]), tick)
            orders.append(OrderRequest(agent_id=self.profile.agent_id,
                                       side=Side(item["side"]),
                                       price_cents=price, volume=item["volume"]))
        return orders

    def decide_withdraw(self, frame: int, turn: int, resting: list[OrderRequest],
                        snapshot: dict) -> list[str]:
        if not resting:
            return []
        own_ids = {o.order_id for o in resting}
        listing = "\n".join(
            f"- id={o.order_id} {o.side.value} {o.residual}@{o.price_cents / 100:.2f}"
            for o in resting)
        prompt = render(
            self.prompts["withdraw"],
            ctx=self._ctx(frame, turn, "withdraw", snapshot),
            resting=listing,
            observation=fmt_snapshot(snapshot),
        )
        parsed, exchanges = self._ask(prompt, "withdraw_list")
        ids = [] if parsed is None else [i for i in parsed["withdraw"] if i in own_ids]
        self._trace("withdraw_decision", frame, turn,
                    {"requested": None if parsed is None else parsed["withdraw"],
                     "withdrawn": ids, "failed": parsed is None}, exchanges)
        return ids

    def reflect(self, frame: int, strategies: list[TradingStrategy],
                orders: list[OrderRequest], settlement_summary: str,
                account_view: dict, snapshot: dict) -> Reflection:
        strat_text = "\n".join(f"- turn {s.turn}: {s.tendency()}" for s in strategies) or "(none)"
        orders_text = "\n".join(
            f"- {o.side.value} {o.volume}@{o.price_cents / 100:.2f} [{o.status.value}]"
            for o in orders) or "(none)"
        prompt = render(
            self.prompts["reflect"],
            ctx=self._ctx(frame, 0, "reflect", snapshot),
            strategies=strat_text,
            orders=orders_text,
            settlement=settlement_summary,
            account=fmt_account(account_view),
        )
        messages = [{"role": "user", "content": self._redact(prompt)}]
        ex = self.gateway.exchange(self.profile.backend_id, messages,
                                   temperature=self.profile.temperature,
                                   top_p=self.profile.top_p)
        if ex.error is not None:
            reflection = Reflection(self.profile.agent_id, frame, summary="", failed=True)
        else:
            summary_lines, lessons = [], []
            for line in ex.response.splitlines():
                stripped = line.strip()
                if stripped.startswith("- ["):
                    tag, _, rest = stripped[3:].partition("]")
                    lessons.append((tag.strip(), rest.strip()))
                elif stripped:
                    summary_lines.append(stripped)
            reflection = Reflection(self.profile.agent_id, frame,
                                    summary=" ".join(summary_lines), lessons=lessons)
        self.reflections.append(reflection)
        self._trace("reflection", frame, None,
                    {"summary": reflection.summary,
                     "lessons": [list(l) for l in reflection.lessons],
                     "failed": reflection.failed}, [ex])
        return reflection


ControlHook = Callable[[str, int, int], None]
WindowHook = Callable[[int, int], None]


class SimulationRunner:
    """Drives the frame/turn loop over one engine and a set of agents."""

    def __init__(self, engine: Engine, profiles: list[AgentProfile], gateway: Gateway,
                 generator_model: GeneratorModel, config: RuntimeConfig,
                 news_schedule: list[NewsItem] | None = None,
                 scenario_name: str = "adhoc", seed: int = 0,
                 control_hook: ControlHook | None = None,
                 window_hook: WindowHook | None = None):
        self.engine = engine
        self.records = engine.records
        self.gateway = gateway
        self.model = generator_model
        self.config = config
        self.scenario_name = scenario_name
        self.seed = seed
        self.control_hook = control_hook
        self.window_hook = window_hook
        self.current_frame = 0
        self.observation_delivered = False
        self._news_lock = threading.Lock()
        self._pending_news: list[NewsItem] = list(news_schedule or [])
        self._news_n = 0

        ordered = sorted(profiles, key=lambda p: p.agent_id)
        seeds = np.random.SeedSequence(seed).spawn(len(ordered))
        self.agents: dict[str, Agent] = {}
        prompts = load_prompts(config.prompt_version)
        for profile, child in zip(ordered, seeds):
            self.agents[profile.agent_id] = Agent(
                profile, gateway, prompts, config, self.records,
                np.random.default_rng(child))
        self.traders = [a for a in self.agents.values() if not a.profile.is_human_proxy]

    # -- live event injection -------------------------------------------------

    def inject_event(self, item: NewsItem) -> int:
        """Queue a news item; returns the frame it will be delivered in."""
        with self._news_lock:
            if item.frame < self.current_frame or (
                    item.frame == self.current_frame and self.observation_delivered):
                if item.frame < self.current_frame:
                    raise ValueError(
                        f"late event: frame {item.frame} already settled "
                        f"(current frame {self.current_frame})")
                item.frame = self.current_frame + 1
            if item.frame > self.engine.config.d_sim:
                raise ValueError(f"frame {item.frame} beyond run end")
            self._pending_news.append(item)
            return item.frame

    def _collect_news(self, frame: int) -> list[NewsItem]:
        with self._news_lock:
            due = [n for n in self._pending_news if n.frame == frame]
            self._pending_news = [n for n in self._pending_news if n.frame != frame]
        for item in due:
            self._news_n += 1
            item.event_id = f"n{self._news_n}"
            self.records.append(
                "news_event", frame=frame,
                event_id=item.event_id, text=item.text,
                targets=item.targets, tags=item.tags)
        return due

    # -- the loop ---------------------------------------------------------------

    def _control(self, phase: str, frame: int, turn: int) -> None:
        if self.control_hook is not None:
            self.control_hook(phase, frame, turn)

    def run(self) -> RecordSet:
        engine = self.engine
        self.records.append(
            "run_start",
            scenario=self.scenario_name, seed=self.seed,
            ablation=self.config.ablation.label(),
            deterministic=self.config.deterministic,
            prompt_version=self.config.prompt_version,
            engine={
                "asset": engine.config.asset.name,
                "tick_cents": engine.config.asset.tick_cents,
                "lot_tonnes": engine.config.asset.lot_tonnes,
                "multiplier": engine.config.asset.multiplier,
                "d_sim": engine.config.d_sim,
                "d_turn": engine.config.d_turn,
                "initial_price_cents": engine.config.initial_price_cents,
                "initial_margin": str(engine.config.rules.initial_margin),
                "maintenance_margin": str(engine.config.rules.maintenance_margin),
                "price_band": engine.config.rules.price_band,
                "fee_per_contract_cents": engine.config.rules.fee_per_contract_cents,
                "disclosure": list(engine.config.disclosure),
            },
            generator=self.model.to_json(),
            accounts=[
                {"agent": a.agent_id, "cash_cents": a.cash_cents, "position": a.position,
                 "is_clearing": a.is_clearing}
                for a in sorted(engine.accounts.values(), key=lambda a: a.agent_id)
            ],
        )
        status = "finished"
        try:
            for frame in range(1, engine.config.d_sim + 1):
                self._run_frame(frame)
        except HaltRun:
            status = "halted"
        finally:
            self.records.append("run_end", frame=self.current_frame, status=status)
        return self.records

    def _run_frame(self, frame: int) -> None:
        engine = self.engine
        self.current_frame = frame
        self.observation_delivered = False
        self._control("frame_start", frame, 0)
        engine.begin_frame(frame)

        news = self._collect_news(frame)
        observation = ObservationBundle(frame, news, engine.snapshot())
        self.observation_delivered = True

        self._control("analysis", frame, 0)
        for agent in self.traders:
            agent.analyze_market(observation)

        per_agent_strategies: dict[str, list[TradingStrategy]] = {
            a.profile.agent_id: [] for a in self.traders}
        per_agent_orders: dict[str, list[OrderRequest]] = {
            a.profile.agent_id: [] for a in self.traders}

        for turn in range(1, engine.config.d_turn + 1):
            self._control("trading", frame, turn)
            engine.begin_turn(turn)
            for agent in self.traders:
                aid = agent.profile.agent_id
                account_view = engine.account_view(aid)
                snapshot = engine.snapshot()
                s_init = agent.form_strategy(frame, turn, account_view, snapshot)
                s_fina = agent.refine_strategy(s_init, account_view, snapshot)
                per_agent_strategies[aid].append(s_fina)
                orders = agent.act(s_fina, snapshot, engine, self.model)
                if orders:
                    results = engine.submit_orders(orders)
                    per_agent_orders[aid].extend(r.order for r in results if r.accepted)
            if self.window_hook is not None:
                self.window_hook(frame, turn)  # human-proxy submission window
            engine.match_turn()
            snapshot = engine.snapshot()
            for agent in self.traders:
                aid = agent.profile.agent_id
                resting = engine.resting_orders(aid)
                ids = agent.decide_withdraw(frame, turn, resting, snapshot)
                if ids:
                    engine.withdraw_orders(aid, ids)

        self._control("settlement", frame, 0)
        report = engine.settle_frame()
        snapshot = engine.snapshot()
        for agent in self.traders:
            aid = agent.profile.agent_id
            summary = (
                f"settlement price {report.settlement_price_cents / 100:.2f}; "
                f"your cash delta {report.cash_deltas_cents.get(aid, 0) / 100:.2f}; "
                f"liquidations this period: {len(report.liquidations)}"
            )
            agent.reflect(frame, per_agent_strategies[aid], per_agent_orders[aid],
                          summary, engine.account_view(aid), snapshot)
