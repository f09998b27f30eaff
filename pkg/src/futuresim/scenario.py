"""Scenario files: engine config, agent roster, news schedule, generator data.

One JSON document per scenario (schema in docs/scenario-schema.md).  Loading
validates cross-references (news targets, frame ranges, generator data) and
reports errors with JSON-path anchors; syntax errors keep their line numbers
from the JSON parser.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .agents import (
    AblationFlags,
    AgentProfile,
    NewsItem,
    RuntimeConfig,
    SimulationRunner,
)
from .engine import Account, AssetSpec, Engine, EngineConfig, TradingRules, to_cents
from .gateway import BackendSpec, Gateway
from .generator import (
    DEFAULT_STYLE_MULTIPLIERS,
    DEFAULT_VOLUME_MEAN,
    DEFAULT_VOLUME_STD,
    GeneratorModel,
    PriceHistory,
    fit_generator,
)
from .records import RecordSet


class ScenarioError(ValueError):
    pass


@dataclass
class GeneratorRef:
    history_csv: str
    k: int = 5
    seed: int = 0
    volume_mean: float = DEFAULT_VOLUME_MEAN
    volume_std: float = DEFAULT_VOLUME_STD
    style_multipliers: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_STYLE_MULTIPLIERS))


@dataclass
class Scenario:
    name: str
    engine_config: EngineConfig
    profiles: list[AgentProfile]
    initial_accounts: dict[str, dict]  # agent id -> {cash_cents, position}
    news: list[NewsItem]
    generator: GeneratorRef
    backends: dict[str, dict]
    ablation: str | None = None
    redactions: list[tuple[str, str]] = field(default_factory=list)
    reference: dict = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path)

    # -- construction --------------------------------------------------------

    def accounts(self) -> list[Account]:
        return [
            Account(agent_id=aid, cash_cents=acct["cash_cents"],
                    position=acct.get("position", 0))
            for aid, acct in self.initial_accounts.items()
        ]

    def make_gateway(self, overrides: list[BackendSpec] | None = None) -> Gateway:
        """Gateway over the scenario's backends; overrides replace or extend
        declared backends by id (e.g. a deployment-specific backends file)."""
        specs = {backend_id: BackendSpec(backend_id=backend_id, **fields_)
                 for backend_id, fields_ in self.backends.items()}
        for spec in overrides or []:
            specs[spec.backend_id] = spec
        gw = Gateway()
        for spec in specs.values():
            gw.add_backend(spec)
        return gw

    def fit_model(self) -> GeneratorModel:
        path = self.base_dir / self.generator.history_csv
        history = PriceHistory.from_csv(str(path))
        return fit_generator(
            history, self.generator.k, self.generator.seed,
            volume_mean=self.generator.volume_mean,
            volume_std=self.generator.volume_std,
            style_multipliers=self.generator.style_multipliers,
        )

    def build(self, *, seed: int | None = None, ablation: str | None = None,
              records_path: str | None = None, gateway: Gateway | None = None,
              deterministic: bool = True, control_hook=None,
              window_hook=None) -> SimulationRunner:
        run_seed = self.engine_config.rng_seed if seed is None else seed
        config = EngineConfig(
            asset=self.engine_config.asset, rules=self.engine_config.rules,
            d_sim=self.engine_config.d_sim, d_turn=self.engine_config.d_turn,
            initial_price_cents=self.engine_config.initial_price_cents,
            rng_seed=run_seed, disclosure=self.engine_config.disclosure)
        engine = Engine(config, self.accounts(), records=RecordSet(path=records_path))
        runtime = RuntimeConfig(
            ablation=AblationFlags.from_name(
                self.ablation if ablation is None else ablation),
            redactions=list(self.redactions),
            deterministic=deterministic,
        )
        return SimulationRunner(
            engine=engine,
            profiles=self.profiles,
            gateway=gateway or self.make_gateway(),
            generator_model=self.fit_model(),
            config=runtime,
            news_schedule=[NewsItem(n.frame, n.text, n.targets, list(n.tags))
                           for n in self.news],
            scenario_name=self.name,
            seed=run_seed,
            control_hook=control_hook,
            window_hook=window_hook,
        )

    # -- (de)serialization -----------------------------------------------------

    def to_json(self) -> dict:
        ec = self.engine_config
        return {
            "name": self.name,
            "engine": {
                "asset": {
                    "name": ec.asset.name,
                    "tick": ec.asset.tick_cents / 100,
                    "lot_tonnes": ec.asset.lot_tonnes,
                    "multiplier": ec.asset.multiplier,
                    "description": ec.asset.description,
                },
                "rules": {
                    "initial_margin": float(ec.rules.initial_margin),
                    "maintenance_margin": float(ec.rules.maintenance_margin),
                    "price_band": ec.rules.price_band,
                    "fee_per_contract": ec.rules.fee_per_contract_cents / 100,
                },
                "d_sim": ec.d_sim,
                "d_turn": ec.d_turn,
                "initial_price": ec.initial_price_cents / 100,
                "rng_seed": ec.rng_seed,
                "disclosure": list(ec.disclosure),
            },
            "backends": self.backends,
            "agents": [
                {
                    "id": p.agent_id,
                    "persona": p.persona,
                    "style": p.style,
                    "knowledge": p.knowledge,
                    "backend": p.backend_id,
                    "expert_backend": p.expert_backend_id,
                    "temperature": p.temperature,
                    "top_p": p.top_p,
                    "expert_uptake": p.expert_uptake,
                    "is_human_proxy": p.is_human_proxy,
                    "account": {
                        "cash": self.initial_accounts[p.agent_id]["cash_cents"] / 100,
                        "position": self.initial_accounts[p.agent_id].get("position", 0),
                    },
                }
                for p in self.profiles
            ],
            "news": [
                {"frame": n.frame, "targets": n.targets, "text": n.text, "tags": n.tags}
                for n in self.news
            ],
            "generator": {
                "history_csv": self.generator.history_csv,
                "k": self.generator.k,
                "seed": self.generator.seed,
                "volume_mean": self.generator.volume_mean,
                "volume_std": self.generator.volume_std,
                "style_multipliers": self.generator.style_multipliers,
            },
            "ablation": self.ablation,
            "redactions": [{"from": f, "to": t} for f, t in self.redactions],
            "reference": self.reference,
        }

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ScenarioError(f"{where}: missing required field {key!r}")
    return doc[key]


def parse_scenario(doc: dict, base_dir: Path) -> Scenario:
    name = _require(doc, "name", "$")
    eng = _require(doc, "engine", "$")
    asset_doc = _require(eng, "asset", "$.engine")
    rules_doc = _require(eng, "rules", "$.engine")

    asset = AssetSpec(
        name=_require(asset_doc, "name", "$.engine.asset"),
        tick_cents=to_cents(_require(asset_doc, "tick", "$.engine.asset")),
        lot_tonnes=int(asset_doc.get("lot_tonnes", 1)),
        multiplier=int(asset_doc.get("multiplier", 1)),
        description=asset_doc.get("description", ""),
    )
    rules = TradingRules(
        initial_margin=Fraction(str(_require(rules_doc, "initial_margin", "$.engine.rules"))),
        maintenance_margin=Fraction(
            str(_require(rules_doc, "maintenance_margin", "$.engine.rules"))),
        price_band=rules_doc.get("price_band"),
        fee_per_contract_cents=to_cents(rules_doc.get("fee_per_contract", 0)),
    )
    engine_config = EngineConfig(
        asset=asset, rules=rules,
        d_sim=int(_require(eng, "d_sim", "$.engine")),
        d_turn=int(_require(eng, "d_turn", "$.engine")),
        initial_price_cents=to_cents(_require(eng, "initial_price", "$.engine")),
        rng_seed=int(eng.get("rng_seed", 0)),
        disclosure=tuple(eng.get("disclosure", [])),
    )
    try:
        engine_config.validate()
    except ValueError as exc:
        raise ScenarioError(f"$.engine: {exc}") from exc

    backends = _require(doc, "backends", "$")
    if not isinstance(backends, dict) or not backends:
        raise ScenarioError("$.backends: must be a non-empty object")

    profiles: list[AgentProfile] = []
    accounts: dict[str, dict] = {}
    for i, agent_doc in enumerate(_require(doc, "agents", "$")):
        where = f"$.agents[{i}]"
        aid = _require(agent_doc, "id", where)
        if aid in accounts:
            raise ScenarioError(f"{where}: duplicate agent id {aid!r}")
        account_doc = _require(agent_doc, "account", where)
        profile = AgentProfile(
            agent_id=aid,
            persona=agent_doc.get("persona", ""),
            style=agent_doc.get("style", "custom"),
            knowledge=agent_doc.get("knowledge", ""),
            backend_id=agent_doc.get("backend", "foundation"),
            expert_backend_id=agent_doc.get("expert_backend", "expert"),
            temperature=float(agent_doc.get("temperature", 1.0)),
            top_p=float(agent_doc.get("top_p", 1.0)),
            expert_uptake=float(agent_doc.get("expert_uptake", 0.5)),
            is_human_proxy=bool(agent_doc.get("is_human_proxy", False)),
        )
        try:
            profile.validate()
        except ValueError as exc:
            raise ScenarioError(f"{where}: {exc}") from exc
        if not profile.is_human_proxy and profile.backend_id not in backends:
            raise ScenarioError(f"{where}: backend {profile.backend_id!r} not declared")
        profiles.append(profile)
        accounts[aid] = {
            "cash_cents": to_cents(_require(account_doc, "cash", f"{where}.account")),
            "position": int(account_doc.get("position", 0)),
        }

    news: list[NewsItem] = []
    for i, item in enumerate(doc.get("news", [])):
        where = f"$.news[{i}]"
        frame = int(_require(item, "frame", where))
        if not 1 <= frame <= engine_config.d_sim:
            raise ScenarioError(
                f"{where}: frame {frame} outside [1, {engine_config.d_sim}]")
        targets = item.get("targets", "all")
        if targets != "all":
            unknown = [t for t in targets if t not in accounts]
            if unknown:
                raise ScenarioError(f"{where}: unknown target agents {unknown}")
        news.append(NewsItem(frame=frame, text=_require(item, "text", where),
                             targets=targets, tags=list(item.get("tags", []))))

    gen_doc = _require(doc, "generator", "$")
    generator = GeneratorRef(
        history_csv=_require(gen_doc, "history_csv", "$.generator"),
        k=int(gen_doc.get("k", 5)),
        seed=int(gen_doc.get("seed", 0)),
        volume_mean=float(gen_doc.get("volume_mean", DEFAULT_VOLUME_MEAN)),
        volume_std=float(gen_doc.get("volume_std", DEFAULT_VOLUME_STD)),
        style_multipliers=dict(gen_doc.get("style_multipliers",
                                           DEFAULT_STYLE_MULTIPLIERS)),
    )
    if not (base_dir / generator.history_csv).is_file():
        raise ScenarioError(
            f"$.generator.history_csv: file not found: {base_dir / generator.history_csv}")

    ablation = doc.get("ablation")
    if ablation is not None:
        AblationFlags.from_name(ablation)  # raises on unknown names

    redactions = [(r["from"], r["to"]) for r in doc.get("redactions", [])]

    return Scenario(
        name=name, engine_config=engine_config, profiles=profiles,
        initial_accounts=accounts, news=news, generator=generator,
        backends=backends, ablation=ablation, redactions=redactions,
        reference=dict(doc.get("reference", {})), base_dir=base_dir,
    )


def load_scenario(path: str) -> Scenario:
    p = Path(path)
    if not p.is_file():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: top level must be a JSON object")
    return parse_scenario(doc, p.parent)
