from __future__ import annotations

import sys
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from futuresim.engine import Account, AssetSpec, Engine, EngineConfig, TradingRules


def make_config(tick=1, lot=1, multiplier=1, d_sim=10, d_turn=4, price=10_000,
                initial=Fraction(1, 8), maintenance=Fraction(1, 10),
                band=None, seed=7, disclosure=()) -> EngineConfig:
    return EngineConfig(
        asset=AssetSpec(name="test", tick_cents=tick, lot_tonnes=lot, multiplier=multiplier),
        rules=TradingRules(initial_margin=initial, maintenance_margin=maintenance,
                           price_band=band),
        d_sim=d_sim,
        d_turn=d_turn,
        initial_price_cents=price,
        rng_seed=seed,
        disclosure=tuple(disclosure),
    )


def make_engine(n_agents=4, cash=10**12, positions=None, **config_kwargs) -> Engine:
    config = make_config(**config_kwargs)
    positions = positions or {}
    accounts = [
        Account(agent_id=f"a{i}", cash_cents=cash, position=positions.get(f"a{i}", 0))
        for i in range(n_agents)
    ]
    engine = Engine(config, accounts)
    engine.begin_frame(1)
    engine.begin_turn(1)
    return engine
