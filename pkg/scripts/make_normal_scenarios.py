#!/usr/bin/env python3
"""Emit the normal-market scenario templates (scenarios/normal/*.scenario.json).

One template per futures contract, each anchored to its 128-day bundled
history (see make_history.py).  These run on the deterministic `random`
scripted policy out of the box; point the backends at an http_chat endpoint
to drive them with live models instead.
"""

from __future__ import annotations

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "scenarios"

CONTRACTS = {
    # code -> (initial price, tick, news?)
    "sc2501": (534.0, 0.1, True),
    "ta501": (4812.0, 2.0, True),
    "ih2412": (2388.0, 0.2, True),
    "gcg2502": (2630.0, 0.1, False),
    "ch2503": (792.0, 0.2, False),
    "sf2503": (6364.0, 2.0, False),
}

AGENTS = [
    ("trader1", "aggressive", 5_000_000),
    ("trader2", "aggressive", 5_000_000),
    ("trader3", "conservative", 5_000_000),
    ("trader4", "conservative", 5_000_000),
    ("hedge1", "custom", 8_000_000),
    ("hedge2", "custom", 8_000_000),
]


def template(code: str, price: float, tick: float, with_news: bool) -> dict:
    news = []
    if with_news:
        news = [{
            "frame": 1,
            "targets": "all",
            "text": f"Sector newsflow for {code}: inventories tighter than expected.",
            "tags": ["inventory"],
        }]
    return {
        "name": f"normal-{code}",
        "engine": {
            "asset": {"name": code, "tick": tick, "lot_tonnes": 1, "multiplier": 1,
                      "description": f"{code} futures template; prices in currency per unit."},
            "rules": {"initial_margin": 0.125, "maintenance_margin": 0.1,
                      "price_band": 0.1},
            "d_sim": 3,
            "d_turn": 4,
            "initial_price": price,
            "rng_seed": 404,
            "disclosure": [],
        },
        "backends": {
            "foundation": {"kind": "scripted", "script": "policy:random?1"},
            "expert": {"kind": "scripted", "script": "policy:advisor"},
        },
        "agents": [
            {"id": aid, "persona": f"{style} trader in {code}.", "style": style,
             "knowledge": "", "backend": "foundation", "expert_backend": "expert",
             "temperature": 1.0, "top_p": 1.0, "expert_uptake": 0.5,
             "is_human_proxy": False,
             "account": {"cash": cash, "position": 0}}
            for aid, style, cash in AGENTS
        ],
        "news": news,
        "generator": {
            "history_csv": f"../data/{code}_128d.csv",
            "k": 5,
            "seed": 128,
            "volume_mean": 0.7,
            "volume_std": 0.1,
            "style_multipliers": {"aggressive": 1.25, "conservative": 0.6,
                                  "custom": 1.0},
        },
        "ablation": None,
        "redactions": [],
        "reference": {
            "note": "Template for short-horizon settlement-price prediction runs: "
                    "d_sim=3 frames map to a three-day horizon; compare simulated "
                    "settlements to realized ones with the return-rate MSE metric.",
        },
    }


def main() -> None:
    out_dir = ROOT / "normal"
    out_dir.mkdir(parents=True, exist_ok=True)
    for code, (price, tick, with_news) in CONTRACTS.items():
        doc = template(code, price, tick, with_news)
        path = out_dir / f"{code}.scenario.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
