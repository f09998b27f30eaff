#!/usr/bin/env python3
"""Draw the standard run figures from an exported metrics directory.

Usage: python scripts/plot_run.py <metrics-dir> [--out <dir>]

Reads the CSVs written by `futuresim export` (or by `futuresim run`) and
renders: settlement trajectory, per-round bid/ask order price ranges, and,
when per-agent exports are present, completed-contract bars and the
cumulative forced-liquidation curve.
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [row for row in csv.DictReader(fh)]


def maybe_float(value: str) -> float | None:
    return float(value) if value not in ("", None) else None


def plot_settlements(rows: list[dict], out: Path) -> None:
    rounds = [int(r["round"]) for r in rows]
    prices = [float(r["settlement_price"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(rounds, prices, marker="o")
    ax.set_xlabel("round")
    ax.set_ylabel("settlement price")
    ax.set_title("Settlement price per round")
    fig.tight_layout()
    fig.savefig(out / "settlements.png", dpi=120)
    plt.close(fig)


def plot_price_ranges(bid_rows: list[dict], ask_rows: list[dict], out: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    for rows, color, label in ((bid_rows, "tab:red", "bid"),
                               (ask_rows, "tab:blue", "ask")):
        for row in rows:
            low, high, avg = (maybe_float(row["low"]), maybe_float(row["high"]),
                              maybe_float(row["weighted_avg"]))
            if low is None:
                continue
            x = int(row["round"]) + (-0.12 if label == "bid" else 0.12)
            ax.vlines(x, low, high, color=color, linewidth=3, alpha=0.6)
            ax.plot([x], [avg], marker="_", markersize=12, color=color)
        ax.plot([], [], color=color, label=f"{label} range / weighted avg")
    ax.set_xlabel("round")
    ax.set_ylabel("order price")
    ax.set_title("Order price ranges per round")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "order_price_ranges.png", dpi=120)
    plt.close(fig)


def plot_completed(rows: list[dict], agent: str, out: Path) -> None:
    rounds = [int(r["round"]) for r in rows]
    volumes = [float(r["volume"]) for r in rows]
    prices = [maybe_float(r["weighted_avg_price"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(rounds, volumes, color="tab:green", alpha=0.7)
    ax.set_xlabel("round")
    ax.set_ylabel("completed contracts")
    ax2 = ax.twinx()
    ax2.plot(rounds, prices, color="tab:orange", marker="o", label="weighted avg price")
    ax2.set_ylabel("price")
    ax.set_title(f"Completed contracts: {agent}")
    fig.tight_layout()
    fig.savefig(out / f"completed_{agent}.png", dpi=120)
    plt.close(fig)


def plot_liquidation(rows: list[dict], agent: str, out: Path) -> None:
    rounds = [int(r["round"]) for r in rows]
    values = [float(r["cumulative_value"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.step(rounds, values, where="post", color="tab:purple")
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative liquidation value")
    ax.set_title(f"Cumulative forced liquidation: {agent}")
    fig.tight_layout()
    fig.savefig(out / f"liquidation_{agent}.png", dpi=120)
    plt.close(fig)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("metrics_dir", type=Path)
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args()
    src: Path = args.metrics_dir
    out: Path = args.out or src
    out.mkdir(parents=True, exist_ok=True)

    plot_settlements(read_csv(src / "settlements.csv"), out)
    plot_price_ranges(read_csv(src / "order_price_range_buy.csv"),
                      read_csv(src / "order_price_range_sell.csv"), out)
    for path in sorted(src.glob("completed_contracts_*.csv")):
        agent = path.stem.replace("completed_contracts_", "")
        plot_completed(read_csv(path), agent, out)
    for path in sorted(src.glob("cumulative_liquidation_*.csv")):
        agent = path.stem.replace("cumulative_liquidation_", "")
        plot_liquidation(read_csv(path), agent, out)
    print(f"figures written to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
