#!/usr/bin/env python3
"""Generate the synthetic settlement-price histories bundled with the
scenarios (scenarios/data/*.csv).

Real exchange stream data is not redistributable, so these series are
regime-switching synthetics: calm stretches punctuated by persistent up and
down runs, which gives the k-means fit well-separated tendency classes.
Deterministic per seed; re-running reproduces the committed files.
"""

from __future__ import annotations

import csv
from datetime import date, timedelta
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "scenarios" / "data"


def regime_series(n: int, end_price: float, seed: int,
                  calm_vol: float = 0.003,
                  mild_up: float = 0.010, strong_up: float = 0.058,
                  down_drift: float = -0.025, burst_vol: float = 0.004) -> np.ndarray:
    """Random-length calm / mild-up / strong-up / down runs; rescaled to end
    at end_price so scenarios can anchor their initial price to the history.

    Four regimes keep the five k-means classes well separated: the sorted
    class offsets land near (down, calm, mild-up, strong-up)."""
    rng = np.random.default_rng(seed)
    rets = np.empty(n - 1)
    i = 0
    while i < n - 1:
        roll = rng.random()
        if roll < 0.45:
            length, mu, sigma = rng.integers(4, 9), 0.0, calm_vol
        elif roll < 0.70:
            length, mu, sigma = rng.integers(3, 6), mild_up, burst_vol
        elif roll < 0.85:
            length, mu, sigma = rng.integers(3, 6), strong_up, burst_vol
        else:
            length, mu, sigma = rng.integers(3, 6), down_drift, burst_vol
        length = int(min(length, n - 1 - i))
        rets[i:i + length] = rng.normal(mu, sigma, size=length)
        i += length
    prices = np.exp(np.concatenate([[0.0], np.cumsum(rets)]))
    return prices * (end_price / prices[-1])


def write_csv(path: Path, prices: np.ndarray, start: date, volume_seed: int | None = None):
    path.parent.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(volume_seed) if volume_seed is not None else None
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "settle", "volume"] if rng is not None
                        else ["timestamp", "settle"])
        day = start
        for p in prices:
            row = [day.isoformat(), f"{p:.2f}"]
            if rng is not None:
                row.append(str(int(rng.integers(2_000, 40_000))))
            writer.writerow(row)
            day += timedelta(days=1)


CONTRACTS = {
    # contract code -> (end price level, seed, include volume column)
    "nickel": (29_000.0, 20220307, False),
    "sc2501": (534.0, 2501, True),
    "ta501": (4_812.0, 501, True),
    "ih2412": (2_388.0, 2412, True),
    "gcg2502": (2_630.0, 2502, True),
    "ch2503": (792.0, 2503, True),
    "sf2503": (6_364.0, 2603, True),
}


def main() -> None:
    for name, (end_price, seed, with_volume) in CONTRACTS.items():
        path = OUT / f"{name}_128d.csv"
        prices = regime_series(128, end_price, seed)
        write_csv(path, prices, start=date(2021, 9, 1),
                  volume_seed=seed + 1 if with_volume else None)
        print(f"wrote {path} ({len(prices)} points, last={prices[-1]:.2f})")


if __name__ == "__main__":
    main()
