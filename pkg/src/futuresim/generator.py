"""Specialized order generator.

Clusters historical settlement prices (return / rolling-volatility features)
with k-means, maps the clusters onto trading tendencies by sorted centroid
return, and turns a qualitative tendency into priced limit orders by
sampling per-class normal distributions for relative price offset and
volume fraction.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sklearn.cluster import KMeans

from .engine import Account, OrderRequest, Side, ceil_div, margin_cents

DIRECTIONS = ("strong_sell", "sell", "hold", "buy", "strong_buy")
BUY_DIRECTIONS = frozenset({"buy", "strong_buy"})
SELL_DIRECTIONS = frozenset({"sell", "strong_sell"})
URGENCY_MULTIPLIERS = {"low": 0.5, "mid": 0.75, "high": 1.0}

DEFAULT_STYLE_MULTIPLIERS = {"aggressive": 1.25, "conservative": 0.6, "custom": 1.0}
DEFAULT_VOLUME_MEAN = 0.7
DEFAULT_VOLUME_STD = 0.1
VOLATILITY_WINDOW = 5


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class PricePoint:
    timestamp: str
    settle: float
    volume: float | None = None


@dataclass
class PriceHistory:
    points: list[PricePoint]

    def __post_init__(self) -> None:
        last = None
        for p in self.points:
            if p.settle <= 0:
                raise GeneratorError(f"non-positive price at {p.timestamp}")
            if last is not None and p.timestamp <= last:
                raise GeneratorError(f"timestamps not strictly increasing at {p.timestamp}")
            last = p.timestamp

    @property
    def prices(self) -> np.ndarray:
        return np.array([p.settle for p in self.points], dtype=float)

    @property
    def volumes(self) -> np.ndarray | None:
        vols = [p.volume for p in self.points]
        if any(v is None for v in vols):
            return None
        return np.array(vols, dtype=float)

    @classmethod
    def from_csv(cls, path: str) -> "PriceHistory":
        points = []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                volume = row.get("volume")
                points.append(PricePoint(
                    timestamp=row["timestamp"],
                    settle=float(row["settle"]),
                    volume=float(volume) if volume not in (None, "") else None,
                ))
        return cls(points)


@dataclass(frozen=True)
class TendencyClass:
    mean_offset: float   # mean next-period relative price move
    std_offset: float
    mean_volume: float   # mean volume fraction of max affordable
    std_volume: float
    centroid_return: float
    size: int


@dataclass
class GeneratorModel:
    k: int
    classes: dict[str, TendencyClass]  # keyed by direction (hold excluded)
    style_multipliers: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_STYLE_MULTIPLIERS))
    degenerate: bool = False
    fit_meta: dict = field(default_factory=dict)

    def class_for(self, direction: str) -> TendencyClass:
        return self.classes[direction]

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "degenerate": self.degenerate,
            "style_multipliers": self.style_multipliers,
            "classes": {
                d: {
                    "mean_offset": c.mean_offset, "std_offset": c.std_offset,
                    "mean_volume": c.mean_volume, "std_volume": c.std_volume,
                    "centroid_return": c.centroid_return, "size": c.size,
                }
                for d, c in self.classes.items()
            },
            "fit_meta": self.fit_meta,
        }

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, doc: dict) -> "GeneratorModel":
        classes = {d: TendencyClass(**c) for d, c in doc["classes"].items()}
        return cls(k=doc["k"], classes=classes,
                   style_multipliers=dict(doc["style_multipliers"]),
                   degenerate=doc["degenerate"], fit_meta=dict(doc.get("fit_meta", {})))

    @classmethod
    def load(cls, path: str) -> "GeneratorModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def _features(prices: np.ndarray, window: int = VOLATILITY_WINDOW) -> np.ndarray:
    """Per step: (one-period log return, rolling realized volatility)."""
    rets = np.log(prices[1:] / prices[:-1])
    vols = np.array([rets[max(0, i - window + 1):i + 1].std() for i in range(len(rets))])
    return np.column_stack([rets, vols])


def cluster_features(features: np.ndarray, k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Plain k-means (k-means++ seeding, fixed seed) over feature rows.

    Returns (labels, centers).  Exposed separately so the clustering step can
    be validated on its own against closed-form cases.
    """
    km = KMeans(n_clusters=k, init="k-means++", n_init=1, max_iter=300, tol=1e-6,
                random_state=seed)
    labels = km.fit_predict(features)
    return labels, km.cluster_centers_


def fit_generator(history: PriceHistory, k: int, seed: int,
                  volume_mean: float = DEFAULT_VOLUME_MEAN,
                  volume_std: float = DEFAULT_VOLUME_STD,
                  style_multipliers: dict[str, float] | None = None) -> GeneratorModel:
    """Fit tendency classes to a settlement-price history.

    Classes are ordered by centroid return and spread over the five
    directions (lowest -> strong_sell, highest -> strong_buy), merging
    interior classes evenly when k > 5.  Per-class price-offset stats are
    the mean/std of next-period simple returns of the class's members.
    """
    if k < len(DIRECTIONS):
        raise GeneratorError(f"k must be at least {len(DIRECTIONS)}")
    prices = history.prices
    if len(prices) < k + 2:
        raise GeneratorError(f"history too short: need at least {k + 2} points")
    styles = dict(style_multipliers or DEFAULT_STYLE_MULTIPLIERS)
    meta = {
        "k": k, "seed": seed, "n_points": len(prices),
        "first": history.points[0].timestamp, "last": history.points[-1].timestamp,
        "features": "log_return, rolling_realized_volatility(w=%d)" % VOLATILITY_WINDOW,
        "offset_stats": "next_period_simple_return",
    }

    next_simple = prices[1:] / prices[:-1] - 1.0  # next-period return of step i-1
    if np.allclose(next_simple, 0.0):
        flat = TendencyClass(0.0, 0.0, volume_mean, volume_std, 0.0, len(next_simple))
        classes = {d: flat for d in DIRECTIONS if d != "hold"}
        return GeneratorModel(k=1, classes=classes, style_multipliers=styles,
                              degenerate=True, fit_meta=meta)

    feats = _features(prices)
    labels, centers = cluster_features(feats, k, seed)

    norm_volumes = None
    volumes = history.volumes
    if volumes is not None and volumes[1:].max() > 0:
        norm_volumes = volumes[1:] / volumes[1:].max()  # aligned with feature rows

    # stats use the NEXT period's return: feature row i predicts move i -> i+1
    per_cluster: list[tuple[float, list[float], list[float]]] = []
    for c in range(k):
        member_rows = np.flatnonzero(labels == c)
        follow = [next_simple[i + 1] for i in member_rows if i + 1 < len(next_simple)]
        vol_fracs = ([float(norm_volumes[i]) for i in member_rows]
                     if norm_volumes is not None else [])
        per_cluster.append((float(centers[c][0]), follow, vol_fracs))
    per_cluster.sort(key=lambda item: item[0])

    order_dirs = [d for d in DIRECTIONS if d != "hold"]
    groups = [list(g) for g in np.array_split(np.arange(k), len(order_dirs))]
    classes: dict[str, TendencyClass] = {}
    for direction, group in zip(order_dirs, groups):
        follows: list[float] = []
        vol_fracs: list[float] = []
        centroid = 0.0
        for gi in group:
            c_ret, f, vf = per_cluster[gi]
            follows.extend(f)
            vol_fracs.extend(vf)
            centroid += c_ret
        centroid /= max(len(group), 1)
        arr = np.array(follows) if follows else np.zeros(1)
        mu_v = float(np.mean(vol_fracs)) if vol_fracs else volume_mean
        sd_v = float(np.std(vol_fracs)) if vol_fracs else volume_std
        classes[direction] = TendencyClass(
            mean_offset=float(arr.mean()), std_offset=float(arr.std()),
            mean_volume=mu_v, std_volume=sd_v,
            centroid_return=centroid, size=len(follows),
        )
    return GeneratorModel(k=k, classes=classes, style_multipliers=styles, fit_meta=meta)


def max_affordable_volume(account: Account, price_cents: int, multiplier: int,
                          initial_margin: Fraction) -> int:
    """floor(available funds / per-contract initial margin at this price)."""
    if price_cents <= 0:
        raise GeneratorError("price must be positive")
    per_contract = margin_cents(price_cents, 1, multiplier, initial_margin)
    return max(0, account.available_cents // per_contract)


def _round_away_from_market(raw_cents: float, tick_cents: int, side: Side) -> int:
    """Nearest tick; exact halves round away from the market (up for buys)."""
    q = raw_cents / tick_cents
    nearest = math.floor(q + 0.5) if side is Side.BUY else math.ceil(q - 0.5)
    return int(nearest) * tick_cents


def generate_orders(model: GeneratorModel, direction: str, urgency: str, style: str,
                    market_price_cents: int, account: Account, *,
                    tick_cents: int, multiplier: int, initial_margin: Fraction,
                    exposure: float = 1.0, rng: np.random.Generator,
                    max_split: int = 3, draw_log: list | None = None) -> list[OrderRequest]:
    """Turn a tendency into 1..max_split priced limit orders.

    Price = market * (1 + offset), offset drawn from the class normal and
    sign-aligned toward execution (buys above market, sells below).  Volume
    is a clamped normal fraction of the max affordable volume at the
    sampled price, scaled by style, urgency, and the strategy's exposure.
    Raw pre-clamp draws are appended to draw_log when provided.
    """
    if direction == "hold":
        return []
    if direction not in model.classes:
        raise GeneratorError(f"unknown direction {direction!r}")
    cls = model.class_for(direction)
    side = Side.BUY if direction in BUY_DIRECTIONS else Side.SELL

    offset_draw = float(rng.normal(cls.mean_offset, cls.std_offset))
    volume_draw = float(rng.normal(
        cls.mean_volume * model.style_multipliers.get(style, 1.0), cls.std_volume))
    if draw_log is not None:
        draw_log.append({"offset": offset_draw, "volume": volume_draw})

    sign = 1.0 if side is Side.BUY else -1.0
    price_raw = market_price_cents * (1.0 + sign * abs(offset_draw))
    price = _round_away_from_market(price_raw, tick_cents, side)
    price = max(price, tick_cents)

    affordable = max_affordable_volume(account, price, multiplier, initial_margin)
    if affordable <= 0:
        return []
    frac = min(max(volume_draw, 0.0), 1.0) * URGENCY_MULTIPLIERS[urgency]
    frac *= min(max(exposure, 0.0), 1.0)
    total = min(int(round(affordable * frac)), affordable)
    if total < 1:
        return []

    n_orders = min(max_split, total)
    base, extra = divmod(total, n_orders)
    volumes = [base + (1 if i < extra else 0) for i in range(n_orders)]
    return [OrderRequest(agent_id=account.agent_id, side=side, price_cents=price,
                         volume=v) for v in volumes if v > 0]
