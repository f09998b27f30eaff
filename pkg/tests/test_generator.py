"""Order generator: k-means fitting, affordability math, order sampling."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from futuresim.engine import Account, Side
from futuresim.generator import (
    GeneratorError,
    GeneratorModel,
    PriceHistory,
    PricePoint,
    TendencyClass,
    _features,
    cluster_features,
    fit_generator,
    generate_orders,
    max_affordable_volume,
)

INIT_MARGIN = Fraction(1, 8)


def history_from_prices(prices, volumes=None) -> PriceHistory:
    points = []
    for i, p in enumerate(prices):
        v = None if volumes is None else volumes[i]
        points.append(PricePoint(timestamp=f"2021-01-{i + 1:03d}", settle=float(p), volume=v))
    return PriceHistory(points)


def gbm_history(n=128, seed=3, drift=0.0005, vol=0.015, start=29_000.0) -> PriceHistory:
    rng = np.random.default_rng(seed)
    rets = rng.normal(drift, vol, size=n - 1)
    prices = start * np.exp(np.concatenate([[0.0], np.cumsum(rets)]))
    return history_from_prices(prices)


def make_model(mu_p=0.05, sd_p=0.0, mu_v=0.7, sd_v=0.0) -> GeneratorModel:
    cls = TendencyClass(mean_offset=mu_p, std_offset=sd_p, mean_volume=mu_v,
                        std_volume=sd_v, centroid_return=mu_p, size=10)
    return GeneratorModel(k=5, classes={d: cls for d in
                                        ("strong_sell", "sell", "buy", "strong_buy")})


def account(cash_cents=10**9) -> Account:
    return Account(agent_id="t", cash_cents=cash_cents)


# ------------------------------------------------------------------ fitting


def test_fit_constant_series_is_degenerate_and_holds_price():
    model = fit_generator(history_from_prices([100.0] * 40), k=5, seed=1)
    assert model.degenerate
    orders = generate_orders(
        model, "buy", "high", "aggressive", 10_000, account(),
        tick_cents=1, multiplier=1, initial_margin=INIT_MARGIN,
        rng=np.random.default_rng(0))
    assert all(o.price_cents == 10_000 for o in orders)  # zero offset


def test_two_regime_clustering_opposite_sign_centroids():
    # alternating +1%/-1% blocks: k=2 centroids must straddle zero
    prices = [1000.0]
    for block in range(8):
        step = 1.01 if block % 2 == 0 else 0.99
        for _ in range(6):
            prices.append(prices[-1] * step)
    feats = _features(np.array(prices))
    labels, centers = cluster_features(feats, k=2, seed=0)
    rets = sorted(centers[:, 0])
    assert rets[0] < 0 < rets[1]
    # closed-form check: each centroid's return equals its members' mean
    feat_rets = feats[:, 0]
    for c in range(2):
        member_mean = feat_rets[labels == c].mean()
        assert centers[c][0] == pytest.approx(member_mean, abs=1e-9)


def test_fit_deterministic_same_seed():
    hist = gbm_history()
    m1 = fit_generator(hist, k=5, seed=11)
    m2 = fit_generator(hist, k=5, seed=11)
    assert m1.to_json() == m2.to_json()


def test_fit_scale_invariant_for_power_of_two_scaling():
    hist = gbm_history(seed=9)
    scaled = history_from_prices(hist.prices * 4.0)
    m1 = fit_generator(hist, k=5, seed=2)
    m2 = fit_generator(scaled, k=5, seed=2)
    for d in m1.classes:
        assert m1.classes[d].mean_offset == pytest.approx(m2.classes[d].mean_offset, rel=1e-12)
        assert m1.classes[d].centroid_return == pytest.approx(
            m2.classes[d].centroid_return, rel=1e-12)


def test_fit_rejects_short_history_and_small_k():
    with pytest.raises(GeneratorError, match="too short"):
        fit_generator(history_from_prices([100, 101, 102]), k=5, seed=1)
    with pytest.raises(GeneratorError, match="at least"):
        fit_generator(gbm_history(), k=3, seed=1)


def test_fit_merges_classes_when_k_exceeds_directions():
    model = fit_generator(gbm_history(n=200), k=9, seed=5)
    assert set(model.classes) == {"strong_sell", "sell", "buy", "strong_buy"}
    offsets = [model.classes[d].centroid_return
               for d in ("strong_sell", "sell", "buy", "strong_buy")]
    assert offsets == sorted(offsets)  # ordering by centroid return preserved


def test_fit_roundtrips_through_json(tmp_path):
    model = fit_generator(gbm_history(), k=5, seed=4)
    path = tmp_path / "model.json"
    model.save(str(path))
    again = GeneratorModel.load(str(path))
    assert again.to_json() == model.to_json()


def test_fit_uses_volume_column_when_present():
    prices = gbm_history(n=60).prices
    volumes = np.linspace(100, 500, 60)
    model = fit_generator(history_from_prices(prices, volumes), k=5, seed=1)
    defaults = fit_generator(history_from_prices(prices), k=5, seed=1)
    assert any(model.classes[d].mean_volume != defaults.classes[d].mean_volume
               for d in model.classes)


def test_history_validation():
    with pytest.raises(GeneratorError, match="non-positive"):
        history_from_prices([100.0, -5.0])
    with pytest.raises(GeneratorError, match="increasing"):
        PriceHistory([PricePoint("2021-01-02", 1.0), PricePoint("2021-01-01", 2.0)])


# ------------------------------------------------------------- affordability


def test_max_affordable_matches_hand_arithmetic():
    # 1,000,000 currency / (29,000 * 1 * 0.125) = 275.86... -> 275
    acct = account(cash_cents=100_000_000)
    assert max_affordable_volume(acct, 2_900_000, 1, INIT_MARGIN) == 275


def test_max_affordable_zero_funds():
    assert max_affordable_volume(account(cash_cents=0), 100, 1, INIT_MARGIN) == 0


def test_max_affordable_just_below_one_contract():
    per_contract = 2_900_000 * 1 // 8  # 362,500 cents
    acct = account(cash_cents=per_contract - 1)
    assert max_affordable_volume(acct, 2_900_000, 1, INIT_MARGIN) == 0


# ---------------------------------------------------------------- generation


def test_zero_variance_buy_emits_exact_five_percent_markup():
    model = make_model(mu_p=0.05, sd_p=0.0, mu_v=0.7, sd_v=0.0)
    orders = generate_orders(
        model, "buy", "high", "custom", 2_900_000, account(),
        tick_cents=1_000, multiplier=1, initial_margin=INIT_MARGIN,
        rng=np.random.default_rng(1))
    assert orders and all(o.price_cents == 3_045_000 for o in orders)  # 1.05x
    assert all(o.side is Side.BUY for o in orders)


def test_zero_variance_sell_discounts():
    model = make_model(mu_p=0.05, sd_p=0.0)
    orders = generate_orders(
        model, "sell", "high", "custom", 2_900_000, account(),
        tick_cents=1_000, multiplier=1, initial_margin=INIT_MARGIN,
        rng=np.random.default_rng(1))
    assert orders and all(o.price_cents == 2_755_000 for o in orders)  # 0.95x


def test_hold_generates_nothing():
    model = make_model()
    assert generate_orders(model, "hold", "high", "custom", 100, account(),
                           tick_cents=1, multiplier=1, initial_margin=INIT_MARGIN,
                           rng=np.random.default_rng(0)) == []


def test_zero_affordable_volume_empty():
    model = make_model()
    orders = generate_orders(model, "buy", "high", "custom", 1_000_000,
                             account(cash_cents=10),
                             tick_cents=1, multiplier=1, initial_margin=INIT_MARGIN,
                             rng=np.random.default_rng(0))
    assert orders == []


def test_pre_clamp_draws_are_normal_ks():
    model = make_model(mu_p=0.03, sd_p=0.01, mu_v=0.6, sd_v=0.2)
    rng = np.random.default_rng(42)
    draws: list[dict] = []
    for _ in range(10_000):
        generate_orders(model, "buy", "mid", "custom", 100_000, account(),
                        tick_cents=100, multiplier=1, initial_margin=INIT_MARGIN,
                        rng=rng, draw_log=draws)
    offsets = np.array([d["offset"] for d in draws])
    stat, pvalue = stats.kstest(offsets, "norm", args=(0.03, 0.01))
    assert pvalue > 0.01


def test_deterministic_under_seed():
    model = make_model(mu_p=0.02, sd_p=0.01, mu_v=0.5, sd_v=0.2)
    runs = []
    for _ in range(2):
        orders = generate_orders(model, "strong_buy", "high", "aggressive",
                                 50_000, account(), tick_cents=10, multiplier=1,
                                 initial_margin=INIT_MARGIN,
                                 rng=np.random.default_rng(99))
        runs.append([(o.side.value, o.price_cents, o.volume) for o in orders])
    assert runs[0] == runs[1]


def test_aggressive_high_urgency_mean_volume_fraction_above_075():
    model = make_model(mu_p=0.01, sd_p=0.005, mu_v=0.7, sd_v=0.1)
    rng = np.random.default_rng(7)
    fracs = []
    for _ in range(2000):
        acct = account(cash_cents=10**9)
        orders = generate_orders(model, "strong_buy", "high", "aggressive",
                                 100_000, acct, tick_cents=100, multiplier=1,
                                 initial_margin=INIT_MARGIN, rng=rng)
        if not orders:
            fracs.append(0.0)
            continue
        afford = max_affordable_volume(acct, orders[0].price_cents, 1, INIT_MARGIN)
        fracs.append(sum(o.volume for o in orders) / afford)
    assert np.mean(fracs) > 0.75


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(["buy", "strong_buy", "sell", "strong_sell"]),
       st.sampled_from(["low", "mid", "high"]),
       st.integers(min_value=0, max_value=10**8),
       st.integers(min_value=0, max_value=2**32 - 1))
def test_affordability_and_direction_properties(direction, urgency, cash, seed):
    model = make_model(mu_p=0.02, sd_p=0.05, mu_v=0.8, sd_v=0.3)
    acct = account(cash_cents=cash)
    orders = generate_orders(model, direction, urgency, "aggressive", 10_000, acct,
                             tick_cents=10, multiplier=1, initial_margin=INIT_MARGIN,
                             rng=np.random.default_rng(seed))
    if not orders:
        return
    price = orders[0].price_cents
    assert sum(o.volume for o in orders) <= max_affordable_volume(
        acct, price, 1, INIT_MARGIN)
    expected = Side.BUY if direction in ("buy", "strong_buy") else Side.SELL
    assert all(o.side is expected for o in orders)
    assert all(o.price_cents % 10 == 0 and o.price_cents > 0 for o in orders)
    assert 1 <= len(orders) <= 3


def test_urgency_monotone_with_identical_draws():
    model = make_model(mu_p=0.02, sd_p=0.0, mu_v=0.6, sd_v=0.0)
    totals = {}
    for urgency in ("low", "mid", "high"):
        orders = generate_orders(model, "buy", urgency, "custom", 10_000, account(),
                                 tick_cents=10, multiplier=1, initial_margin=INIT_MARGIN,
                                 rng=np.random.default_rng(5))
        totals[urgency] = sum(o.volume for o in orders)
    assert totals["low"] <= totals["mid"] <= totals["high"]
