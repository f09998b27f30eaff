"""Futures exchange engine: order book, batch matching, margin settlement.

All money is integer cents and all sizes are integer contracts, so every
balance identity (cash conservation, position conservation, non-negative
available funds) can be checked exactly.  Margin fractions are kept as
exact rationals; requirements round up to the next cent.

One frame = submit/match turns followed by a settlement that marks every
position to the frame settlement price, enforces margin, force-liquidates
deficient accounts (crossing the residual book first, then a clearing
fallback at the settlement price) and finally expires unmatched orders.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .records import RecordSet

CLEARING_AGENT = "__clearing__"


class EngineError(Exception):
    pass


class ConfigError(EngineError):
    pass


class InvariantError(EngineError):
    """Raised when an internal conservation check fails; aborts the frame."""


class WithdrawError(EngineError):
    pass


class Side(str, Enum):
    BUY = "buy"
    SELL = "sell"


class OrderStatus(str, Enum):
    RESTING = "resting"
    PARTIALLY_FILLED = "partially_filled"
    FILLED = "filled"
    WITHDRAWN = "withdrawn"
    EXPIRED = "expired"
    REJECTED = "rejected"


def to_cents(value: float | int | str) -> int:
    """Convert a currency amount to integer cents (round half away from zero)."""
    from decimal import ROUND_HALF_UP, Decimal

    return int(Decimal(str(value)).scaleb(2).quantize(Decimal("1"), rounding=ROUND_HALF_UP))


def cents_to_currency(cents: int) -> float:
    return cents / 100.0


def ceil_div(num: int, den: int) -> int:
    return -((-num) // den)


def margin_cents(price_cents: int, volume: int, multiplier: int, fraction: Fraction) -> int:
    """Margin requirement in cents, rounded up."""
    notional = price_cents * volume * multiplier
    return ceil_div(notional * fraction.numerator, fraction.denominator)


def round_to_tick(price_cents: int | Fraction, tick_cents: int, *, half_up: bool = True) -> int:
    """Round a price to the nearest tick; ties go up (or down when half_up=False)."""
    num = Fraction(price_cents) / tick_cents
    floor = num.numerator // num.denominator
    rem = num - floor
    if rem > Fraction(1, 2) or (rem == Fraction(1, 2) and half_up):
        floor += 1
    return floor * tick_cents


@dataclass(frozen=True)
class AssetSpec:
    """Contract specification: prices are currency/tonne, sizes are contracts."""

    name: str
    tick_cents: int
    lot_tonnes: int
    multiplier: int  # currency exposure per contract per unit price move
    description: str = ""


@dataclass(frozen=True)
class TradingRules:
    initial_margin: Fraction
    maintenance_margin: Fraction
    matching_policy: str = "price_time_batch"
    price_band: float | None = None  # max |price/settlement - 1|, None disables
    fee_per_contract_cents: int = 0  # accrues per filled contract per side


@dataclass(frozen=True)
class EngineConfig:
    asset: AssetSpec
    rules: TradingRules
    d_sim: int
    d_turn: int
    initial_price_cents: int
    rng_seed: int
    disclosure: tuple[str, ...] = ()

    def validate(self) -> None:
        a, r = self.asset, self.rules
        if a.tick_cents <= 0:
            raise ConfigError("tick size must be positive")
        if a.lot_tonnes <= 0 or a.multiplier <= 0:
            raise ConfigError("lot size and multiplier must be positive")
        if not (0 < r.maintenance_margin <= r.initial_margin < 1):
            raise ConfigError("need 0 < maintenance <= initial < 1 for margin fractions")
        if self.d_sim < 1 or self.d_turn < 1:
            raise ConfigError("d_sim and d_turn must be >= 1")
        if self.initial_price_cents <= 0 or self.initial_price_cents % a.tick_cents != 0:
            raise ConfigError("initial price must be a positive multiple of the tick")
        if r.price_band is not None and r.price_band <= 0:
            raise ConfigError("price band must be positive when set")
        if r.fee_per_contract_cents < 0:
            raise ConfigError("fee per contract cannot be negative")


@dataclass
class Account:
    """Trading account.  cash is total funds; margin/reservations are liens on it.

    basis_cents is the signed mark-value of the open position at the last
    settlement (adjusted by trades since), so marking to price S moves
    position*S*multiplier - basis through cash and resets the basis.
    """

    agent_id: str
    cash_cents: int
    position: int = 0
    basis_cents: int = 0
    margin_posted_cents: int = 0
    reserved_cents: int = 0
    realized_pnl_cents: int = 0
    fees_accrued_cents: int = 0
    liquidated: bool = False
    is_clearing: bool = False

    @property
    def available_cents(self) -> int:
        return self.cash_cents - self.margin_posted_cents - self.reserved_cents

    def unrealized_cents(self, price_cents: int, multiplier: int) -> int:
        return self.position * price_cents * multiplier - self.basis_cents

    def avg_entry_price_cents(self, multiplier: int) -> float | None:
        if self.position == 0:
            return None
        return self.basis_cents / (self.position * multiplier)

    def apply_trade(self, signed_volume: int, price_cents: int, multiplier: int) -> None:
        self.position += signed_volume
        self.basis_cents += signed_volume * price_cents * multiplier

    def mark(self, price_cents: int, multiplier: int) -> int:
        """Mark to price; returns the cash delta (realized variation)."""
        target = self.position * price_cents * multiplier
        delta = target - self.basis_cents
        self.cash_cents += delta
        self.realized_pnl_cents += delta
        self.basis_cents = target
        return delta

    def view(self, multiplier: int, last_price_cents: int) -> dict:
        return {
            "agent": self.agent_id,
            "cash_cents": self.cash_cents,
            "margin_posted_cents": self.margin_posted_cents,
            "reserved_cents": self.reserved_cents,
            "available_cents": self.available_cents,
            "position": self.position,
            "basis_cents": self.basis_cents,
            "realized_pnl_cents": self.realized_pnl_cents,
            "unrealized_cents": self.unrealized_cents(last_price_cents, multiplier),
            "avg_entry_price_cents": self.avg_entry_price_cents(multiplier),
            "liquidated": self.liquidated,
        }


@dataclass
class OrderRequest:
    """A limit order.  The engine assigns id/frame/turn/arrival on acceptance."""

    agent_id: str
    side: Side
    price_cents: int
    volume: int
    order_id: str | None = None
    frame: int = 0
    turn: int = 0
    arrival: int = 0
    residual: int = 0
    status: OrderStatus = OrderStatus.RESTING
    origin: str = "agent"  # agent | human | liquidation
    reserve_per_contract: int = 0

    def sort_key(self) -> tuple:
        price = -self.price_cents if self.side is Side.BUY else self.price_cents
        return (price, self.arrival)


@dataclass(frozen=True)
class Deal:
    deal_id: str
    buy_order_id: str
    sell_order_id: str
    buy_agent: str
    sell_agent: str
    price_cents: int
    volume: int
    frame: int
    turn: int
    forced_liquidation: bool = False


@dataclass
class SubmitResult:
    accepted: bool
    order: OrderRequest
    reason: str | None = None


@dataclass
class SettlementReport:
    frame: int
    settlement_price_cents: int
    cash_deltas_cents: dict[str, int]
    liquidations: list[dict]
    shortfalls: list[dict]
    expired_order_ids: list[str]
    margin_posted_cents: dict[str, int]

    def conservation_residual_cents(self) -> int:
        """Sum of cash deltas minus socialized shortfalls; zero when books balance."""
        return sum(self.cash_deltas_cents.values()) - sum(
            s["amount_cents"] for s in self.shortfalls
        )


class OrderBook:
    """Two price-time sorted sides of resting orders."""

    def __init__(self) -> None:
        self.bids: list[OrderRequest] = []
        self.asks: list[OrderRequest] = []

    def side(self, side: Side) -> list[OrderRequest]:
        return self.bids if side is Side.BUY else self.asks

    def insert(self, order: OrderRequest) -> None:
        bisect.insort(self.side(order.side), order, key=lambda o: o.sort_key())

    def remove(self, order: OrderRequest) -> None:
        self.side(order.side).remove(order)

    def best(self, side: Side) -> OrderRequest | None:
        book = self.side(side)
        return book[0] if book else None

    def top(self) -> dict:
        bb, ba = self.best(Side.BUY), self.best(Side.SELL)
        return {
            "best_bid": None if bb is None else {"price_cents": bb.price_cents, "volume": bb.residual},
            "best_ask": None if ba is None else {"price_cents": ba.price_cents, "volume": ba.residual},
            "bid_count": len(self.bids),
            "ask_count": len(self.asks),
        }

    def all_orders(self) -> list[OrderRequest]:
        return list(self.bids) + list(self.asks)


class Engine:
    """Single-asset futures exchange.

    Not thread safe by itself: callers serialize mutations (the service layer
    wraps every mutating call in one lock, which is the single-writer queue).
    """

    def __init__(self, config: EngineConfig, accounts: list[Account],
                 records: RecordSet | None = None):
        config.validate()
        self.config = config
        self.records = records if records is not None else RecordSet()
        self.accounts: dict[str, Account] = {}
        longs = shorts = 0
        for acct in accounts:
            if acct.agent_id in self.accounts:
                raise ConfigError(f"duplicate agent id {acct.agent_id!r}")
            if acct.cash_cents < 0:
                raise ConfigError(f"negative initial cash for {acct.agent_id!r}")
            longs += max(acct.position, 0)
            shorts += max(-acct.position, 0)
            # carried-in positions enter marked at the initial price
            acct.basis_cents = acct.position * config.initial_price_cents * config.asset.multiplier
            self.accounts[acct.agent_id] = acct
        if longs != shorts:
            raise ConfigError("initial long and short positions must balance")
        clearing = Account(CLEARING_AGENT, cash_cents=0, is_clearing=True)
        self.accounts[CLEARING_AGENT] = clearing

        self.book = OrderBook()
        self.frame = 0
        self.turn = 0
        self.in_submission = False
        self.halted = False
        self.last_price_cents = config.initial_price_cents
        self.settlement_price_cents = config.initial_price_cents
        self.open_interest = longs
        self.frame_deals: list[Deal] = []
        self.orders: dict[str, OrderRequest] = {}
        self._arrival = 0
        self._order_n = 0
        self._deal_n = 0
        self._liq_n = 0

    # ----- frame/turn lifecycle -------------------------------------------

    def begin_frame(self, frame: int) -> None:
        self.frame = frame
        self.turn = 0
        self.frame_deals = []

    def begin_turn(self, turn: int) -> None:
        self.turn = turn
        self.in_submission = True

    # ----- order intake ----------------------------------------------------

    def submit_orders(self, requests: list[OrderRequest]) -> list[SubmitResult]:
        results = [self._submit_one(req) for req in requests]
        return results

    def _submit_one(self, req: OrderRequest) -> SubmitResult:
        reason = self._validate(req)
        if reason is not None:
            req.status = OrderStatus.REJECTED
            self.records.append(
                "order_rejected", frame=self.frame, turn=self.turn,
                agent=req.agent_id, side=req.side.value, price_cents=req.price_cents,
                volume=req.volume, reason=reason, origin=req.origin,
            )
            return SubmitResult(False, req, reason)

        acct = self.accounts[req.agent_id]
        per_contract = margin_cents(req.price_cents, 1, self.config.asset.multiplier,
                                    self.config.rules.initial_margin)
        req.reserve_per_contract = per_contract
        acct.reserved_cents += per_contract * req.volume

        self._order_n += 1
        self._arrival += 1
        req.order_id = f"o{self._order_n}"
        req.frame, req.turn, req.arrival = self.frame, self.turn, self._arrival
        req.residual = req.volume
        req.status = OrderStatus.RESTING
        self.orders[req.order_id] = req
        self.book.insert(req)
        self.records.append(
            "order_accepted", frame=self.frame, turn=self.turn,
            order_id=req.order_id, agent=req.agent_id, side=req.side.value,
            price_cents=req.price_cents, volume=req.volume, arrival=req.arrival,
            origin=req.origin,
        )
        return SubmitResult(True, req)

    def _validate(self, req: OrderRequest) -> str | None:
        if not self.in_submission:
            return "market not in an order submission window"
        if req.agent_id not in self.accounts or req.agent_id == CLEARING_AGENT:
            return f"unknown agent {req.agent_id!r}"
        if req.volume < 1:
            return "volume must be at least 1 contract"
        if req.price_cents <= 0:
            return "price must be positive"
        if req.price_cents % self.config.asset.tick_cents != 0:
            return "price not aligned to tick"
        band = self.config.rules.price_band
        if band is not None:
            ref = self.settlement_price_cents
            if abs(req.price_cents - ref) > band * ref:
                return f"price outside band of {band:.0%} around settlement"
        acct = self.accounts[req.agent_id]
        need = margin_cents(req.price_cents, req.volume, self.config.asset.multiplier,
                            self.config.rules.initial_margin)
        if need > acct.available_cents:
            return "insufficient available funds for initial margin"
        return None

    # ----- matching ----------------------------------------------------------

    def match_turn(self) -> list[Deal]:
        """Batch-cross the book: best bid vs best ask while they overlap.

        Deal price is the earlier-arrival (resting) order's limit; price-time
        priority on both sides.
        """
        self.in_submission = False
        deals: list[Deal] = []
        while True:
            bid, ask = self.book.best(Side.BUY), self.book.best(Side.SELL)
            if bid is None or ask is None or bid.price_cents < ask.price_cents:
                break
            resting = bid if bid.arrival < ask.arrival else ask
            volume = min(bid.residual, ask.residual)
            deals.append(self._execute_fill(bid, ask, resting.price_cents, volume))
        return deals

    def _execute_fill(self, bid: OrderRequest, ask: OrderRequest, price_cents: int,
                      volume: int, forced: bool = False) -> Deal:
        self._deal_n += 1
        deal = Deal(
            deal_id=f"d{self._deal_n}",
            buy_order_id=bid.order_id or "?",
            sell_order_id=ask.order_id or "?",
            buy_agent=bid.agent_id,
            sell_agent=ask.agent_id,
            price_cents=price_cents,
            volume=volume,
            frame=self.frame,
            turn=self.turn,
            forced_liquidation=forced,
        )
        fee = self.config.rules.fee_per_contract_cents
        for order, signed in ((bid, volume), (ask, -volume)):
            self._consume(order, volume)
            acct = self.accounts[order.agent_id]
            acct.apply_trade(signed, price_cents, self.config.asset.multiplier)
            if fee and not acct.is_clearing:
                acct.fees_accrued_cents += fee * volume
        self.last_price_cents = price_cents
        self.open_interest = sum(max(a.position, 0) for a in self.accounts.values())
        if not forced:
            self.frame_deals.append(deal)
        self.records.append(
            "deal", frame=self.frame, turn=self.turn,
            deal_id=deal.deal_id, buy_order_id=deal.buy_order_id,
            sell_order_id=deal.sell_order_id, buy_agent=deal.buy_agent,
            sell_agent=deal.sell_agent, price_cents=deal.price_cents,
            volume=deal.volume, forced_liquidation=forced,
        )
        return deal

    def _consume(self, order: OrderRequest, volume: int) -> None:
        """Reduce an order's residual after a fill; reservation becomes margin."""
        if order.origin == "liquidation":
            return  # synthetic crossing order, never in the book, holds no margin
        acct = self.accounts[order.agent_id]
        release = order.reserve_per_contract * volume
        acct.reserved_cents -= release
        acct.margin_posted_cents += release
        order.residual -= volume
        if order.residual == 0:
            order.status = OrderStatus.FILLED
            self.book.remove(order)
        else:
            order.status = OrderStatus.PARTIALLY_FILLED

    # ----- withdrawal --------------------------------------------------------

    def withdraw_orders(self, agent_id: str, order_ids: list[str]) -> int:
        count = 0
        for oid in order_ids:
            order = self.orders.get(oid)
            if order is None:
                raise WithdrawError(f"unknown order id {oid!r}")
            if order.agent_id != agent_id:
                raise WithdrawError(f"order {oid!r} not owned by {agent_id!r}")
            if order.status not in (OrderStatus.RESTING, OrderStatus.PARTIALLY_FILLED):
                raise WithdrawError(f"order {oid!r} already {order.status.value}")
            self._remove_resting(order, OrderStatus.WITHDRAWN, reason="agent")
            count += 1
        return count

    def _remove_resting(self, order: OrderRequest, status: OrderStatus, reason: str) -> None:
        acct = self.accounts[order.agent_id]
        acct.reserved_cents -= order.reserve_per_contract * order.residual
        self.book.remove(order)
        order.status = status
        self.records.append(
            "withdrawal", frame=self.frame, turn=self.turn or None,
            order_id=order.order_id, agent=order.agent_id,
            residual=order.residual, reason=reason,
        )

    # ----- settlement --------------------------------------------------------

    def compute_settlement_price(self) -> int:
        """Volume-weighted average of the frame's deals, tick-rounded half-up;
        carries the previous settlement price when the frame had no deals."""
        if not self.frame_deals:
            return self.settlement_price_cents
        value = sum(d.price_cents * d.volume for d in self.frame_deals)
        volume = sum(d.volume for d in self.frame_deals)
        return round_to_tick(Fraction(value, volume), self.config.asset.tick_cents)

    def settle_frame(self) -> SettlementReport:
        """End-of-frame settlement: mark to market, margin-call and liquidate,
        expire the residual book, re-post margins, socialize any shortfall."""
        self.in_submission = False
        mult = self.config.asset.multiplier
        price = self.compute_settlement_price()
        self.settlement_price_cents = price

        before = {aid: a.cash_cents for aid, a in self.accounts.items()}
        for acct in self.accounts.values():
            acct.mark(price, mult)

        fee_total = 0
        for acct in self.accounts.values():
            if acct.fees_accrued_cents:
                acct.cash_cents -= acct.fees_accrued_cents
                acct.realized_pnl_cents -= acct.fees_accrued_cents
                fee_total += acct.fees_accrued_cents
                acct.fees_accrued_cents = 0
        if fee_total:
            clearing = self.accounts[CLEARING_AGENT]
            clearing.cash_cents += fee_total
            clearing.realized_pnl_cents += fee_total

        liquidations, shortfalls = self._force_liquidations(price)

        expired: list[str] = []
        for order in self.book.all_orders():
            self._remove_resting(order, OrderStatus.EXPIRED, reason="expired")
            expired.append(order.order_id or "?")

        init = self.config.rules.initial_margin
        margins: dict[str, int] = {}
        for acct in self.accounts.values():
            if acct.is_clearing:
                acct.margin_posted_cents = 0
            else:
                req = margin_cents(price, abs(acct.position), mult, init)
                acct.margin_posted_cents = min(req, max(acct.cash_cents, 0))
            margins[acct.agent_id] = acct.margin_posted_cents

        for event in shortfalls:
            self.records.append("shortfall", frame=self.frame,
                                agent=event["agent"], amount_cents=event["amount_cents"])

        deltas = {aid: a.cash_cents - before[aid] for aid, a in self.accounts.items()}
        report = SettlementReport(
            frame=self.frame,
            settlement_price_cents=price,
            cash_deltas_cents=deltas,
            liquidations=liquidations,
            shortfalls=shortfalls,
            expired_order_ids=expired,
            margin_posted_cents=margins,
        )
        if report.conservation_residual_cents() != 0:
            raise InvariantError(
                f"cash conservation violated in frame {self.frame}: "
                f"residual {report.conservation_residual_cents()} cents"
            )
        if sum(a.position for a in self.accounts.values()) != 0:
            raise InvariantError(f"position conservation violated in frame {self.frame}")

        self.records.append(
            "settlement", frame=self.frame, price_cents=price,
            accounts={
                aid: {
                    "cash_delta_cents": deltas[aid],
                    "cash_cents": a.cash_cents,
                    "margin_posted_cents": a.margin_posted_cents,
                    "position": a.position,
                    "basis_cents": a.basis_cents,
                    "realized_pnl_cents": a.realized_pnl_cents,
                }
                for aid, a in sorted(self.accounts.items())
            },
            expired_order_ids=expired,
        )
        for liq in liquidations:
            self.records.append("liquidation", frame=self.frame, **liq)
        return report

    def _margin_deficit(self, acct: Account, price: int) -> int:
        req = margin_cents(price, abs(acct.position), self.config.asset.multiplier,
                           self.config.rules.initial_margin)
        return req - acct.cash_cents

    def _force_liquidations(self, price: int) -> tuple[list[dict], list[dict]]:
        """Liquidate accounts whose equity breaches maintenance margin.

        Largest shortfall first.  Crossing orders hit the residual book at the
        best opposing price; once the book side is exhausted the remainder
        closes against the clearing account at the settlement price.
        """
        mult = self.config.asset.multiplier
        maint = self.config.rules.maintenance_margin
        liquidations: list[dict] = []
        shortfalls: list[dict] = []

        while True:
            breached = []
            for acct in self.accounts.values():
                if acct.is_clearing or acct.position == 0:
                    continue
                need = margin_cents(price, abs(acct.position), mult, maint)
                if acct.cash_cents < need:
                    breached.append((self._margin_deficit(acct, price), acct.agent_id))
            if not breached:
                break
            breached.sort(key=lambda item: (-item[0], item[1]))
            acct = self.accounts[breached[0][1]]
            liquidations.append(self._liquidate_account(acct, price))

        # a defaulted account (flat or liquidated) may still owe variation
        # margin it cannot pay; the difference is socialized, not carried
        for acct in sorted(self.accounts.values(), key=lambda a: a.agent_id):
            if not acct.is_clearing and acct.cash_cents < 0:
                shortfalls.append({"agent": acct.agent_id, "amount_cents": -acct.cash_cents})
                acct.cash_cents = 0
                acct.liquidated = True
        return liquidations, shortfalls

    def _liquidate_account(self, acct: Account, price: int) -> dict:
        mult = self.config.asset.multiplier
        init = self.config.rules.initial_margin
        closing = Side.SELL if acct.position > 0 else Side.BUY
        opposing = Side.SELL if closing is Side.BUY else Side.BUY
        deal_ids: list[str] = []
        volume_total = 0
        proceeds = 0
        # an account that already went through liquidation once is closed out
        # entirely on the next breach instead of being trimmed again
        close_out = acct.liquidated

        while acct.position != 0 and (close_out or self._margin_deficit(acct, price) > 0):
            remaining = abs(acct.position)
            book_order = self.book.best(opposing)
            if book_order is not None and book_order.agent_id == acct.agent_id:
                # an account cannot absorb its own liquidation; pull the order
                self._remove_resting(book_order, OrderStatus.WITHDRAWN, reason="agent")
                continue
            if book_order is None:
                fill_price, available = price, remaining
            else:
                fill_price, available = book_order.price_cents, book_order.residual

            relief = margin_cents(price, 1, mult, init)  # margin freed per closed contract
            if closing is Side.BUY:
                relief -= (fill_price - price) * mult
            else:
                relief -= (price - fill_price) * mult
            if close_out or relief <= 0:
                volume = min(available, remaining)
            else:
                needed = ceil_div(self._margin_deficit(acct, price), relief)
                volume = max(1, min(available, remaining, needed))

            self._liq_n += 1
            own = OrderRequest(
                agent_id=acct.agent_id, side=closing, price_cents=fill_price,
                volume=volume, order_id=f"liq{self._liq_n}", origin="liquidation",
                residual=volume, status=OrderStatus.FILLED,
            )
            if book_order is None:
                counter = OrderRequest(
                    agent_id=CLEARING_AGENT, side=opposing, price_cents=fill_price,
                    volume=volume, order_id=f"liq{self._liq_n}c", origin="liquidation",
                    residual=volume, status=OrderStatus.FILLED,
                )
            else:
                counter = book_order
            pair = (own, counter) if closing is Side.BUY else (counter, own)
            deal = self._execute_fill(pair[0], pair[1], fill_price, volume, forced=True)
            # realize the fill against the settlement mark immediately
            for agent in (deal.buy_agent, deal.sell_agent):
                self.accounts[agent].mark(price, mult)
            deal_ids.append(deal.deal_id)
            volume_total += volume
            proceeds += fill_price * volume * mult

        acct.liquidated = True
        return {
            "agent": acct.agent_id,
            "volume": volume_total,
            "proceeds_cents": proceeds,
            "deal_ids": deal_ids,
        }

    # ----- views ---------------------------------------------------------------

    def snapshot(self) -> dict:
        """Read-only market view: prices, top of book, disclosed major positions."""
        return {
            "frame": self.frame,
            "turn": self.turn,
            "last_price_cents": self.last_price_cents,
            "settlement_price_cents": self.settlement_price_cents,
            "open_interest": self.open_interest,
            "book": self.book.top(),
            "major_positions": {
                aid: self.accounts[aid].position
                for aid in self.config.disclosure
                if aid in self.accounts
            },
        }

    def account_view(self, agent_id: str) -> dict:
        if agent_id not in self.accounts:
            raise EngineError(f"unknown agent {agent_id!r}")
        return self.accounts[agent_id].view(self.config.asset.multiplier, self.last_price_cents)

    def resting_orders(self, agent_id: str) -> list[OrderRequest]:
        return [o for o in self.book.all_orders() if o.agent_id == agent_id]

    def check_position_conservation(self) -> bool:
        return sum(a.position for a in self.accounts.values()) == 0
