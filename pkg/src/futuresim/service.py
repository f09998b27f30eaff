"""Run orchestration service: CLI-facing controller plus the HTTP/WebSocket API.

Each run owns one engine driven by a runner thread; the console submits
human-proxy orders only while a turn's submission window is open, through
the same engine validation path agents use.  Every streamed WebSocket frame
is an event already appended to the persisted log, so the stream is a
prefix-consistent view of the log.
"""

from __future__ import annotations

import asyncio
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .agents import HaltRun, NewsItem, SimulationRunner
from .engine import OrderRequest, Side, WithdrawError, to_cents
from .metrics import (
    bid_over_ask_rounds,
    growth_rate,
    liquidation_series,
    settlement_prices,
    trading_behaviour_index,
)
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario


class InvalidState(Exception):
    pass


class ValidationFailure(Exception):
    pass


@dataclass
class RunHandle:
    run_id: str
    scenario_name: str
    state: str = "configuring"  # configuring|running|paused|halted|finished
    frame: int = 0
    turn: int = 0
    phase: str = "idle"
    created_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat())
    record_log_path: str | None = None

    def view(self, last_seq: int, window_open: bool, window_ends_in: float | None) -> dict:
        return {
            "run_id": self.run_id,
            "scenario": self.scenario_name,
            "state": self.state,
            "frame": self.frame,
            "turn": self.turn,
            "phase": self.phase,
            "created_at": self.created_at,
            "record_log_path": self.record_log_path,
            "last_seq": last_seq,
            "window_open": window_open,
            "window_ends_in_s": window_ends_in,
        }


class RunController:
    """State machine around one SimulationRunner thread."""

    def __init__(self, run_id: str, scenario: Scenario, *, seed: int | None = None,
                 ablation: str | None = None, turn_seconds: float = 0.0,
                 record_log_path: str | None = None):
        self.handle = RunHandle(run_id=run_id, scenario_name=scenario.name,
                                record_log_path=record_log_path)
        self.turn_seconds = turn_seconds
        self.reference = dict(scenario.reference)
        self._mutex = threading.Lock()         # guards window flag + engine access
        self._wake = threading.Condition(self._mutex)
        self._window_open = False
        self._window_deadline = 0.0
        self._pause_requested = False
        self._halt_requested = False
        self._thread: threading.Thread | None = None
        self.runner: SimulationRunner = scenario.build(
            seed=seed, ablation=ablation, records_path=record_log_path,
            control_hook=self._control, window_hook=self._window)
        self.engine = self.runner.engine
        self.records = self.engine.records
        # market/account views are captured on the runner thread at quiesce
        # points, so API reads never race live engine mutation
        self._market = self.engine.snapshot()
        self._accounts = {aid: self.engine.account_view(aid)
                          for aid in self.runner.agents}

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> None:
        with self._mutex:
            if self.handle.state != "configuring":
                raise InvalidState(f"cannot start from state {self.handle.state}")
            self.handle.state = "running"
        self._thread = threading.Thread(target=self._run, daemon=True,
                                        name=f"run-{self.handle.run_id}")
        self._thread.start()

    def pause(self) -> None:
        with self._mutex:
            if self.handle.state not in ("running",):
                raise InvalidState(f"cannot pause from state {self.handle.state}")
            self._pause_requested = True
            self._wake.notify_all()

    def resume(self) -> None:
        with self._mutex:
            if self.handle.state not in ("paused", "running"):
                raise InvalidState(f"cannot resume from state {self.handle.state}")
            self._pause_requested = False
            if self.handle.state == "paused":
                self.handle.state = "running"
            self._wake.notify_all()

    def halt(self) -> None:
        with self._mutex:
            if self.handle.state not in ("running", "paused"):
                raise InvalidState(f"cannot halt from state {self.handle.state}")
            self._halt_requested = True
            self._pause_requested = False
            self._wake.notify_all()

    def _run(self) -> None:
        try:
            self.runner.run()
            final = "halted" if self._halt_requested else "finished"
        except Exception:
            final = "halted"
        with self._mutex:
            self.handle.state = final
            self._window_open = False
        self.records.close()

    # -- runner hooks (called on the runner thread) ---------------------------

    def _capture_views(self) -> None:
        self._market = self.engine.snapshot()
        self._accounts = {aid: self.engine.account_view(aid)
                          for aid in self.runner.agents}

    def _control(self, phase: str, frame: int, turn: int) -> None:
        with self._mutex:
            self.handle.phase = phase
            self.handle.frame = frame
            self.handle.turn = turn
            self._capture_views()
            if self._halt_requested:
                raise HaltRun()
            while self._pause_requested:
                self.handle.state = "paused"
                self._wake.wait(timeout=0.2)
                if self._halt_requested:
                    raise HaltRun()
            if self.handle.state == "paused":
                self.handle.state = "running"

    def _window(self, frame: int, turn: int) -> None:
        if self.turn_seconds <= 0:
            return
        with self._mutex:
            self._capture_views()
            self._window_open = True
            self._window_deadline = time.monotonic() + self.turn_seconds
        while True:
            remaining = self._window_deadline - time.monotonic()
            if remaining <= 0 or self._halt_requested:
                break
            time.sleep(min(remaining, 0.02))
        with self._mutex:
            self._window_open = False

    # -- operator actions ------------------------------------------------------

    def submit_order(self, agent: str, side: str, price: float, volume: int) -> dict:
        agent_obj = self.runner.agents.get(agent)
        if agent_obj is None:
            raise ValidationFailure(f"unknown agent {agent!r}")
        if not agent_obj.profile.is_human_proxy:
            raise ValidationFailure(f"agent {agent!r} is not a human proxy")
        if side not in ("buy", "sell"):
            raise ValidationFailure("side must be buy or sell")
        with self._mutex:
            if self.handle.state != "running" or not self._window_open:
                raise InvalidState("no order submission window is open")
            request = OrderRequest(agent_id=agent, side=Side(side),
                                   price_cents=to_cents(price), volume=int(volume),
                                   origin="human")
            [result] = self.engine.submit_orders([request])
            self._capture_views()
        if not result.accepted:
            raise ValidationFailure(result.reason)
        return {"order_id": result.order.order_id, "frame": result.order.frame,
                "turn": result.order.turn}

    def withdraw(self, agent: str, order_ids: list[str]) -> int:
        with self._mutex:
            if self.handle.state != "running" or not self._window_open:
                raise InvalidState("withdrawals only during an open trading window")
            try:
                return self.engine.withdraw_orders(agent, order_ids)
            except WithdrawError as exc:
                raise ValidationFailure(str(exc)) from exc

    def inject(self, frame: int, text: str, targets: Any = "all",
               tags: list[str] | None = None) -> int:
        if self.handle.state not in ("configuring", "running", "paused"):
            raise InvalidState(f"run is {self.handle.state}")
        try:
            return self.runner.inject_event(
                NewsItem(frame=frame, text=text, targets=targets, tags=tags or []))
        except ValueError as exc:
            raise ValidationFailure(str(exc)) from exc

    # -- views -------------------------------------------------------------------

    def state_view(self) -> dict:
        with self._mutex:
            remaining = None
            if self._window_open:
                remaining = max(0.0, self._window_deadline - time.monotonic())
            view = self.handle.view(len(self.records), self._window_open, remaining)
            view["market"] = self._market
            return view

    def accounts_view(self) -> dict:
        with self._mutex:
            return dict(self._accounts)

    def metrics_view(self) -> dict:
        events = list(self.records.events)
        out: dict[str, Any] = {"events": len(events)}
        prices = settlement_prices(events)
        if prices:
            out["settlements"] = {str(f): p / 100 for f, p in sorted(prices.items())}
            out["growth"] = growth_rate(events, self.reference.get("growth_rate"))
            out["bid_over_ask_rounds"] = bid_over_ask_rounds(events)
            watch = self.reference.get("watch_agent")
            if watch:
                out["cumulative_liquidation"] = [
                    p["value"] for p in liquidation_series(events, watch).points]
            last_frame = max(prices)
            traders = [aid for aid, a in self.runner.agents.items()
                       if not a.profile.is_human_proxy]
            index = trading_behaviour_index(events, traders, last_frame)
            out["behaviour_index"] = {
                "frame": last_frame,
                "per_agent": {aid: v["value"]
                              for aid, v in index["per_agent"].items()},
            }
        return out


def make_app(run_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="futuresim service")
    runs: dict[str, RunController] = {}
    spool = run_dir or os.environ.get("FUTURESIM_RUN_DIR") or "runs"
    os.makedirs(spool, exist_ok=True)
    counter = {"n": 0}

    def get_run(run_id: str) -> RunController:
        if run_id not in runs:
            raise KeyError(run_id)
        return runs[run_id]

    @app.exception_handler(KeyError)
    async def _unknown(request, exc):
        return JSONResponse(status_code=404, content={"error": "unknown run"})

    @app.exception_handler(InvalidState)
    async def _state(request, exc):
        return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.exception_handler(ValidationFailure)
    async def _validation(request, exc):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.exception_handler(ScenarioError)
    async def _scenario(request, exc):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.post("/runs", status_code=201)
    async def create_run(body: dict):
        if "scenario" in body:
            scenario = parse_scenario(body["scenario"], base_dir=Path(body.get("base_dir", ".")))
        else:
            scenario = load_scenario(body["scenario_path"])
        counter["n"] += 1
        run_id = f"r{counter['n']}-{uuid.uuid4().hex[:6]}"
        log_path = os.path.join(spool, f"{run_id}.jsonl")
        controller = RunController(
            run_id, scenario,
            seed=body.get("seed"),
            ablation=body.get("ablation"),
            turn_seconds=float(body.get("turn_seconds", 30.0)),
            record_log_path=log_path,
        )
        runs[run_id] = controller
        return controller.state_view()

    @app.post("/runs/{run_id}/start")
    async def start_run(run_id: str):
        get_run(run_id).start()
        return get_run(run_id).state_view()

    @app.post("/runs/{run_id}/pause")
    async def pause_run(run_id: str):
        get_run(run_id).pause()
        return get_run(run_id).state_view()

    @app.post("/runs/{run_id}/resume")
    async def resume_run(run_id: str):
        get_run(run_id).resume()
        return get_run(run_id).state_view()

    @app.post("/runs/{run_id}/halt")
    async def halt_run(run_id: str):
        get_run(run_id).halt()
        return get_run(run_id).state_view()

    @app.get("/runs/{run_id}/state")
    async def run_state(run_id: str):
        return get_run(run_id).state_view()

    @app.post("/runs/{run_id}/events", status_code=202)
    async def inject_event(run_id: str, body: dict):
        controller = get_run(run_id)
        delivery = controller.inject(
            frame=int(body["frame"]), text=str(body["text"]),
            targets=body.get("targets", "all"), tags=body.get("tags", []))
        return {"queued": True, "delivery_frame": delivery}

    @app.post("/runs/{run_id}/orders")
    async def submit_order(run_id: str, body: dict):
        controller = get_run(run_id)
        return controller.submit_order(
            agent=str(body["agent"]), side=str(body["side"]),
            price=body["price"], volume=int(body["volume"]))

    @app.post("/runs/{run_id}/withdrawals")
    async def withdraw(run_id: str, body: dict):
        controller = get_run(run_id)
        count = controller.withdraw(str(body["agent"]),
                                    [str(i) for i in body["order_ids"]])
        return {"withdrawn": count}

    @app.get("/runs/{run_id}/accounts")
    async def accounts(run_id: str):
        return get_run(run_id).accounts_view()

    @app.get("/runs/{run_id}/metrics")
    async def metrics(run_id: str):
        return get_run(run_id).metrics_view()

    @app.websocket("/runs/{run_id}/stream")
    async def stream(websocket: WebSocket, run_id: str):
        await websocket.accept()
        controller = runs.get(run_id)
        if controller is None:
            await websocket.close(code=4404)
            return
        cursor = int(websocket.query_params.get("from_seq", 0))
        try:
            while True:
                events = controller.records.since(cursor)
                for event in events:
                    await websocket.send_text(json.dumps(event, sort_keys=True))
                cursor += len(events)
                if not events:
                    if controller.state_view()["state"] in ("finished", "halted") \
                            and cursor >= len(controller.records):
                        await websocket.send_text(json.dumps({"type": "stream_end"}))
                        break
                    await asyncio.sleep(0.03)
        except WebSocketDisconnect:
            return
        await websocket.close()

    return app
