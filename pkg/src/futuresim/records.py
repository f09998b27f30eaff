"""Append-only simulation record log.

Every observable fact of a run (orders, deals, settlements, news, agent
traces) is one event in a RecordSet.  Events carry only logical time
(frame, turn, sequence number), never wall-clock time, so two identical
runs produce byte-identical logs.  Serialized as line-delimited JSON with
canonical key order; field layout is documented in docs/record-format.md.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator


def canonical_line(event: dict) -> str:
    """Canonical single-line JSON encoding used for the on-disk log."""
    return json.dumps(event, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass
class RecordSet:
    """In-memory event list, optionally mirrored to a .jsonl file as it grows."""

    path: str | None = None
    events: list[dict] = field(default_factory=list)
    _fh: Any = field(default=None, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self) -> None:
        if self.path is not None:
            self._fh = open(self.path, "w", encoding="utf-8")

    def append(self, type: str, frame: int | None = None, turn: int | None = None,
               **data: Any) -> dict:
        with self._lock:
            event = {
                "seq": len(self.events),
                "type": type,
                "frame": frame,
                "turn": turn,
                "data": data,
            }
            self.events.append(event)
            if self._fh is not None:
                self._fh.write(canonical_line(event) + "\n")
                self._fh.flush()
            return event

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None

    def __len__(self) -> int:
        return len(self.events)

    def since(self, seq: int) -> list[dict]:
        """Events with sequence number >= seq (safe to call concurrently)."""
        return self.events[seq:]

    def of_type(self, *types: str) -> Iterator[dict]:
        wanted = set(types)
        return (e for e in self.events if e["type"] in wanted)

    def to_lines(self) -> str:
        return "".join(canonical_line(e) + "\n" for e in self.events)

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_lines())


@dataclass
class ReadResult:
    events: list[dict]
    truncated: bool = False
    bad_line: int | None = None
    error: str | None = None


def read_record_log(path: str) -> ReadResult:
    """Read a .jsonl log; on a corrupt line, stop there and report the position."""
    events: list[dict] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                event = json.loads(line)
                if not isinstance(event, dict) or "seq" not in event or "type" not in event:
                    raise ValueError("not a record event")
            except ValueError as exc:
                return ReadResult(events, truncated=True, bad_line=lineno, error=str(exc))
            events.append(event)
    return ReadResult(events)


EventSink = Callable[[dict], None]
