"""In-process event fan-out feeding the gateway's streaming channel.

Every published event gets a monotonically increasing id.  Subscribers own
a bounded queue; a subscriber that falls behind past its buffer is dropped
(documented behavior, preferable to unbounded memory).  A short replay
ring lets reconnecting clients resume by last-event-id without gaps.
"""

from __future__ import annotations

import queue
import threading
from collections import deque
from dataclasses import dataclass


@dataclass(frozen=True)
class Event:
    event_id: int
    kind: str  # metric | alert | report | recommendation | stage | heartbeat
    payload: dict

    def as_dict(self) -> dict:
        return {"id": self.event_id, "event": self.kind, "data": self.payload}


class EventHub:
    def __init__(self, *, subscriber_buffer: int = 4096, replay_size: int = 16384):
        self._lock = threading.Lock()
        self._counter = 0
        self._subscribers: dict[int, queue.Queue] = {}
        self._sub_counter = 0
        self._buffer = subscriber_buffer
        self._replay: deque[Event] = deque(maxlen=replay_size)

    def publish(self, kind: str, payload: dict) -> Event:
        with self._lock:
            self._counter += 1
            event = Event(self._counter, kind, payload)
            self._replay.append(event)
            dead = []
            for sub_id, q in self._subscribers.items():
                try:
                    q.put_nowait(event)
                except queue.Full:
                    dead.append(sub_id)
            for sub_id in dead:
                del self._subscribers[sub_id]
        return event

    def subscribe(self, last_event_id: int = 0) -> tuple[int, queue.Queue, list[Event]]:
        """Returns (subscriber id, live queue, replayed events after last_event_id)."""
        with self._lock:
            self._sub_counter += 1
            sub_id = self._sub_counter
            q: queue.Queue = queue.Queue(maxsize=self._buffer)
            replayed = [e for e in self._replay if e.event_id > last_event_id]
            self._subscribers[sub_id] = q
        return sub_id, q, replayed

    def unsubscribe(self, sub_id: int) -> None:
        with self._lock:
            self._subscribers.pop(sub_id, None)

    def history(self, kinds: set[str] | None = None) -> list[Event]:
        with self._lock:
            return [e for e in self._replay if kinds is None or e.kind in kinds]
