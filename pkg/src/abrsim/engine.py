"""Deterministic discrete-event engine.

Virtual time is kept as integer nanoseconds so that event ordering and
tie-breaking are exact; public APIs take seconds and truncate to whole
nanoseconds. Events with equal fire times execute in scheduling order.
"""

from __future__ import annotations

import hashlib
import heapq
import math
import random
from dataclasses import dataclass, field

NS_PER_S = 1_000_000_000


class SchedulingError(ValueError):
    """Raised for invalid delays passed to schedule()."""


def to_ns(seconds: float) -> int:
    """Convert seconds to integer nanoseconds, truncating any remainder."""
    return int(seconds * NS_PER_S)


def to_seconds(ns: int) -> float:
    return ns / NS_PER_S


@dataclass
class Event:
    fire_at: int          # ns
    seq: int              # unique, strictly increasing per schedule() call
    action: object        # zero-arg callable
    cancelled: bool = False
    fired: bool = False


def derive_stream_seed(global_seed: int, node_id: str, label: str) -> int:
    """Stable per-stream seed; independent of how many other streams exist."""
    key = f"{global_seed}/{node_id}/{label}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


class RngStream:
    """A named pseudo-random stream, isolated from all other streams."""

    def __init__(self, global_seed: int, node_id: str, label: str):
        self.node_id = node_id
        self.label = label
        self._rng = random.Random(derive_stream_seed(global_seed, node_id, label))

    def uniform(self, lo: float, hi: float) -> float:
        """One draw from [lo, hi). Advances this stream only."""
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
            raise ValueError(f"invalid uniform range [{lo}, {hi})")
        return lo + (hi - lo) * self._rng.random()

    def random(self) -> float:
        return self._rng.random()


def next_uniform(stream: RngStream, lo: float, hi: float) -> float:
    return stream.uniform(lo, hi)


class Simulator:
    """Single-threaded event loop with a virtual nanosecond clock.

    One instance owns all state of one simulation run; instances are
    independent and may run side by side.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._now = 0
        self._seq = 0
        self._heap: list[tuple[int, int, Event]] = []
        self._streams: dict[tuple[str, str], RngStream] = {}

    @property
    def now_ns(self) -> int:
        return self._now

    @property
    def now(self) -> float:
        """Current virtual time in seconds."""
        return to_seconds(self._now)

    def rng_stream(self, node_id: str, label: str) -> RngStream:
        key = (node_id, label)
        if key not in self._streams:
            self._streams[key] = RngStream(self.seed, node_id, label)
        return self._streams[key]

    def schedule(self, delay_s: float, action) -> Event:
        """Enqueue `action` to run `delay_s` seconds from now."""
        if not math.isfinite(delay_s) or delay_s < 0:
            raise SchedulingError(f"delay must be finite and >= 0, got {delay_s}")
        return self.schedule_at_ns(self._now + to_ns(delay_s), action)

    def schedule_at_ns(self, fire_at: int, action) -> Event:
        if fire_at < self._now:
            raise SchedulingError("cannot schedule in the past")
        ev = Event(fire_at=fire_at, seq=self._seq, action=action)
        self._seq += 1
        heapq.heappush(self._heap, (ev.fire_at, ev.seq, ev))
        return ev

    def cancel(self, event: Event | None) -> None:
        """No-op for None, already-fired, or already-cancelled events."""
        if event is not None:
            event.cancelled = True

    def run(self, until_s: float | None = None) -> int:
        """Execute all events with fire_at <= until, in (time, seq) order.

        Returns the number of events executed. With until_s=None the queue
        drains completely. The clock ends at `until` (or the last fire time
        when draining).
        """
        until_ns = None if until_s is None else to_ns(until_s)
        count = 0
        while self._heap:
            fire_at, _, ev = self._heap[0]
            if until_ns is not None and fire_at > until_ns:
                break
            heapq.heappop(self._heap)
            if ev.cancelled:
                continue
            self._now = fire_at
            ev.fired = True
            ev.action()
            count += 1
        if until_ns is not None and until_ns > self._now:
            self._now = until_ns
        return count
