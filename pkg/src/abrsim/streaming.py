"""Streaming application layer.

Trace-driven video source, server with a per-client quality table, frame
fragmentation, client-side reassembly, playback buffer, and the
buffer-occupancy rate controller.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import Event, RngStream, Simulator, to_ns
from .netmodel import SimPacket

DEFAULT_LADDER_BITRATES_MBPS = [0.5, 1.0, 2.5, 5.0, 8.0, 16.0]
DEFAULT_INITIAL_LEVEL = 3
DEFAULT_FRAME_RATE = 25
REASSEMBLY_TIMEOUT_S = 2.0


class TraceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class DataPacketHeader:
    frame_seq: int
    frag_index: int
    frag_count: int
    level: int
    frame_total_bytes: int

    WIRE_SIZE = 13  # 4 + 2 + 2 + 1 + 4 bytes

    def wire_size(self) -> int:
        return self.WIRE_SIZE


@dataclass(frozen=True)
class ControlPacket:
    requested_level: int

    WIRE_SIZE = 2

    def wire_size(self) -> int:
        return self.WIRE_SIZE


@dataclass
class VideoTrace:
    sizes: list[int]
    name: str = "trace"

    def __post_init__(self):
        if not self.sizes:
            raise TraceFormatError(f"{self.name}: empty trace")
        for i, s in enumerate(self.sizes):
            if not isinstance(s, int) or s < 1:
                raise TraceFormatError(f"{self.name}: bad frame size {s!r} at index {i}")

    def __len__(self) -> int:
        return len(self.sizes)


def load_trace(text: str, name: str = "trace") -> VideoTrace:
    """Parse a frame-size trace: one positive integer per line, blank lines
    ignored. Errors name the offending line."""
    sizes = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            value = int(stripped)
        except ValueError:
            raise TraceFormatError(f"{name}: non-numeric frame size at line {lineno}: {stripped!r}")
        if value < 1:
            raise TraceFormatError(f"{name}: frame size must be >= 1 at line {lineno}: {value}")
        sizes.append(value)
    if not sizes:
        raise TraceFormatError(f"{name}: empty trace")
    return VideoTrace(sizes, name)


@dataclass
class QualityLadder:
    levels: list[VideoTrace]

    def __post_init__(self):
        if not self.levels:
            raise ValueError("ladder needs at least one level")
        n = len(self.levels[0])
        for t in self.levels:
            if len(t) != n:
                raise ValueError("all ladder levels must have the same frame count")
        means = [sum(t.sizes) / len(t) for t in self.levels]
        for lo, hi in zip(means, means[1:]):
            if hi < lo:
                raise ValueError("mean frame size must be non-decreasing with level")

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def frame_count(self) -> int:
        return len(self.levels[0])


def fragment_frame(frame_bytes: int, max_payload: int) -> list[int]:
    """Split a frame into full-size payloads plus a final remainder."""
    if frame_bytes < 1:
        raise ValueError("frame_bytes must be >= 1")
    if max_payload < 1:
        raise ValueError("max_payload must be >= 1")
    full, rem = divmod(frame_bytes, max_payload)
    parts = [max_payload] * full
    if rem:
        parts.append(rem)
    return parts


def synth_ladder(levels: int, frames: int, fps: float, mean_bitrates_bps: list[float],
                 rng: RngStream, jitter: float = 0.2) -> QualityLadder:
    """Generate a synthetic ladder: level L frame sizes are drawn around
    mean_bitrates[L]/(8*fps) bytes with +/-jitter uniform spread."""
    if levels != len(mean_bitrates_bps):
        raise ValueError("levels must match len(mean_bitrates_bps)")
    for lo, hi in zip(mean_bitrates_bps, mean_bitrates_bps[1:]):
        if hi <= lo:
            raise ValueError("mean bitrates must be strictly increasing")
    traces = []
    for lvl, bitrate in enumerate(mean_bitrates_bps):
        mean_size = bitrate / (8.0 * fps)
        sizes = []
        for _ in range(frames):
            if jitter > 0:
                f = rng.uniform(1.0 - jitter, 1.0 + jitter)
            else:
                f = 1.0
            sizes.append(max(1, round(mean_size * f)))
        traces.append(VideoTrace(sizes, name=f"level{lvl}"))
    return QualityLadder(traces)


@dataclass
class ServerConfig:
    ladder: QualityLadder
    max_frame: int = 500
    interval_s: float = 0.01
    packet_size: int = 1400
    initial_level: int = DEFAULT_INITIAL_LEVEL

    def __post_init__(self):
        if self.packet_size < 1 or self.max_frame < 1 or self.interval_s <= 0:
            raise ValueError("invalid server configuration")
        if not (0 <= self.initial_level < self.ladder.depth):
            raise ValueError("initial_level outside ladder bounds")


@dataclass
class ClientRecord:
    address: str
    sent_number: int = 0
    video_level: int = DEFAULT_INITIAL_LEVEL
    send_event: Event | None = None


class StreamingServer:
    """Sends video frames to registered clients, one frame per interval,
    at each client's current quality level."""

    def __init__(self, sim: Simulator, metrics, node_id: str, medium, config: ServerConfig):
        self.sim = sim
        self.metrics = metrics
        self.node_id = node_id
        self.medium = medium
        self.config = config
        self.clients: dict[str, ClientRecord] = {}
        self.malformed_count = 0
        self.level_change_log: list[tuple[int, str, int]] = []  # (ns, address, level)

    def flow_id(self, address: str) -> str:
        return f"{self.node_id}->{address}"

    def handle_packet(self, packet: SimPacket, now_ns: int) -> None:
        if not isinstance(packet.header, ControlPacket):
            self.malformed_count += 1
            return
        address = packet.src
        rec = self.clients.get(address)
        if rec is None:
            rec = ClientRecord(address=address, sent_number=0,
                               video_level=self.config.initial_level)
            self.clients[address] = rec
            rec.send_event = self.sim.schedule(
                self.config.interval_s, lambda r=rec: self._send_frame(r))
        else:
            new_level = max(0, min(packet.header.requested_level, self.config.ladder.depth - 1))
            if new_level != rec.video_level:
                rec.video_level = new_level
                self.level_change_log.append((now_ns, address, new_level))

    def _send_frame(self, rec: ClientRecord) -> None:
        ladder = self.config.ladder
        limit = min(self.config.max_frame, ladder.frame_count)
        if rec.sent_number >= limit:
            rec.send_event = None
            return
        frame_seq = rec.sent_number
        level = rec.video_level
        frame_bytes = ladder.levels[level].sizes[frame_seq]
        parts = fragment_frame(frame_bytes, self.config.packet_size)
        flow = self.flow_id(rec.address)
        for idx, payload in enumerate(parts):
            header = DataPacketHeader(frame_seq=frame_seq, frag_index=idx,
                                      frag_count=len(parts), level=level,
                                      frame_total_bytes=frame_bytes)
            pkt = SimPacket(src=self.node_id, dst=rec.address, flow=flow,
                            payload_bytes=payload, header=header,
                            header_bytes=header.wire_size(),
                            enqueue_time=self.sim.now_ns)
            self.metrics.record(self.sim.now_ns, self.node_id, flow, "tx_packet", payload)
            self.medium.send(pkt)
        rec.sent_number += 1
        if rec.sent_number < limit:
            rec.send_event = self.sim.schedule(
                self.config.interval_s, lambda r=rec: self._send_frame(r))
        else:
            rec.send_event = None


@dataclass
class _PendingFrame:
    frag_count: int
    total_bytes: int
    created_ns: int
    received: dict[int, int] = field(default_factory=dict)  # frag_index -> bytes


class StreamingClient:
    """Receives and reassembles frames, drains the playback buffer once per
    second, and requests quality changes based on buffer occupancy."""

    def __init__(self, sim: Simulator, metrics, node_id: str, medium, server_id: str,
                 ladder_depth: int, frame_rate: int = DEFAULT_FRAME_RATE,
                 initial_level: int = DEFAULT_INITIAL_LEVEL,
                 reassembly_timeout_s: float = REASSEMBLY_TIMEOUT_S):
        self.sim = sim
        self.metrics = metrics
        self.node_id = node_id
        self.medium = medium
        self.server_id = server_id
        self.ladder_depth = ladder_depth
        self.frame_rate = frame_rate
        self.level_view = initial_level
        self.reassembly_timeout_s = reassembly_timeout_s

        self.cur_buffer_size = 0
        self.last_buffer_size = 0
        self.stop_counter = 0
        self.rebuffer_counter = 0
        self.stopped = False
        self.frames_played = 0
        self.frames_completed = 0
        self.frames_evicted = 0
        self.bad_header_count = 0

        self._pending: dict[int, _PendingFrame] = {}
        self._completed: set[int] = set()
        self._got_data = False
        self._tick_event: Event | None = None
        self._retry_event: Event | None = None

    @property
    def flow(self) -> str:
        return f"{self.server_id}->{self.node_id}"

    def start(self) -> None:
        """Register with the server and begin the 1 s buffer tick."""
        self._send_control(self.level_view)
        self._retry_event = self.sim.schedule(1.0, self._retry_registration)
        self._tick_event = self.sim.schedule(1.0, self._tick)

    def _retry_registration(self) -> None:
        # registration only succeeds once the server hears us; keep trying
        # until the first data packet proves the path works
        if self._got_data or self.stopped:
            self._retry_event = None
            return
        self._send_control(self.level_view)
        self._retry_event = self.sim.schedule(1.0, self._retry_registration)

    def _send_control(self, level: int) -> None:
        header = ControlPacket(requested_level=level)
        pkt = SimPacket(src=self.node_id, dst=self.server_id, flow=self.flow,
                        payload_bytes=0, header=header, header_bytes=header.wire_size(),
                        enqueue_time=self.sim.now_ns)
        self.metrics.record(self.sim.now_ns, self.node_id, self.flow, "tx_packet", 0)
        self.medium.send(pkt)

    def handle_packet(self, packet: SimPacket, now_ns: int) -> None:
        if self.stopped or not isinstance(packet.header, DataPacketHeader):
            return
        h = packet.header
        if h.frag_index >= h.frag_count or h.frag_count < 1:
            self.bad_header_count += 1
            return
        self._got_data = True
        self.metrics.record(now_ns, self.node_id, self.flow, "rx_packet", packet.payload_bytes)
        if h.frame_seq in self._completed:
            return
        pending = self._pending.get(h.frame_seq)
        if pending is None:
            pending = _PendingFrame(frag_count=h.frag_count, total_bytes=h.frame_total_bytes,
                                    created_ns=now_ns)
            self._pending[h.frame_seq] = pending
            self.sim.schedule(self.reassembly_timeout_s,
                              lambda seq=h.frame_seq: self._evict_if_stale(seq))
        if h.frag_index in pending.received:
            return
        pending.received[h.frag_index] = packet.payload_bytes
        if len(pending.received) == pending.frag_count:
            del self._pending[h.frame_seq]
            self._completed.add(h.frame_seq)
            self.cur_buffer_size += 1
            self.frames_completed += 1
            self.metrics.record(now_ns, self.node_id, self.flow, "frame_complete",
                                pending.total_bytes)

    def _evict_if_stale(self, frame_seq: int) -> None:
        pending = self._pending.pop(frame_seq, None)
        if pending is not None:
            self.frames_evicted += 1
            self.metrics.record(self.sim.now_ns, self.node_id, self.flow,
                                "frame_evicted", pending.total_bytes)

    def _tick(self) -> None:
        now_ns = self.sim.now_ns
        b = self.cur_buffer_size
        if b < self.frame_rate:
            if b == self.last_buffer_size:
                self.stop_counter += 1
                if self.stop_counter >= 3:
                    self._stop(now_ns, buffer_at_tick=b)
                    return
                self.metrics.timeline_row(now_ns, self.node_id, b, self.level_view, "stagnant")
            else:
                self.stop_counter = 0
                self.rebuffer_counter += 1
                self.metrics.record(now_ns, self.node_id, self.flow, "rebuffer", b)
                self.metrics.timeline_row(now_ns, self.node_id, b, self.level_view, "rebuffer")
                if self.rebuffer_counter >= 3:
                    if self.level_view > 0:
                        self.level_view -= 1
                        self._send_control(self.level_view)
                        self.metrics.record(now_ns, self.node_id, self.flow,
                                            "level_down", self.level_view)
                        self.metrics.timeline_row(now_ns, self.node_id, b,
                                                  self.level_view, "level_down")
                    self.rebuffer_counter = 0
        else:
            self.stop_counter = 0
            self.rebuffer_counter = 0
            self.cur_buffer_size -= self.frame_rate
            self.frames_played += self.frame_rate
            self.metrics.record(now_ns, self.node_id, self.flow, "play", self.frame_rate)
            self.metrics.timeline_row(now_ns, self.node_id, b, self.level_view, "play")
            if b > 5 * self.frame_rate and self.level_view < self.ladder_depth - 1:
                self.level_view += 1
                self._send_control(self.level_view)
                self.metrics.record(now_ns, self.node_id, self.flow, "level_up", self.level_view)
                self.metrics.timeline_row(now_ns, self.node_id, b, self.level_view, "level_up")
        self.last_buffer_size = b
        self._tick_event = self.sim.schedule(1.0, self._tick)

    def _stop(self, now_ns: int, buffer_at_tick: int) -> None:
        self.stopped = True
        self.sim.cancel(self._tick_event)
        self.sim.cancel(self._retry_event)
        self._tick_event = None
        self._retry_event = None
        self.metrics.record(now_ns, self.node_id, self.flow, "stop", buffer_at_tick)
        self.metrics.timeline_row(now_ns, self.node_id, buffer_at_tick, self.level_view, "stop")
