"""Topology, mobility, and transmission media.

Media deliver `SimPacket`s between attached nodes. A point-to-point link
has a fixed rate, propagation delay, and a drop-tail queue; the wireless
channel serializes all transmissions at a fixed phy rate and applies a
deterministic threshold delivery rule based on log-distance path loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .engine import NS_PER_S, RngStream, Simulator, to_ns

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# Defaults inherited from the simulated 802.11a setup.
DEFAULT_PATHLOSS_EXPONENT = 3.0
DEFAULT_REFERENCE_LOSS_DB = 46.6777
DEFAULT_REFERENCE_DISTANCE_M = 1.0
DEFAULT_TX_POWER_DBM = 16.0206
DEFAULT_RX_SENSITIVITY_DBM = -96.0
DEFAULT_WIFI_RATE_BPS = 54_000_000


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def grid_position(index: int, delta_x: float, delta_y: float, grid_width: int) -> Position:
    """Row-major grid layout used for initial node placement."""
    if grid_width < 1:
        raise ConfigurationError("grid_width must be >= 1")
    return Position((index % grid_width) * delta_x, (index // grid_width) * delta_y)


def path_loss_db(d: float, exponent: float = DEFAULT_PATHLOSS_EXPONENT,
                 reference_loss: float = DEFAULT_REFERENCE_LOSS_DB,
                 reference_distance: float = DEFAULT_REFERENCE_DISTANCE_M) -> float:
    """Log-distance path loss; clamped to the reference loss inside d0."""
    if d <= 0:
        raise ValueError(f"distance must be > 0, got {d}")
    if d < reference_distance:
        return reference_loss
    return reference_loss + 10.0 * exponent * math.log10(d / reference_distance)


@dataclass
class MobilityState:
    """Pure state for the random-walk stepper; also covers fixed nodes."""
    position: Position
    direction: float = 0.0          # radians
    speed: float = 0.0              # m/s
    model: str = "constant-position"
    bounds: tuple[float, float, float, float] = (-50.0, 50.0, -50.0, 50.0)
    leg_period: float = 1.0         # seconds of travel before a redraw
    speed_min: float = 2.0
    speed_max: float = 4.0
    time_into_leg: float = 0.0


def _fold(v: float, lo: float, hi: float) -> tuple[float, bool]:
    """Mirror-fold a coordinate into [lo, hi]; True when an odd number of
    reflections occurred (the velocity component flips sign)."""
    span = hi - lo
    r = (v - lo) % (2.0 * span)
    if r <= span:
        return lo + r, False
    return hi - (r - span), True


def step_random_walk(state: MobilityState, dt: float, rng: RngStream) -> MobilityState:
    """Advance a random-walk node by dt seconds.

    The node moves straight at its current speed, reflecting off the
    bounding rectangle; after each full leg_period of travel a new
    direction ~ U[0, 2pi) and speed ~ U[speed_min, speed_max) are drawn.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if state.model != "random-walk-2d":
        raise ValueError(f"not a random-walk state: {state.model}")
    s = replace(state)
    remaining = dt
    while remaining > 1e-15:
        step = min(remaining, s.leg_period - s.time_into_leg)
        min_x, max_x, min_y, max_y = s.bounds
        nx, flip_x = _fold(s.position.x + math.cos(s.direction) * s.speed * step, min_x, max_x)
        ny, flip_y = _fold(s.position.y + math.sin(s.direction) * s.speed * step, min_y, max_y)
        d = s.direction
        if flip_x:
            d = math.pi - d
        if flip_y:
            d = -d
        s.position = Position(nx, ny)
        s.direction = d % (2.0 * math.pi)
        s.time_into_leg += step
        remaining -= step
        if s.time_into_leg >= s.leg_period - 1e-15:
            s.direction = rng.uniform(0.0, 2.0 * math.pi)
            s.speed = rng.uniform(s.speed_min, s.speed_max)
            s.time_into_leg = 0.0
    return s


class Mobility:
    """Lazy position tracker for one node. Positions are only ever queried
    at the simulator's current clock, so advancement is monotone."""

    def __init__(self, state: MobilityState, rng: RngStream | None = None):
        self.state = state
        self.rng = rng
        self._last_ns = 0
        if state.model == "random-walk-2d":
            if rng is None:
                raise ConfigurationError("random walk needs an RNG stream")
            # first leg starts with a random heading and speed
            self.state.direction = rng.uniform(0.0, 2.0 * math.pi)
            self.state.speed = rng.uniform(state.speed_min, state.speed_max)

    def position_at(self, now_ns: int) -> Position:
        if self.state.model == "constant-position":
            return self.state.position
        if now_ns > self._last_ns:
            dt = (now_ns - self._last_ns) / NS_PER_S
            self.state = step_random_walk(self.state, dt, self.rng)
            self._last_ns = now_ns
        return self.state.position


@dataclass
class Node:
    node_id: str
    mobility: Mobility


@dataclass
class SimPacket:
    src: str
    dst: str
    flow: str
    payload_bytes: int
    header: object            # DataPacketHeader / ControlPacket (has wire_size())
    header_bytes: int
    enqueue_time: int = 0     # ns


def delivery_decision(channel: "WirelessChannel", tx_pos: Position, rx_pos: Position) -> bool:
    """Threshold rule: received iff tx power minus path loss clears the
    receiver sensitivity. Deterministic, all-or-nothing."""
    d = tx_pos.distance_to(rx_pos)
    if d < channel.reference_distance:
        loss = channel.reference_loss
    else:
        loss = path_loss_db(d, channel.pathloss_exponent, channel.reference_loss,
                            channel.reference_distance)
    return channel.tx_power - loss >= channel.rx_sensitivity


class P2PLink:
    """Full-duplex point-to-point link with a drop-tail queue per direction."""

    def __init__(self, sim: Simulator, metrics, node_a: str, node_b: str,
                 rate_bps: float, prop_delay_s: float, queue_capacity: int = 100):
        self.sim = sim
        self.metrics = metrics
        self.endpoints = (node_a, node_b)
        self.rate = float(rate_bps)
        self.prop_delay_ns = to_ns(prop_delay_s)
        self.queue_capacity = queue_capacity
        self._handlers: dict[str, object] = {}
        self._busy_until = {node_a: 0, node_b: 0}
        self._waiting = {node_a: 0, node_b: 0}

    def attach(self, node_id: str, handler) -> None:
        if node_id not in self.endpoints:
            raise ConfigurationError(f"{node_id} is not an endpoint of this link")
        self._handlers[node_id] = handler

    def send(self, packet: SimPacket) -> bool:
        """Queue a packet for transmission; returns False on queue drop."""
        src, dst = packet.src, packet.dst
        if src not in self._handlers or dst not in self._handlers:
            raise ConfigurationError(f"endpoint not attached: {src}->{dst}")
        now = self.sim.now_ns
        start = max(now, self._busy_until[src])
        if start > now and self._waiting[src] >= self.queue_capacity:
            if self.metrics is not None:
                self.metrics.record(now, src, packet.flow, "drop_queue", packet.payload_bytes)
            return False
        bits = (packet.payload_bytes + packet.header_bytes) * 8
        ser_ns = to_ns(bits / self.rate)
        self._busy_until[src] = start + ser_ns
        if start > now:
            self._waiting[src] += 1
            self.sim.schedule_at_ns(start, lambda s=src: self._dequeue(s))
        arrival = start + ser_ns + self.prop_delay_ns
        self.sim.schedule_at_ns(arrival, lambda p=packet: self._deliver(p))
        return True

    def _dequeue(self, src: str) -> None:
        self._waiting[src] -= 1

    def _deliver(self, packet: SimPacket) -> None:
        self._handlers[packet.dst](packet, self.sim.now_ns)


class WirelessChannel:
    """Shared multi-access channel: transmissions serialize at phy_rate and
    deliver per the threshold rule using positions at transmission start."""

    def __init__(self, sim: Simulator, metrics, phy_rate_bps: float = DEFAULT_WIFI_RATE_BPS,
                 tx_power: float = DEFAULT_TX_POWER_DBM,
                 rx_sensitivity: float = DEFAULT_RX_SENSITIVITY_DBM,
                 pathloss_exponent: float = DEFAULT_PATHLOSS_EXPONENT,
                 reference_loss: float = DEFAULT_REFERENCE_LOSS_DB,
                 reference_distance: float = DEFAULT_REFERENCE_DISTANCE_M):
        self.sim = sim
        self.metrics = metrics
        self.phy_rate = float(phy_rate_bps)
        self.tx_power = tx_power
        self.rx_sensitivity = rx_sensitivity
        self.pathloss_exponent = pathloss_exponent
        self.reference_loss = reference_loss
        self.reference_distance = reference_distance
        self.busy_until = 0
        self._members: dict[str, tuple[Node, object]] = {}
        self.occupancy_log: list[tuple[int, int]] = []  # (start, end) ns

    def attach(self, node: Node, handler) -> None:
        self._members[node.node_id] = (node, handler)

    def send(self, packet: SimPacket) -> None:
        if packet.src not in self._members or packet.dst not in self._members:
            raise ConfigurationError(f"node not attached: {packet.src}->{packet.dst}")
        now = self.sim.now_ns
        bits = (packet.payload_bytes + packet.header_bytes) * 8
        ser_ns = to_ns(bits / self.phy_rate)
        start = max(now, self.busy_until)
        self.busy_until = start + ser_ns
        self.occupancy_log.append((start, start + ser_ns))
        # positions are sampled when serialization begins
        self.sim.schedule_at_ns(start, lambda p=packet, e=start + ser_ns: self._begin(p, e))

    def _begin(self, packet: SimPacket, ser_end: int) -> None:
        now = self.sim.now_ns
        tx_node, _ = self._members[packet.src]
        rx_node, _ = self._members[packet.dst]
        tx_pos = tx_node.mobility.position_at(now)
        rx_pos = rx_node.mobility.position_at(now)
        if not delivery_decision(self, tx_pos, rx_pos):
            if self.metrics is not None:
                self.metrics.record(now, packet.dst, packet.flow, "drop_range",
                                    packet.payload_bytes)
            return
        prop_ns = to_ns(tx_pos.distance_to(rx_pos) / SPEED_OF_LIGHT)
        self.sim.schedule_at_ns(ser_end + prop_ns, lambda p=packet: self._deliver(p))

    def _deliver(self, packet: SimPacket) -> None:
        _, handler = self._members[packet.dst]
        handler(packet, self.sim.now_ns)
