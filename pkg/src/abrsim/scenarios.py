"""Scenario configuration and construction.

Four canonical topologies:
  a: one server -- one client over a P2P link
  b: one server with independent P2P links to two clients
  c: one AP (server) at the origin, one mobile wireless client
  d: numAp AP servers on a grid, numSta mobile clients, one shared channel
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields

from .engine import Simulator
from .metrics import MetricsCollector, RunReport, throughput_series, write_csv
from .netmodel import (Mobility, MobilityState, Node, P2PLink, Position,
                       WirelessChannel, grid_position)
from .streaming import (QualityLadder, ServerConfig, StreamingClient,
                        StreamingServer, load_trace, synth_ladder)


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    scenario: str = "a"
    seed: int | None = None          # mandatory; no wall-clock default
    horizon_s: float = 30.0
    out_dir: str = "out"
    num_sta: int = 1
    num_ap: int = 1
    # wired
    p2p_rate_mbps: float = 5.0
    p2p_delay_ms: float = 2.0
    p2p_queue_capacity: int = 100
    # wireless
    wifi_rate_mbps: float = 54.0
    tx_power_dbm: float = 16.0206
    rx_sensitivity_dbm: float = -96.0
    pathloss_exponent: float = 3.0
    reference_loss_db: float = 46.6777
    reference_distance_m: float = 1.0
    # server / application
    max_frame: int = 500
    interval_s: float = 0.01
    packet_size: int = 1400
    initial_level: int = 3
    frame_rate: int = 25
    # ladder: from disk when ladder_dir set, otherwise synthetic
    ladder_dir: str = ""
    ladder_levels: int = 6
    ladder_frames: int = 500
    ladder_fps: int = 25
    ladder_bitrates_mbps: str = "0.5,1,2.5,5,8,16"
    ladder_jitter: float = 0.2
    # mobility
    mobility: str = "walk"           # walk | fixed
    sta_x: float | None = None       # fixed-position override
    sta_y: float | None = None
    walk_min_x: float = -50.0
    walk_max_x: float = 50.0
    walk_min_y: float = -50.0
    walk_max_y: float = 50.0
    speed_min: float = 2.0
    speed_max: float = 4.0
    leg_period_s: float = 1.0
    # placement
    grid_dx: float = 5.0
    grid_dy: float = 10.0
    grid_width: int = 3
    # metrics
    throughput_bin_s: float = 1.0

    def bitrates_bps(self) -> list[float]:
        try:
            rates = [float(v) * 1e6 for v in self.ladder_bitrates_mbps.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"bad ladder_bitrates_mbps: {self.ladder_bitrates_mbps!r}")
        return rates

    def validate(self) -> None:
        if self.scenario not in ("a", "b", "c", "d", "custom"):
            raise ConfigError(f"unknown scenario: {self.scenario!r}")
        if self.seed is None:
            raise ConfigError("seed is mandatory")
        if self.num_sta < 1 or self.num_ap < 1:
            raise ConfigError("node counts must be >= 1")
        for key in ("p2p_rate_mbps", "wifi_rate_mbps", "horizon_s", "interval_s",
                    "throughput_bin_s", "leg_period_s"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be > 0")
        if self.p2p_delay_ms < 0:
            raise ConfigError("p2p_delay_ms must be >= 0")
        if self.max_frame < 1 or self.packet_size < 1 or self.frame_rate < 1:
            raise ConfigError("max_frame, packet_size, frame_rate must be >= 1")
        if self.mobility not in ("walk", "fixed"):
            raise ConfigError(f"mobility must be walk or fixed, got {self.mobility!r}")
        if self.speed_min >= self.speed_max:
            raise ConfigError("speed_min must be < speed_max")
        if self.walk_min_x >= self.walk_max_x or self.walk_min_y >= self.walk_max_y:
            raise ConfigError("walk bounds must be a non-empty rectangle")
        if self.ladder_dir:
            if not os.path.isfile(os.path.join(self.ladder_dir, "level0.txt")):
                raise ConfigError(f"ladder_dir has no level0.txt: {self.ladder_dir}")
        else:
            rates = self.bitrates_bps()
            if len(rates) != self.ladder_levels:
                raise ConfigError("ladder_levels must match ladder_bitrates_mbps length")
        if self.initial_level < 0:
            raise ConfigError("initial_level must be >= 0")

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}
_INT_KEYS = {"seed", "num_sta", "num_ap", "p2p_queue_capacity", "max_frame",
             "packet_size", "initial_level", "frame_rate", "ladder_levels",
             "ladder_frames", "ladder_fps", "grid_width"}
_FLOAT_KEYS = {"horizon_s", "p2p_rate_mbps", "p2p_delay_ms", "wifi_rate_mbps",
               "tx_power_dbm", "rx_sensitivity_dbm", "pathloss_exponent",
               "reference_loss_db", "reference_distance_m", "interval_s",
               "ladder_jitter", "sta_x", "sta_y", "walk_min_x", "walk_max_x",
               "walk_min_y", "walk_max_y", "speed_min", "speed_max",
               "leg_period_s", "grid_dx", "grid_dy", "throughput_bin_s"}
_STR_KEYS = {"scenario", "out_dir", "ladder_dir", "ladder_bitrates_mbps", "mobility"}


def parse_config(text: str, base: ScenarioConfig | None = None,
                 validate: bool = True) -> ScenarioConfig:
    """Parse flat `key = value` lines; `#` starts a comment; unknown keys
    are rejected with the offending line number."""
    cfg = base if base is not None else ScenarioConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            if key in _INT_KEYS:
                setattr(cfg, key, int(value))
            elif key in _FLOAT_KEYS:
                parsed = float(value)
                if not math.isfinite(parsed):
                    raise ValueError(value)
                setattr(cfg, key, parsed)
            else:
                setattr(cfg, key, value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}")
    if validate:
        cfg.validate()
    return cfg


@dataclass
class Simulation:
    cfg: ScenarioConfig
    sim: Simulator
    metrics: MetricsCollector
    nodes: dict[str, Node]
    servers: list[StreamingServer]
    clients: list[StreamingClient]
    flows: list[str]
    media: list[object]


def _load_ladder(cfg: ScenarioConfig, sim: Simulator) -> QualityLadder:
    if cfg.ladder_dir:
        traces = []
        level = 0
        while True:
            path = os.path.join(cfg.ladder_dir, f"level{level}.txt")
            if not os.path.isfile(path):
                break
            with open(path, encoding="utf-8") as f:
                traces.append(load_trace(f.read(), name=f"level{level}"))
            level += 1
        if not traces:
            raise ConfigError(f"no trace files in {cfg.ladder_dir}")
        return QualityLadder(traces)
    return synth_ladder(cfg.ladder_levels, cfg.ladder_frames, cfg.ladder_fps,
                        cfg.bitrates_bps(), sim.rng_stream("ladder", "synth"),
                        jitter=cfg.ladder_jitter)


def _fixed_node(node_id: str, pos: Position) -> Node:
    return Node(node_id, Mobility(MobilityState(position=pos)))


def _sta_node(cfg: ScenarioConfig, sim: Simulator, node_id: str, default_pos: Position) -> Node:
    if cfg.mobility == "fixed":
        pos = default_pos
        if cfg.sta_x is not None and cfg.sta_y is not None:
            pos = Position(cfg.sta_x, cfg.sta_y)
        return _fixed_node(node_id, pos)
    state = MobilityState(position=default_pos, model="random-walk-2d",
                          bounds=(cfg.walk_min_x, cfg.walk_max_x,
                                  cfg.walk_min_y, cfg.walk_max_y),
                          leg_period=cfg.leg_period_s,
                          speed_min=cfg.speed_min, speed_max=cfg.speed_max)
    return Node(node_id, Mobility(state, sim.rng_stream(node_id, "walk")))


def _server_config(cfg: ScenarioConfig, ladder: QualityLadder) -> ServerConfig:
    initial = min(cfg.initial_level, ladder.depth - 1)
    return ServerConfig(ladder=ladder, max_frame=cfg.max_frame,
                        interval_s=cfg.interval_s, packet_size=cfg.packet_size,
                        initial_level=initial)


def build_scenario(cfg: ScenarioConfig) -> Simulation:
    cfg.validate()
    sim = Simulator(seed=cfg.seed)
    metrics = MetricsCollector()
    ladder = _load_ladder(cfg, sim)
    nodes: dict[str, Node] = {}
    servers: list[StreamingServer] = []
    clients: list[StreamingClient] = []
    flows: list[str] = []
    media: list[object] = []

    def make_client(node_id: str, medium, server_id: str) -> StreamingClient:
        client = StreamingClient(sim, metrics, node_id, medium, server_id,
                                 ladder_depth=ladder.depth, frame_rate=cfg.frame_rate,
                                 initial_level=min(cfg.initial_level, ladder.depth - 1))
        clients.append(client)
        flows.append(client.flow)
        sim.schedule(0.0, client.start)
        return client

    if cfg.scenario in ("a", "b"):
        n_clients = 1 if cfg.scenario == "a" else 2
        server_node = _fixed_node("srv0", Position(0.0, 0.0))
        nodes[server_node.node_id] = server_node
        links = []
        for i in range(n_clients):
            cli_node = _fixed_node(f"cli{i}", Position(1.0 + i, 0.0))
            nodes[cli_node.node_id] = cli_node
            link = P2PLink(sim, metrics, server_node.node_id, cli_node.node_id,
                           rate_bps=cfg.p2p_rate_mbps * 1e6,
                           prop_delay_s=cfg.p2p_delay_ms / 1e3,
                           queue_capacity=cfg.p2p_queue_capacity)
            media.append(link)
            links.append((link, cli_node))
        # one server application, reachable over every link
        class _Fanout:
            def __init__(self, routes):
                self.routes = routes
            def send(self, packet):
                self.routes[packet.dst].send(packet)
        routes = {cli.node_id: link for link, cli in links}
        fanout = _Fanout(routes)
        server = StreamingServer(sim, metrics, server_node.node_id, fanout,
                                 _server_config(cfg, ladder))
        servers.append(server)
        for link, cli_node in links:
            link.attach(server_node.node_id, server.handle_packet)
            client = make_client(cli_node.node_id, link, server_node.node_id)
            link.attach(cli_node.node_id, client.handle_packet)

    elif cfg.scenario in ("c", "d"):
        num_ap = 1 if cfg.scenario == "c" else cfg.num_ap
        num_sta = 1 if cfg.scenario == "c" else cfg.num_sta
        channel = WirelessChannel(sim, metrics, phy_rate_bps=cfg.wifi_rate_mbps * 1e6,
                                  tx_power=cfg.tx_power_dbm,
                                  rx_sensitivity=cfg.rx_sensitivity_dbm,
                                  pathloss_exponent=cfg.pathloss_exponent,
                                  reference_loss=cfg.reference_loss_db,
                                  reference_distance=cfg.reference_distance_m)
        media.append(channel)
        ap_servers = []
        for i in range(num_ap):
            ap = _fixed_node(f"ap{i}", grid_position(i, cfg.grid_dx, cfg.grid_dy,
                                                     cfg.grid_width))
            nodes[ap.node_id] = ap
            server = StreamingServer(sim, metrics, ap.node_id, channel,
                                     _server_config(cfg, ladder))
            servers.append(server)
            ap_servers.append((ap, server))
            channel.attach(ap, server.handle_packet)
        for i in range(num_sta):
            default_pos = grid_position(num_ap + i, cfg.grid_dx, cfg.grid_dy,
                                        cfg.grid_width)
            sta = _sta_node(cfg, sim, f"sta{i}", default_pos)
            nodes[sta.node_id] = sta
            ap, _ = ap_servers[i % num_ap]
            client = make_client(sta.node_id, channel, ap.node_id)
            channel.attach(sta, client.handle_packet)
    else:
        raise ConfigError(f"unsupported scenario kind: {cfg.scenario!r}")

    return Simulation(cfg=cfg, sim=sim, metrics=metrics, nodes=nodes,
                      servers=servers, clients=clients, flows=flows, media=media)


def summarize(simulation: Simulation) -> str:
    cfg = simulation.cfg
    events = simulation.metrics.events
    lines = []
    for flow in simulation.flows:
        total = sum(e.value for e in events if e.flow == flow and e.kind == "frame_complete")
        mean_mbps = total * 8.0 / (cfg.horizon_s * 1e6)
        counts = {k: sum(1 for e in events if e.flow == flow and e.kind == k)
                  for k in ("rebuffer", "level_up", "level_down", "stop")}
        lines.append(f"flow {flow}: mean {mean_mbps:.3f} Mb/s, "
                     f"rebuffers {counts['rebuffer']}, "
                     f"level up {counts['level_up']}, down {counts['level_down']}, "
                     f"stops {counts['stop']}")
    return "\n".join(lines)


def run_scenario(cfg: ScenarioConfig) -> int:
    simulation = build_scenario(cfg)
    simulation.sim.run(cfg.horizon_s)
    simulation.metrics.close()
    report = RunReport(events=simulation.metrics.events,
                       timeline=simulation.metrics.timeline,
                       flows=simulation.flows, horizon_s=cfg.horizon_s,
                       bin_width_s=cfg.throughput_bin_s)
    write_csv(report, cfg.out_dir)
    print(summarize(simulation))
    return 0
