"""Deterministic discrete-event simulator of adaptive-bitrate video
streaming over wired point-to-point links and shared wireless channels."""

from .engine import Event, RngStream, Simulator
from .metrics import MetricsCollector, RunReport, throughput_series, write_csv
from .netmodel import (Mobility, MobilityState, Node, P2PLink, Position,
                       SimPacket, WirelessChannel, delivery_decision,
                       grid_position, path_loss_db, step_random_walk)
from .scenarios import (ConfigError, ScenarioConfig, build_scenario,
                        parse_config, run_scenario)
from .streaming import (ControlPacket, DataPacketHeader, QualityLadder,
                        ServerConfig, StreamingClient, StreamingServer,
                        VideoTrace, fragment_frame, load_trace, synth_ladder)

__version__ = "0.1.0"
