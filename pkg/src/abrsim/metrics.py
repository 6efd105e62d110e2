"""Run measurements and CSV serialization.

Every behavioural event of a run lands in one append-only collector; after
the run completes the collector is closed and written to three CSV files
with fixed schemas. Output is byte-identical for identical runs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .engine import NS_PER_S

METRIC_KINDS = frozenset({
    "tx_packet", "rx_packet", "frame_complete", "frame_evicted",
    "play", "rebuffer", "stop", "level_up", "level_down",
    "drop_queue", "drop_range",
})


class CollectorClosedError(RuntimeError):
    pass


@dataclass(frozen=True)
class MetricEvent:
    time_ns: int
    node: str
    flow: str
    kind: str
    value: int


@dataclass(frozen=True)
class TimelineRow:
    time_ns: int
    client: str
    buffer_frames: int
    level: int
    event: str


@dataclass
class ThroughputSeries:
    flow: str
    bin_width_s: float
    bytes_per_bin: list[int]

    @property
    def mbps(self) -> list[float]:
        return [b * 8.0 / (self.bin_width_s * 1e6) for b in self.bytes_per_bin]


class MetricsCollector:
    def __init__(self):
        self.events: list[MetricEvent] = []
        self.timeline: list[TimelineRow] = []
        self._open = True

    def record(self, time_ns: int, node: str, flow: str, kind: str, value: int) -> None:
        if not self._open:
            raise CollectorClosedError("collector already closed")
        if kind not in METRIC_KINDS:
            raise ValueError(f"unknown metric kind: {kind}")
        self.events.append(MetricEvent(time_ns, node, flow, kind, int(value)))

    def timeline_row(self, time_ns: int, client: str, buffer_frames: int,
                     level: int, event: str) -> None:
        if not self._open:
            raise CollectorClosedError("collector already closed")
        self.timeline.append(TimelineRow(time_ns, client, buffer_frames, level, event))

    def close(self) -> None:
        self._open = False


def throughput_series(events: list[MetricEvent], flow: str, bin_width_s: float,
                      horizon_s: float) -> ThroughputSeries:
    """Application-level throughput: bytes of fully reassembled frames per
    contiguous time bin from t=0; empty bins are present with 0."""
    if bin_width_s <= 0:
        raise ValueError("bin_width must be > 0")
    n_bins = max(1, -(-int(round(horizon_s * 1e9)) // int(round(bin_width_s * 1e9))))
    bins = [0] * n_bins
    bin_width_ns = bin_width_s * NS_PER_S
    for ev in events:
        if ev.flow != flow or ev.kind != "frame_complete":
            continue
        idx = int(ev.time_ns // bin_width_ns)
        if idx >= n_bins:
            idx = n_bins - 1
        bins[idx] += ev.value
    return ThroughputSeries(flow, bin_width_s, bins)


def _fmt_s(time_ns: int) -> str:
    return f"{time_ns / NS_PER_S:.6f}"


@dataclass
class RunReport:
    events: list[MetricEvent]
    timeline: list[TimelineRow]
    flows: list[str]
    horizon_s: float
    bin_width_s: float = 1.0


def write_csv(report: RunReport, out_dir: str) -> list[str]:
    """Write event_log.csv, throughput.csv, client_timeline.csv into out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    try:
        path = os.path.join(out_dir, "event_log.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("time_s,node,flow,kind,value\n")
            for ev in report.events:
                f.write(f"{_fmt_s(ev.time_ns)},{ev.node},{ev.flow},{ev.kind},{ev.value}\n")
        paths.append(path)

        path = os.path.join(out_dir, "throughput.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("flow,t_start_s,t_end_s,bytes,mbps\n")
            for flow in report.flows:
                series = throughput_series(report.events, flow, report.bin_width_s,
                                           report.horizon_s)
                for i, nbytes in enumerate(series.bytes_per_bin):
                    t0 = i * report.bin_width_s
                    t1 = t0 + report.bin_width_s
                    mbps = nbytes * 8.0 / (report.bin_width_s * 1e6)
                    f.write(f"{flow},{t0:.6f},{t1:.6f},{nbytes},{mbps:.6f}\n")
        paths.append(path)

        path = os.path.join(out_dir, "client_timeline.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("time_s,client,buffer_frames,level,event\n")
            for row in report.timeline:
                f.write(f"{_fmt_s(row.time_ns)},{row.client},{row.buffer_frames},"
                        f"{row.level},{row.event}\n")
        paths.append(path)
    except OSError as exc:
        raise OSError(f"failed writing metrics CSV under {out_dir}: {exc}") from exc
    return paths
