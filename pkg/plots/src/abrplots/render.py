"""Chart rendering from the simulator's CSV metrics files.

Reads only the documented CSV schemas, never simulator internals, so the
renderers work against hand-written fixtures too.
"""

from __future__ import annotations

import csv
import os
import warnings

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

THROUGHPUT_COLUMNS = ["flow", "t_start_s", "t_end_s", "bytes", "mbps"]
TIMELINE_COLUMNS = ["time_s", "client", "buffer_frames", "level", "event"]


class SchemaError(ValueError):
    pass


def _read_csv(path: str, expected_columns: list[str]) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        missing = [c for c in expected_columns if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        return list(reader)


def read_throughput(path: str) -> dict[str, tuple[list[float], list[float]]]:
    """Per-flow (bin start times, Mb/s) series, in file order."""
    series: dict[str, tuple[list[float], list[float]]] = {}
    for row in _read_csv(path, THROUGHPUT_COLUMNS):
        try:
            t = float(row["t_start_s"])
            mbps = float(row["mbps"])
        except ValueError:
            raise SchemaError(f"{path}: non-numeric value in t_start_s/mbps")
        times, values = series.setdefault(row["flow"], ([], []))
        times.append(t)
        values.append(mbps)
    return series


def render_throughput(in_dirs: list[str], out_path: str):
    """One chart over the throughput.csv of each input directory; one line
    per flow, labelled by directory when several are given."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    n_series = 0
    for in_dir in in_dirs:
        path = os.path.join(in_dir, "throughput.csv")
        for flow, (times, values) in read_throughput(path).items():
            label = flow if len(in_dirs) == 1 else f"{os.path.basename(os.path.normpath(in_dir))}/{flow}"
            ax.plot(times, values, label=label)
            n_series += 1
    ax.set_xlabel("time (s)")
    ax.set_ylabel("application throughput (Mb/s)")
    if n_series:
        ax.legend(fontsize=8)
    else:
        warnings.warn("no throughput series found; rendering empty axes")
    fig.tight_layout()
    fig.savefig(out_path)
    return fig


def render_client_timeline(csv_path: str, out_path: str):
    """Stacked panels per timeline file: buffer occupancy, quality level
    step plot, and rebuffer/stop markers."""
    rows = _read_csv(csv_path, TIMELINE_COLUMNS)
    fig, (ax_buf, ax_lvl) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    clients = sorted({r["client"] for r in rows})
    for client in clients:
        mine = [r for r in rows if r["client"] == client]
        try:
            times = [float(r["time_s"]) for r in mine]
            buffers = [int(r["buffer_frames"]) for r in mine]
            levels = [int(r["level"]) for r in mine]
        except ValueError:
            raise SchemaError(f"{csv_path}: non-numeric time_s/buffer_frames/level")
        ax_buf.plot(times, buffers, marker="o", markersize=2, label=client)
        ax_lvl.step(times, levels, where="post", label=client)
        rebuf = [(float(r["time_s"]), int(r["buffer_frames"]))
                 for r in mine if r["event"] == "rebuffer"]
        stops = [(float(r["time_s"]), int(r["buffer_frames"]))
                 for r in mine if r["event"] == "stop"]
        if rebuf:
            ax_buf.scatter(*zip(*rebuf), marker="v", color="tab:orange",
                           zorder=3, label=f"{client} rebuffer")
        if stops:
            ax_buf.scatter(*zip(*stops), marker="x", color="tab:red",
                           zorder=3, label=f"{client} stop")
    ax_buf.set_ylabel("buffer (frames)")
    ax_lvl.set_ylabel("quality level")
    ax_lvl.set_xlabel("time (s)")
    if clients:
        ax_buf.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path)
    return fig
