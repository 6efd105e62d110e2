import os

import pytest

from abrsim.engine import NS_PER_S
from abrsim.metrics import (CollectorClosedError, MetricsCollector, RunReport,
                            throughput_series, write_csv)


def _collector_with(events):
    c = MetricsCollector()
    for ev in events:
        c.record(*ev)
    return c


class TestRecord:
    def test_stored_verbatim(self):
        c = _collector_with([(NS_PER_S, "cli", "f", "rx_packet", 1400)])
        ev = c.events[0]
        assert (ev.time_ns, ev.node, ev.flow, ev.kind, ev.value) == \
            (NS_PER_S, "cli", "f", "rx_packet", 1400)

    def test_insertion_order_preserved_for_equal_times(self):
        c = _collector_with([(5, "a", "f", "play", 1), (5, "b", "f", "play", 2)])
        assert [e.value for e in c.events] == [1, 2]

    def test_unknown_kind_rejected(self):
        c = MetricsCollector()
        with pytest.raises(ValueError):
            c.record(0, "a", "f", "bogus", 1)

    def test_record_after_close_errors(self):
        c = MetricsCollector()
        c.close()
        with pytest.raises(CollectorClosedError):
            c.record(0, "a", "f", "play", 1)
        with pytest.raises(CollectorClosedError):
            c.timeline_row(0, "a", 0, 0, "play")


class TestThroughputSeries:
    def test_hundred_frames_in_first_second(self):
        events = [(i * 10_000_000, "cli", "f", "frame_complete", 1400)
                  for i in range(100)]
        c = _collector_with(events)
        s = throughput_series(c.events, "f", 1.0, 5.0)
        assert s.bytes_per_bin[0] == 140_000
        assert s.mbps[0] == pytest.approx(1.12)
        assert s.bytes_per_bin[1:] == [0, 0, 0, 0]

    def test_no_events_all_zero(self):
        s = throughput_series([], "f", 1.0, 3.0)
        assert s.bytes_per_bin == [0, 0, 0]

    def test_single_frame_lands_in_its_bin(self):
        c = _collector_with([(int(2.5 * NS_PER_S), "cli", "f", "frame_complete", 22500)])
        s = throughput_series(c.events, "f", 1.0, 5.0)
        assert s.bytes_per_bin == [0, 0, 22500, 0, 0]
        assert s.mbps[2] == pytest.approx(0.18)

    def test_other_flows_and_kinds_excluded(self):
        c = _collector_with([
            (0, "cli", "f", "frame_complete", 100),
            (0, "cli", "g", "frame_complete", 999),
            (0, "cli", "f", "rx_packet", 999),
        ])
        s = throughput_series(c.events, "f", 1.0, 1.0)
        assert s.bytes_per_bin == [100]

    def test_bad_bin_width(self):
        with pytest.raises(ValueError):
            throughput_series([], "f", 0.0, 1.0)

    def test_binned_sum_conserves_total(self):
        events = [(int(t * NS_PER_S), "cli", "f", "frame_complete", 1000 + i)
                  for i, t in enumerate([0.1, 0.9, 1.5, 2.2, 4.99])]
        c = _collector_with(events)
        s = throughput_series(c.events, "f", 1.0, 5.0)
        assert sum(s.bytes_per_bin) == sum(e.value for e in c.events)


class TestWriteCsv:
    def test_empty_run_headers_only(self, tmp_path):
        report = RunReport(events=[], timeline=[], flows=[], horizon_s=1.0)
        write_csv(report, str(tmp_path))
        assert (tmp_path / "event_log.csv").read_text() == "time_s,node,flow,kind,value\n"
        assert (tmp_path / "throughput.csv").read_text() == "flow,t_start_s,t_end_s,bytes,mbps\n"
        assert (tmp_path / "client_timeline.csv").read_text() == \
            "time_s,client,buffer_frames,level,event\n"

    def test_identical_reports_identical_bytes(self, tmp_path):
        c = _collector_with([(123456789, "cli", "f", "frame_complete", 1400)])
        c.timeline_row(NS_PER_S, "cli", 10, 3, "rebuffer")
        report = RunReport(events=c.events, timeline=c.timeline, flows=["f"], horizon_s=2.0)
        write_csv(report, str(tmp_path / "one"))
        write_csv(report, str(tmp_path / "two"))
        for name in ("event_log.csv", "throughput.csv", "client_timeline.csv"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()

    def test_single_stop_row(self, tmp_path):
        c = MetricsCollector()
        c.timeline_row(3 * NS_PER_S, "cli", 10, 3, "stop")
        report = RunReport(events=[], timeline=c.timeline, flows=[], horizon_s=5.0)
        write_csv(report, str(tmp_path))
        lines = (tmp_path / "client_timeline.csv").read_text().splitlines()
        assert lines[1:] == ["3.000000,cli,10,3,stop"]

    def test_io_failure_names_path(self, tmp_path):
        target = tmp_path / "blocked"
        target.write_text("file, not a directory")
        report = RunReport(events=[], timeline=[], flows=[], horizon_s=1.0)
        with pytest.raises(OSError, match="blocked"):
            write_csv(report, str(target))
