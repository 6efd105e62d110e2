import os

import pytest

from abrsim.netmodel import P2PLink, WirelessChannel
from abrsim.scenarios import (ConfigError, ScenarioConfig, build_scenario,
                              parse_config, run_scenario, summarize)


class TestParseConfig:
    def test_minimal_with_defaults(self):
        cfg = parse_config("scenario = a\nseed = 7")
        assert cfg.scenario == "a"
        assert cfg.seed == 7
        assert cfg.max_frame == 500
        assert cfg.interval_s == 0.01
        assert cfg.packet_size == 1400

    def test_negative_rate_rejected(self):
        with pytest.raises(ConfigError, match="p2p_rate_mbps"):
            parse_config("seed = 1\np2p_rate_mbps = -1")

    def test_scenario_d_counts(self):
        cfg = parse_config("scenario = d\nseed = 1\nnum_sta = 3\nnum_ap = 3")
        assert (cfg.num_sta, cfg.num_ap) == (3, 3)

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="line 2.*frobnicate"):
            parse_config("seed = 1\nfrobnicate = yes")

    def test_comments_and_blanks(self):
        cfg = parse_config("# header\nseed = 1  # trailing\n\nscenario = b\n")
        assert cfg.scenario == "b"

    def test_seed_mandatory(self):
        with pytest.raises(ConfigError, match="seed"):
            parse_config("scenario = a")

    def test_missing_ladder_dir_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="level0"):
            parse_config(f"seed = 1\nladder_dir = {tmp_path}")

    def test_round_trip(self):
        cfg = parse_config("scenario = c\nseed = 11\nwifi_rate_mbps = 18\nmobility = fixed")
        again = parse_config(cfg.to_text())
        assert again == cfg


class TestBuildScenario:
    def test_kind_a(self):
        s = build_scenario(parse_config("scenario = a\nseed = 1"))
        assert len(s.nodes) == 2
        assert len(s.media) == 1 and isinstance(s.media[0], P2PLink)
        assert s.flows == ["srv0->cli0"]

    def test_kind_b(self):
        s = build_scenario(parse_config("scenario = b\nseed = 1"))
        assert len(s.nodes) == 3
        assert len(s.media) == 2
        assert s.flows == ["srv0->cli0", "srv0->cli1"]

    def test_kind_c(self):
        s = build_scenario(parse_config("scenario = c\nseed = 1"))
        assert len(s.nodes) == 2
        assert len(s.media) == 1 and isinstance(s.media[0], WirelessChannel)
        ap = s.nodes["ap0"]
        assert ap.mobility.position_at(0).x == 0 and ap.mobility.position_at(0).y == 0
        assert s.flows == ["ap0->sta0"]

    def test_kind_d(self):
        s = build_scenario(parse_config("scenario = d\nseed = 1\nnum_sta = 3\nnum_ap = 3"))
        assert len(s.nodes) == 6
        assert len(s.media) == 1
        assert s.flows == ["ap0->sta0", "ap1->sta1", "ap2->sta2"]

    def test_unsupported_kind(self):
        cfg = ScenarioConfig(scenario="custom", seed=1)
        with pytest.raises(ConfigError):
            build_scenario(cfg)

    def test_ladder_from_disk(self, tmp_path):
        (tmp_path / "level0.txt").write_text("100\n200\n")
        (tmp_path / "level1.txt").write_text("300\n400\n")
        cfg = parse_config(f"scenario = a\nseed = 1\nladder_dir = {tmp_path}")
        s = build_scenario(cfg)
        assert s.servers[0].config.ladder.depth == 2
        assert s.servers[0].config.initial_level == 1  # clamped to ladder


class TestRunScenario:
    def test_writes_three_csvs_and_summary(self, tmp_path, capsys):
        cfg = parse_config(f"scenario = a\nseed = 7\nhorizon_s = 10\nout_dir = {tmp_path}")
        assert run_scenario(cfg) == 0
        for name in ("event_log.csv", "throughput.csv", "client_timeline.csv"):
            assert (tmp_path / name).exists()
        out = capsys.readouterr().out
        assert "flow srv0->cli0" in out

    def test_same_seed_identical_summary(self, tmp_path, capsys):
        outputs = []
        for sub in ("one", "two"):
            cfg = parse_config(f"scenario = b\nseed = 3\nhorizon_s = 8\n"
                               f"out_dir = {tmp_path / sub}")
            run_scenario(cfg)
            outputs.append(capsys.readouterr().out)
        assert outputs[0] == outputs[1]

    def test_control_requests_reach_server(self, tmp_path):
        # every client-side level change must be followed by a server-side
        # videoLevel change no earlier than the request
        cfg = parse_config(f"scenario = a\nseed = 5\nhorizon_s = 10\n"
                           f"p2p_rate_mbps = 54\np2p_queue_capacity = 100000\n"
                           f"out_dir = {tmp_path}")
        s = build_scenario(cfg)
        s.sim.run(cfg.horizon_s)
        requests = [e for e in s.metrics.events if e.kind in ("level_up", "level_down")]
        changes = s.servers[0].level_change_log
        assert requests, "expected at least one level change in this setup"
        assert len(changes) == len(requests)
        for req, (t_change, _, level) in zip(requests, changes):
            assert t_change >= req.time_ns
            assert level == req.value


def test_frame_conservation(tmp_path):
    # played + still buffered = completed, and completed + evicted account
    # for every frame the event log says finished or timed out
    cfg = parse_config(f"scenario = c\nseed = 11\nhorizon_s = 12\nout_dir = {tmp_path}")
    s = build_scenario(cfg)
    s.sim.run(cfg.horizon_s)
    client = s.clients[0]
    completed_log = sum(1 for e in s.metrics.events if e.kind == "frame_complete")
    evicted_log = sum(1 for e in s.metrics.events if e.kind == "frame_evicted")
    played_log = sum(e.value for e in s.metrics.events if e.kind == "play")
    assert completed_log == client.frames_completed
    assert evicted_log == client.frames_evicted
    assert played_log == client.frames_played
    assert client.frames_played + client.cur_buffer_size == client.frames_completed


def test_cli_run_and_errors(tmp_path):
    import subprocess
    import sys
    out = subprocess.run([sys.executable, "-m", "abrsim", "run", "--scenario", "a",
                          "--seed", "7", "--out", str(tmp_path / "o"),
                          "--horizon", "5"], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "o" / "event_log.csv").exists()

    bad = subprocess.run([sys.executable, "-m", "abrsim", "run", "--scenario", "e",
                          "--seed", "1"], capture_output=True, text=True)
    assert bad.returncode != 0
    no_seed = subprocess.run([sys.executable, "-m", "abrsim", "run", "--scenario", "a"],
                             capture_output=True, text=True)
    assert no_seed.returncode != 0
    assert "seed" in no_seed.stderr


def test_cli_trace_gen(tmp_path):
    import subprocess
    import sys
    out = subprocess.run([sys.executable, "-m", "abrsim", "trace-gen", "--levels", "3",
                          "--frames", "20", "--fps", "25", "--out", str(tmp_path),
                          "--seed", "4"], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    for lvl in range(3):
        assert (tmp_path / f"level{lvl}.txt").exists()
    # generated files are loadable as a ladder
    cfg = parse_config(f"scenario = a\nseed = 1\nladder_dir = {tmp_path}")
    s = build_scenario(cfg)
    assert s.servers[0].config.ladder.depth == 3
