import json
import os

import numpy as np
import pytest

import fixture_square as fx
from conftest import make_stream, random_stream

from evtkit.cli import EXIT_IO, EXIT_OK, EXIT_USAGE, main
from evtkit.io import read_events, write_events
from evtkit.pgm import read_pnm


@pytest.fixture
def square_dir(tmp_path):
    return fx.write_frame_dir(str(tmp_path / "frames"))


def run(args):
    return main(list(args))


def test_simulate_constant_video_zero_events(tmp_path):
    frames_dir = tmp_path / "const"
    os.makedirs(frames_dir)
    from evtkit.pgm import write_pgm
    for k in range(3):
        write_pgm(np.full((8, 8), 99, np.uint8), frames_dir / f"{k}.pgm")
    out = tmp_path / "out.evb"
    assert run(["simulate", str(frames_dir), str(out), "--fps", "10"]) == EXIT_OK
    stream = read_events(out)
    assert len(stream) == 0


def test_simulate_step_fixture_matches_library(square_dir, tmp_path):
    out = tmp_path / "sq.evb"
    assert run(["simulate", square_dir, str(out), "--fps", "20"]) == EXIT_OK
    stream = read_events(out)
    from evtkit.simulate import SimulatorConfig, load_frame_sequence, simulate
    ref = simulate(load_frame_sequence(square_dir, 20.0), SimulatorConfig())
    assert len(stream) == len(ref)
    assert stream.t.tolist() == ref.t.tolist()


def test_simulate_missing_dir_exits_3_no_partial_output(tmp_path):
    out = tmp_path / "out.evb"
    code = run(["simulate", str(tmp_path / "nope"), str(out), "--fps", "10"])
    assert code == EXIT_IO
    assert not out.exists()
    assert not (tmp_path / "out.evb.tmp").exists()


def test_simulate_bad_fps_exits_2(square_dir, tmp_path):
    code = run(["simulate", square_dir, str(tmp_path / "o.evb"),
                "--fps", "-5"])
    assert code == EXIT_USAGE


def test_ecm_empty_input(tmp_path, capsys):
    events = tmp_path / "empty.evt"
    write_events(make_stream([], t_start=0, t_end=1_000_000), events)
    out_dir = tmp_path / "ecm"
    assert run(["ecm", str(events), str(out_dir),
                "--window-us", "100000"]) == EXIT_OK
    captured = capsys.readouterr()
    assert "bins: 10" in captured.out
    pgms = sorted(os.listdir(out_dir))
    assert len(pgms) == 10
    img = read_pnm(out_dir / pgms[0])
    assert np.all(img == 128)


def test_ecm_count_conservation_printed(tmp_path, rng, capsys):
    stream = random_stream(rng, 5000)
    events = tmp_path / "ev.evb"
    write_events(stream, events)
    assert run(["ecm", str(events), str(tmp_path / "out"),
                "--window-us", "123457"]) == EXIT_OK
    out = capsys.readouterr().out
    assert f"total: {len(stream)} events" in out


def test_ecm_dump_raw_matches_library(tmp_path, rng):
    stream = random_stream(rng, 2000)
    events = tmp_path / "ev.evb"
    write_events(stream, events)
    out_dir = tmp_path / "out"
    assert run(["ecm", str(events), str(out_dir), "--window-us", "250000",
                "--dump-raw"]) == EXIT_OK
    from evtkit.representations import build_ecm, read_ecm_raw
    ref = build_ecm(stream, 250_000)
    for frame in ref.bins:
        _, raw = read_ecm_raw(out_dir / f"ecm_{frame.bin_index:06d}.ecmr")
        assert np.array_equal(raw, frame.raw)


def test_reconstruct_empty_stream_uniform_frames(tmp_path):
    events = tmp_path / "empty.evt"
    write_events(make_stream([], t_start=0, t_end=300_000), events)
    out_dir = tmp_path / "rec"
    assert run(["reconstruct", str(events), str(out_dir),
                "--sample-period-us", "100000"]) == EXIT_OK
    for name in os.listdir(out_dir):
        img = read_pnm(out_dir / name)
        assert len(np.unique(img)) == 1


def test_reconstruct_alpha_zero_matches_scaled_ecm(tmp_path, rng):
    stream = random_stream(rng, 3000)
    events = tmp_path / "ev.evb"
    write_events(stream, events)
    out_dir = tmp_path / "rec"
    assert run(["reconstruct", str(events), str(out_dir), "--alpha", "0",
                "--contrast", "0.5",
                "--sample-period-us", "1000000"]) == EXIT_OK
    from evtkit.reconstruction import ReconConfig, reconstruct_states
    from evtkit.representations import build_ecm
    _, states = reconstruct_states(stream, ReconConfig(
        alpha=0.0, contrast=0.5, sample_period=1_000_000))
    ecm = build_ecm(stream, 1_000_001)
    assert np.array_equal(states[-1], 0.5 * ecm.bins[0].raw.astype(float))


def test_eval_gt_as_detections_is_perfect(tmp_path, capsys):
    gt = tmp_path / "gt.csv"
    gt.write_text("\n".join(fx.gt_csv_rows()) + "\n")
    # one detection per 100 ms bin, placed at the bin's surviving frame
    # (track dedup keeps the latest frame, so frames 1,3,..,19 and 20)
    det_rows = []
    for i in range(10):
        frame = 2 * i + 1
        left = fx.square_left(frame)
        det_rows.append(
            f"{frame},{left},{fx.TOP},{fx.SQUARE},{fx.SQUARE},1.0,1")
    det_rows.append(
        f"20,{fx.square_left(20)},{fx.TOP},{fx.SQUARE},{fx.SQUARE},1.0,1")
    det = tmp_path / "det.csv"
    det.write_text("\n".join(det_rows) + "\n")
    report_path = tmp_path / "report.json"
    assert run(["eval", str(gt), str(det), "--fps", "20",
                "--window-us", "100000",
                "--report", str(report_path)]) == EXIT_OK
    report = json.loads(report_path.read_text())
    assert report["map"] == 1.0
    assert report["ap50"] == 1.0
    assert "all" in capsys.readouterr().out


def test_eval_no_detections_zero_map(tmp_path):
    gt = tmp_path / "gt.csv"
    gt.write_text("\n".join(fx.gt_csv_rows()) + "\n")
    det = tmp_path / "det.csv"
    det.write_text("")
    report_path = tmp_path / "report.json"
    assert run(["eval", str(gt), str(det), "--fps", "20",
                "--window-us", "100000",
                "--report", str(report_path)]) == EXIT_OK
    report = json.loads(report_path.read_text())
    assert report["map"] == 0.0


def test_stats_known_fixture(tmp_path, capsys):
    stream = make_stream([(10, 1, 1, 1), (20, 2, 2, -1), (30, 3, 3, -1)],
                         width=8, height=8, t_start=0, t_end=100)
    events = tmp_path / "ev.evt"
    write_events(stream, events)
    assert run(["stats", str(events)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "events: 3" in out
    assert "+1 / -2" in out
    assert "8x8" in out


def test_stats_empty(tmp_path, capsys):
    events = tmp_path / "ev.evt"
    write_events(make_stream([], t_start=0, t_end=0), events)
    assert run(["stats", str(events)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "events: 0" in out


def test_stats_malformed_exits_2(tmp_path):
    bad = tmp_path / "bad.evt"
    bad.write_text("# EVT 8 8 0 100\nnot an event\n")
    assert run(["stats", str(bad)]) == EXIT_USAGE


def test_config_file_defaults_flags_win(tmp_path, square_dir):
    cfg = tmp_path / "evtkit.ini"
    cfg.write_text("[simulate]\ntheta-pos = 0.4\ntheta-neg = 0.4\n")
    out_default = tmp_path / "a.evb"
    out_config = tmp_path / "b.evb"
    out_flag = tmp_path / "c.evb"
    run(["simulate", square_dir, str(out_default), "--fps", "20"])
    run(["--config", str(cfg), "simulate", square_dir, str(out_config),
         "--fps", "20"])
    run(["--config", str(cfg), "simulate", square_dir, str(out_flag),
         "--fps", "20", "--theta-pos", "0.2", "--theta-neg", "0.2"])
    n_default = len(read_events(out_default))
    n_config = len(read_events(out_config))
    n_flag = len(read_events(out_flag))
    assert n_config < n_default  # higher threshold -> fewer events
    assert n_flag == n_default   # explicit flags override the file


def test_threads_flag_does_not_change_output(tmp_path, rng):
    stream = random_stream(rng, 3000)
    events = tmp_path / "ev.evb"
    write_events(stream, events)
    dirs = [tmp_path / "t1", tmp_path / "t4"]
    for d, n in zip(dirs, ["1", "4"]):
        assert run(["ecm", str(events), str(d), "--window-us", "100000",
                    "--threads", n]) == EXIT_OK
    for name in sorted(os.listdir(dirs[0])):
        a = (dirs[0] / name).read_bytes()
        b = (dirs[1] / name).read_bytes()
        assert a == b
