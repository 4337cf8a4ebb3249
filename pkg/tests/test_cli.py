import csv
import io
import json
import shutil
import subprocess
import sys

import pytest

from vlc_handover.cli import build_parser, main
from vlc_handover.scene import SCENE_DIR_ENV, dump_scene, load_scene_file

from .conftest import FIXTURES


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


# --- trajectory ---------------------------------------------------------------

def test_trajectory_writes_report_and_events(tmp_path, capsys):
    out = tmp_path / "walk.csv"
    code, stdout, _ = run(["trajectory", "--seed", 42, "--out", out], capsys)
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 13 * 5
    assert {"frame", "label", "kurtosis", "serving_cell"} <= set(rows[0])
    events = read_csv(tmp_path / "walk_events.csv")
    assert len(events) == 1
    assert (events[0]["from_cell"], events[0]["to_cell"]) == ("1", "2")
    assert "1 handover event" in stdout


def test_trajectory_json_and_custom_event_path(tmp_path, capsys):
    out, ev = tmp_path / "walk.json", tmp_path / "ev.csv"
    code, _, _ = run(["trajectory", "--seed", 1, "--out", out, "--format", "json", "--events", ev,
                      "--frames-per-waypoint", 2], capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    assert len(doc["records"]) == 26
    assert ev.exists()


def test_missing_seed_is_a_config_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["trajectory", "--out", str(tmp_path / "x.csv")])
    code = exc.value.code
    err = capsys.readouterr().err
    assert code == 1
    assert "--seed" in err


def test_unreadable_scene_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("room: [this is not a scene")
    code, _, err = run(["trajectory", "--seed", 0, "--out", tmp_path / "o.csv", "--scene", bad], capsys)
    assert code == 1
    assert "scene" in err
    code, _, _ = run(["trajectory", "--seed", 0, "--out", tmp_path / "o.csv",
                      "--scene", tmp_path / "missing.yaml"], capsys)
    assert code == 1


def test_invalid_handover_settings_exit_1(tmp_path, capsys):
    code, _, _ = run(["trajectory", "--seed", 0, "--out", tmp_path / "o.csv", "--gain-hysteresis", 0.5], capsys)
    assert code == 1
    code, _, _ = run(["trajectory", "--seed", 0, "--out", tmp_path / "o.csv", "--power-scale", 0], capsys)
    assert code == 1


def test_scene_directory_from_environment(tmp_path, capsys, monkeypatch):
    scene = load_scene_file("paper_scene")
    (tmp_path / "mine.yaml").write_text(dump_scene(scene))
    monkeypatch.setenv(SCENE_DIR_ENV, str(tmp_path))
    out = tmp_path / "o.csv"
    code, _, _ = run(["trajectory", "--seed", 3, "--scene", "mine", "--out", out,
                      "--frames-per-waypoint", 1], capsys)
    assert code == 0
    ref = tmp_path / "ref.csv"
    run(["trajectory", "--seed", 3, "--out", ref, "--frames-per-waypoint", 1], capsys)
    assert out.read_bytes() == ref.read_bytes()


def test_trajectory_plot(tmp_path, capsys):
    png = tmp_path / "walk.png"
    code, _, _ = run(["trajectory", "--seed", 0, "--out", tmp_path / "w.csv", "--plot", png,
                      "--frames-per-waypoint", 2], capsys)
    assert code == 0
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


# --- bermap -------------------------------------------------------------------

def test_bermap_default_grid(tmp_path, capsys):
    out = tmp_path / "ber.csv"
    with pytest.warns(UserWarning):
        code, _, _ = run(["bermap", "--seed", 0, "--out", out, "--bits-per-point", 620], capsys)
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 64
    assert list(rows[0]) == ["x_m", "y_m", "ber_t1", "ber_t2", "ber_max"]
    for r in rows:
        assert float(r["ber_max"]) == max(float(r["ber_t1"]), float(r["ber_t2"]))


def test_bermap_concurrent_with_plot(tmp_path, capsys):
    out, png = tmp_path / "ber.csv", tmp_path / "ber.png"
    with pytest.warns(UserWarning):
        code, _, _ = run(["bermap", "--seed", 0, "--out", out, "--nx", 3, "--ny", 2, "--mode", "concurrent",
                          "--bits-per-point", 620, "--plot", png], capsys)
    assert code == 0
    assert len(read_csv(out)) == 6
    assert png.stat().st_size > 0


@pytest.mark.parametrize("flag", ["--nx", "--ny"])
def test_bermap_bad_grid(tmp_path, capsys, flag):
    code, _, err = run(["bermap", "--seed", 0, "--out", tmp_path / "b.csv", flag, 0], capsys)
    assert code == 1
    assert "--nx" in err


def test_bermap_bad_mode(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bermap", "--seed", "0", "--out", str(tmp_path / "b.csv"), "--mode", "loud"])
    assert exc.value.code == 1


# --- kurtosis -----------------------------------------------------------------

def kurtosis_record(stdout):
    return next(csv.DictReader(io.StringIO(stdout)))


def test_kurtosis_two_level(capsys):
    code, out, _ = run(["kurtosis", FIXTURES / "two_level.csv"], capsys)
    assert code == 0
    rec = kurtosis_record(out)
    assert float(rec["kurtosis"]) == 1.0
    assert rec["class"] == "platykurtic"


def test_kurtosis_gaussian_fixture(capsys):
    code, out, _ = run(["kurtosis", FIXTURES / "gaussian_waveform.csv", "--bins", 16], capsys)
    assert code == 0
    rec = kurtosis_record(out)
    assert float(rec["kurtosis"]) == pytest.approx(3.0, abs=0.05)
    assert rec["class"] == "mesokurtic"
    assert "bin_lo,bin_hi,probability" in out


def test_kurtosis_constant_is_runtime_error(capsys):
    code, _, err = run(["kurtosis", FIXTURES / "constant.csv"], capsys)
    assert code == 2
    assert "zero variance" in err


def test_kurtosis_missing_file(tmp_path, capsys):
    code, _, _ = run(["kurtosis", tmp_path / "nope.csv"], capsys)
    assert code == 1


def test_kurtosis_id_segment_of_exported_waveform(tmp_path, capsys):
    wf = tmp_path / "wf.csv"
    assert run(["waveform", "--seed", 5, "--x", 0.4, "--y", 0.8, "--out", wf], capsys)[0] == 0
    code, out, _ = run(["kurtosis", wf, "--id-segment", 50], capsys)
    assert code == 0
    rec = kurtosis_record(out)
    assert int(rec["n"]) == 100
    assert float(rec["kurtosis"]) < 2.0


def test_waveform_outside_room(tmp_path, capsys):
    code, _, _ = run(["waveform", "--seed", 0, "--x", 5, "--y", 0.8, "--out", tmp_path / "w.csv"], capsys)
    assert code == 1


# --- determinism and help ------------------------------------------------------

def test_same_seed_same_bytes(tmp_path, capsys):
    cmds = {
        "traj": ["trajectory", "--seed", 11, "--frames-per-waypoint", 2],
        "ber": ["bermap", "--seed", 11, "--nx", 2, "--ny", 2, "--bits-per-point", 10_000],
        "wave": ["waveform", "--seed", 11, "--x", 0.8, "--y", 0.8],
    }
    for name, argv in cmds.items():
        a, b = tmp_path / f"{name}_a.csv", tmp_path / f"{name}_b.csv"
        assert run(argv + ["--out", a], capsys)[0] == 0
        assert run(argv + ["--out", b], capsys)[0] == 0
        assert a.read_bytes() == b.read_bytes(), name
    assert (tmp_path / "traj_a_events.csv").read_bytes() == (tmp_path / "traj_b_events.csv").read_bytes()


def test_different_seed_different_output(tmp_path, capsys):
    run(["waveform", "--seed", 1, "--x", 0.8, "--y", 0.8, "--out", tmp_path / "a.csv"], capsys)
    run(["waveform", "--seed", 2, "--x", 0.8, "--y", 0.8, "--out", tmp_path / "b.csv"], capsys)
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "b.csv").read_bytes()


UNITS = {
    "trajectory": {"--peak-window": "frames", "--peak-margin": "dimensionless", "--confirm-frames": "frames",
                   "--gain-hysteresis": "dimensionless", "--power-scale": "W", "--frames-per-waypoint": "frames"},
    "bermap": {"--bits-per-point": "bits", "--noise-std": "A"},
    "kurtosis": {"input": "A"},
    "waveform": {"--x": "m", "--y": "m"},
}


@pytest.mark.parametrize("command", sorted(UNITS))
def test_help_lists_every_flag_with_units(command):
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command").choices[command]
    text = " ".join(sub.format_help().split())
    for action in sub._actions:
        for opt in action.option_strings:
            assert opt in text
    for flag, unit in UNITS[command].items():
        action = next(a for a in sub._actions if flag in a.option_strings or a.dest == flag)
        assert unit in action.help, flag


def test_module_entry_point_help():
    exe = shutil.which("vlc-handover")
    argv = [exe] if exe else [sys.executable, "-m", "vlc_handover"]
    res = subprocess.run(argv + ["--help"], capture_output=True, text=True, check=True)
    for command in ("trajectory", "bermap", "kurtosis", "waveform"):
        assert command in res.stdout
