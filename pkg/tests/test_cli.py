import csv
import json

import numpy as np
import pytest

from metashield.cli import main
from metashield.perturb import AudioClip
from metashield.wavio import read_wav, write_wav

FAST = ["--set", "search.unit_step_deg=30", "--set", "search.user_step_deg=15"]
SMALL_EVAL = ["--set", "eval.trials=2", "--set", "eval.n_speakers=2",
              "--set", "eval.utterances_per_speaker=1"] + FAST


def run(*argv):
    return main([str(a) for a in argv])


def manifest(path):
    return json.loads((path.parent / "run_manifest.json").read_text())


def test_gain_curve(tmp_path, capsys):
    out = tmp_path / "g.csv"
    assert run("gain-curve", "--out", out, "--step", 10) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["frequency_hz", "gain"] and len(rows) == 82
    assert float(rows[41][0]) == 500.0 and float(rows[41][1]) == 73.0
    m = manifest(out)
    assert m["command"] == "gain-curve" and m["outputs"]["gain_curve"]["path"] == "g.csv"
    assert "gain_curve" in capsys.readouterr().out


def test_design_layout_and_gain_map(tmp_path):
    lay = tmp_path / "layout.json"
    assert run("design-layout", "--out", lay, "--max-units", 2, *FAST) == 0
    data = json.loads(lay.read_text())
    assert len(data["unit_angles_deg"]) == 2
    gm = tmp_path / "map.csv"
    assert run("gain-map", "--layout", lay, "--out", gm) == 0
    assert len(gm.read_text().splitlines()) == 182
    assert manifest(gm)["inputs"]["layout_path"]["sha256"]
    gm2 = tmp_path / "map2.csv"
    angles = ",".join(str(a) for a in data["unit_angles_deg"])
    assert run("gain-map", "--angles", angles, "--out", gm2) == 0
    assert gm.read_bytes() == gm2.read_bytes()


def test_schedule_seed(tmp_path):
    a, b = tmp_path / "a" / "s.json", tmp_path / "b" / "s.json"
    assert run("schedule", "--seed", 5, "--frames", 100, "--out", a) == 0
    assert run("schedule", "--seed", 5, "--frames", 100, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    data = json.loads(a.read_text())
    assert data["seed"] == 5 and len(data["u_values"]) == 100


def test_anonymize_and_evaluate(tmp_path):
    rng = np.random.default_rng(0)
    src = tmp_path / "in.wav"
    write_wav(src, AudioClip(0.05 * rng.standard_normal(16000), 16000), "FLOAT")
    anon = tmp_path / "anon.wav"
    assert run("anonymize", "--in", src, "--out", anon, "--seed", 3) == 0
    side = json.loads((tmp_path / "anon.wav.json").read_text())
    assert 0 < side["normalization"] <= 1
    assert len(read_wav(anon).samples) == 16000
    pairs = tmp_path / "pairs.csv"
    pairs.write_text("original,anonymized\nin.wav,anon.wav\nin.wav,in.wav\n")
    rep = tmp_path / "rep.json"
    assert run("evaluate", "--pairs", pairs, "--out", rep) == 0
    report = json.loads(rep.read_text())
    assert report["trials"] == 2
    assert report["similarities"][1] == pytest.approx(1.0)
    assert (tmp_path / "rep_trials.csv").exists()
    assert report["oob_distortion_db"]
    assert all(np.isfinite(db) for _, db in report["oob_distortion_db"])


def test_zero_coupling_is_transparent(tmp_path):
    rng = np.random.default_rng(1)
    src = tmp_path / "in.wav"
    x = AudioClip(0.05 * rng.standard_normal(8000), 16000)
    write_wav(src, x, "FLOAT")
    anon = tmp_path / "anon.wav"
    assert run("anonymize", "--in", src, "--out", anon, "--coupling", 0) == 0
    assert np.max(np.abs(read_wav(anon).samples - read_wav(src).samples)) < 1e-6


def test_pipeline_and_rerun(tmp_path, capsys):
    out = tmp_path / "run"
    assert run("pipeline", "--out", out, *SMALL_EVAL) == 0
    m = json.loads((out / "run_manifest.json").read_text())
    assert m["outputs"]["timing"]["sha256"] is None
    for name in ("gain_curve", "layout", "gain_map", "report", "trials", "trial000_anon"):
        assert m["outputs"][name]["sha256"]
    before = (out / "report.json").read_bytes()
    assert run("rerun", out / "run_manifest.json") == 0
    assert (out / "report.json").read_bytes() == before
    assert "byte-identical" in capsys.readouterr().out
    # tampering with a recorded hash is caught as an invariant violation
    m["outputs"]["report"]["sha256"] = "0" * 64
    (out / "run_manifest.json").write_text(json.dumps(m))
    assert run("rerun", out / "run_manifest.json") == 4


def test_threads_do_not_change_outputs(tmp_path, monkeypatch):
    monkeypatch.setenv("METASHIELD_THREADS", "1")
    assert run("gain-map", "--angles", "0,-120,120", "--out", tmp_path / "a.csv") == 0
    monkeypatch.setenv("METASHIELD_THREADS", "3")
    assert run("gain-map", "--angles", "0,-120,120", "--out", tmp_path / "b.csv") == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


@pytest.mark.parametrize("argv", [
    ["gain-curve", "--f-lo", "900", "--f-hi", "100"],
    ["gain-curve", "--set", "resonator.bogus=1"],
    ["gain-curve", "--set", "nonsense"],
    ["gain-curve", "--seed", "-1"],
    ["design-layout", "--max-units", "0"],
    ["gain-map", "--angles", "0,400"],
    ["schedule", "--frames", "0"],
])
def test_usage_errors(tmp_path, argv, capsys):
    assert run(*argv, "--out", tmp_path / "x") == 2
    assert "metashield:" in capsys.readouterr().err


def test_data_errors(tmp_path, capsys):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"RIFF\x04\x00\x00\x00WAVE")
    assert run("anonymize", "--in", bad, "--out", tmp_path / "o.wav") == 3
    assert "byte 12" in capsys.readouterr().err
    assert run("anonymize", "--in", tmp_path / "missing.wav", "--out", tmp_path / "o.wav") == 3
    pairs = tmp_path / "p.csv"
    pairs.write_text("a,b\n")
    assert run("evaluate", "--pairs", pairs, "--out", tmp_path / "r.json") == 3
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json")
    assert run("gain-curve", "--config", cfg, "--out", tmp_path / "g.csv") in (2, 3)


def test_argparse_usage_exit():
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2
