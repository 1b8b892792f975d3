import json

import numpy as np
import pytest

from tatrecon import io
from tatrecon.cli import main
from tatrecon.config import ConfigError, RunConfig
from tatrecon.pipeline import run_experiment

SMALL = {"nx": 61, "phantom": "bump", "T_mult": 2.0, "max_terms": 3}


def test_shorthand_and_sections_agree():
    a = RunConfig.from_dict({"nx": 101, "T_mult": 3, "sides": "NW", "speed": "c3", "noise": 0.1,
                             "seed": 7, "method": "tr"})
    b = RunConfig.from_dict({"grid": {"nx": 101}, "time": {"T_mult": 3}, "mask": {"sides": "NW"},
                             "speed": {"kind": "c3"}, "noise": {"level": 0.1, "seed": 7},
                             "method": {"kind": "tr"}})
    assert a.to_dict() == b.to_dict()
    assert a.mask.side_set() == {"N", "W"}
    assert RunConfig.from_dict({"sides": "all"}).mask.side_set() == set("NSEW")


@pytest.mark.parametrize("raw", [
    {"T_mult": 0}, {"T": -1.0}, {"T": 2.0, "T_mult": 2.0}, {"nx": 4}, {"sides": "Q"},
    {"speed": "c9"}, {"phantom": "image"}, {"max_terms": 0}, {"noise": -0.1},
    {"colour": "red"}, {"grid": {"spacing": 0.1}}, {"region_K": [0, 1]},
])
def test_invalid_configs_rejected(raw):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(raw)


def test_time_resolution():
    assert RunConfig.from_dict({}).time.resolve(1.5) == 6.0
    assert RunConfig.from_dict({"T_mult": 2}).time.resolve(1.5) == 3.0
    assert RunConfig.from_dict({"T": 2.5}).time.resolve(1.5) == 2.5


def test_load_names_from_file(tmp_path):
    p = tmp_path / "demo.json"
    p.write_text(json.dumps(SMALL))
    assert RunConfig.load(p).name == "demo"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        RunConfig.load(p)


def test_tr_method_single_iterate():
    rep = run_experiment(RunConfig.from_dict(dict(SMALL, method="tr")))
    assert rep["iterates"] == 1 and "ns" not in rep
    assert rep["rel_error"] == rep["tr"]["rel_error"] > 0


def test_end_to_end_artifacts(tmp_path):
    rep = run_experiment(RunConfig.from_dict(SMALL), tmp_path)
    assert rep["ns"]["rel_error"] <= rep["tr"]["rel_error"]
    assert rep["iterates"] == len(rep["ns"]["term_norms"]) <= 3
    for name in ("report.json", "config.json", "trace.bin", "phantom.bin", "tr.bin", "ns.bin",
                 "phantom.pgm", "ns.pgm", "x_slices.csv", "y_slices.csv", "iterates/g00.bin"):
        assert (tmp_path / name).exists(), name
    manifest = json.loads((tmp_path / "manifest.json").read_text())["files"]
    for e in manifest:
        assert io.sha256(tmp_path / e["path"]) == e["sha256"]
    assert json.loads((tmp_path / "report.json").read_text()) == json.loads(json.dumps(rep))


def test_runs_are_byte_identical(tmp_path):
    cfg = RunConfig.from_dict(dict(SMALL, noise=0.05, seed=3))
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    a = json.loads((tmp_path / "a" / "manifest.json").read_text())
    b = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert a == b


# ---------------------------------------------------------------- CLI


def test_cli_eikonal(tmp_path, capsys):
    assert main(["eikonal", "--speed", "c1", "--nx", "201", "--out", str(tmp_path)]) == 0
    T0 = float(capsys.readouterr().out.split("=")[1])
    assert T0 == pytest.approx(1.16, rel=0.02)
    assert (tmp_path / "traveltime.bin").exists()


def test_cli_raytrace_tir(tmp_path, capsys):
    rc = main(["raytrace", "--speed", "c4", "--from", "0,0", "--dir", "0.7,0.7",
               "--t-max", "3", "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "total_internal_reflection" in out or "tir" in out.lower()
    events = json.loads((tmp_path / "events.json").read_text())
    first = events[0]
    assert first["alpha_in"] == pytest.approx(45.0, abs=1e-6)
    assert (tmp_path / "rays.csv").read_text().startswith("ray_id,x,y")


def test_cli_phantom_uses_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("TATRECON_OUTPUT", str(tmp_path))
    assert main(["phantom", "--kind", "zebra", "--nx", "101"]) == 0
    img = io.read_pgm(tmp_path / "phantom" / "zebra.pgm")
    assert img.shape == (101, 101) and img.max() == 255


def test_cli_forward_reconstruct_round_trip(tmp_path, capsys):
    common = ["--nx", "61", "--speed", "c1"]
    assert main(["forward", *common, "--phantom", "bump", "--T-mult", "2", "--out", str(tmp_path / "fw")]) == 0
    assert main(["reconstruct", *common, "--trace", str(tmp_path / "fw" / "trace.bin"),
                 "--truth", str(tmp_path / "fw" / "phantom"), "--max-terms", "3",
                 "--out", str(tmp_path / "rc")]) == 0
    out = capsys.readouterr().out
    assert "final error" in out
    report = json.loads((tmp_path / "rc" / "report.json").read_text())
    assert report["n_terms"] <= 3
    ns = io.read_field(tmp_path / "rc" / "ns")
    truth = io.read_field(tmp_path / "fw" / "phantom")
    assert np.linalg.norm(ns.data - truth.data) < np.linalg.norm(truth.data)


def test_cli_run_and_compare(tmp_path, capsys):
    cfg = tmp_path / "small.json"
    cfg.write_text(json.dumps(SMALL))
    assert main(["run", str(cfg), "--out", str(tmp_path / "out")]) == 0
    assert main(["compare", str(tmp_path / "out" / "small")]) == 0
    out = capsys.readouterr().out
    assert "small" in out and "TR err" in out


def test_cli_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"T_mult": 0}))
    assert main(["run", str(bad)]) == 2
    assert "error" in capsys.readouterr().err
    assert main(["raytrace", "--from", "0,0", "--dir", "0,0"]) == 2
    assert main(["reconstruct", "--trace", str(tmp_path / "missing.bin")]) == 2


def test_documented_ns_config_reports_error():
    cfg = RunConfig.from_dict({"speed": "c1", "phantom": "shepp_logan", "T_mult": 4, "method": "ns",
                               "max_terms": 9, "nx": 101})
    rep = run_experiment(cfg)
    assert 0 < rep["rel_error"] == rep["ns"]["rel_error"] < rep["tr"]["rel_error"]
    assert "tr" in rep and rep["iterates"] == len(rep["ns"]["rel_errors"])


def test_default_grid_is_301():
    assert RunConfig.from_dict({}).grid.nx == 301
